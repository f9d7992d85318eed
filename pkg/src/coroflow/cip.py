"""Contrast intensity profiles: the angiographic pixel-count surrogate.

A cell is "bright" when its concentration exceeds the binarization threshold;
its contribution to the projected area is its side view 2*r*dx.  There is no
view-angle geometry because the tree has no 3D embedding: this is the
module's principal fidelity gap relative to projection-based angiogram
processing, and it is deliberate.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateSeries, EmptyWindow
from .lpm import PhysioState
from .transport import ConcentrationField
from .vessels import VesselTree

CIP_LENGTH = 256
# 1 mg/mL expressed in mg/mm^3; small versus c0 = 0.4 so the mask tracks
# contrast presence rather than intensity
DEFAULT_THRESHOLD = 0.001


class CipScope(str, Enum):
    LEFT_TREE = "LEFT_TREE"
    WHOLE = "WHOLE"


@dataclass(frozen=True)
class Cip:
    """Normalized fixed-length contrast intensity profile."""

    values: np.ndarray       # (256,) in [0, 1]
    window_start: float      # injection onset, s
    window_end: float        # simulation end, s
    state: PhysioState
    threshold: float

    def __post_init__(self):
        if len(self.values) != CIP_LENGTH:
            raise ValueError(f"CIP must hold exactly {CIP_LENGTH} samples")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.window_start, self.window_end, CIP_LENGTH)


def resample(values, n: int, t=None) -> np.ndarray:
    """Linear interpolation of a series onto n uniform abscissae spanning it."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) < 2:
        raise DegenerateSeries("need a 1D series with at least 2 points")
    if n < 2:
        raise DegenerateSeries("need at least 2 output samples")
    if t is None:
        t = np.arange(len(values), dtype=float)
    else:
        t = np.asarray(t, dtype=float)
        if t.shape != values.shape:
            raise DegenerateSeries("abscissae and values must have equal length")
    tq = np.linspace(t[0], t[-1], n)
    return np.interp(tq, t, values)


def pixel_count_surrogate(field: ConcentrationField, tree: VesselTree,
                          scope: CipScope = CipScope.LEFT_TREE,
                          threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Projected bright area (mm^2) per recorded sample over the chosen scope."""
    if scope == CipScope.LEFT_TREE:
        ids = set(tree.left_segment_ids())
    else:
        ids = {s.id for s in tree.segments}
    area = np.zeros(field.conc.shape[0])
    for s, seg_id in enumerate(field.seg_ids):
        if seg_id not in ids:
            continue
        a0 = int(field.seg_offsets[s])
        n = int(field.seg_ncells[s])
        bright = field.conc[:, a0:a0 + n] > threshold
        area += (2.0 * field.seg_radius[s] * field.seg_dx[s]) * bright.sum(axis=1)
    return area


def extract_cip(field: ConcentrationField, tree: VesselTree,
                scope: CipScope = CipScope.LEFT_TREE,
                threshold: float = DEFAULT_THRESHOLD,
                state: PhysioState | None = None) -> Cip:
    """Pixel-count surrogate, resampled to 256 points over [onset, end], max-normalized."""
    t0 = field.injection.t_start
    t1 = float(field.times[-1])
    mask = field.times >= t0 - 1e-12
    if mask.sum() < 2 or t1 <= t0:
        raise EmptyWindow("injection onset leaves no recorded window")
    area = pixel_count_surrogate(field, tree, scope, threshold)
    values = resample(area[mask], CIP_LENGTH, t=field.times[mask])
    peak = values.max()
    if peak > 0:
        values = values / peak
    if state is None:
        state = getattr(field, "state", None)
    return Cip(values=values, window_start=t0, window_end=t1,
               state=state, threshold=threshold)


def cip_peak_time(cip: Cip) -> float:
    """Elapsed time from window start to the first maximum."""
    i = int(np.argmax(cip.values))
    return float(cip.times[i] - cip.window_start)


def cip_half_decay_time(cip: Cip) -> float:
    """Elapsed time from window start until the profile first falls to half its peak."""
    v = cip.values
    i = int(np.argmax(v))
    half = 0.5 * v[i]
    after = np.nonzero(v[i:] <= half)[0]
    if len(after) == 0:
        return float(cip.window_end - cip.window_start)
    j = i + int(after[0])
    t = cip.times
    if j == 0 or v[j] == v[j - 1]:
        return float(t[j] - cip.window_start)
    # linear interpolation between the straddling samples
    frac = (v[j - 1] - half) / (v[j - 1] - v[j])
    return float(t[j - 1] + frac * (t[j] - t[j - 1]) - cip.window_start)


# -- serialization -------------------------------------------------------------

def cip_to_csv(cip: Cip) -> str:
    header = ["state", "threshold", "window_start", "window_end"] + \
             [f"v{i:03d}" for i in range(CIP_LENGTH)]
    state = cip.state.value if cip.state is not None else ""
    row = [state, repr(float(cip.threshold)), repr(float(cip.window_start)),
           repr(float(cip.window_end))] + [repr(float(v)) for v in cip.values]
    return ",".join(header) + "\n" + ",".join(row) + "\n"


def cip_from_csv(text: str) -> Cip:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if len(lines) != 2:
        raise DegenerateSeries("CIP csv must hold a header and one row")
    fields = lines[1].split(",")
    state = PhysioState(fields[0]) if fields[0] else None
    return Cip(values=np.array([float(x) for x in fields[4:]]),
               window_start=float(fields[2]), window_end=float(fields[3]),
               state=state, threshold=float(fields[1]))
