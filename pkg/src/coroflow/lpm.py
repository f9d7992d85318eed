"""Lumped-parameter models: heart/elastance, systemic Windkessel, coronary outlets.

Holds the calibrated reference parameter sets for the resting and hyperemic
physiologic states and the design-variable scaling used by the dataset
campaign.  Units: Pa, s, mm^3 throughout (pressures converted to mmHg only at
reporting boundaries).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import RangeError
from .vessels import Branch, LEFT_BRANCHES, OUTLET_BRANCHES, RIGHT_BRANCHES

MMHG = 133.322          # Pa per mmHg
LMIN = 1e6 / 60.0       # mm^3/s per L/min


class PhysioState(str, Enum):
    REST = "REST"
    HYPEREMIA = "HYPEREMIA"


@dataclass(frozen=True)
class ElastanceParams:
    """Five-parameter time-varying left-ventricular elastance, Pa/mm^3."""

    e_max: float
    e_min: float
    t_max: float  # time to peak elastance, s
    t_r: float    # end of relaxation, s
    period: float

    def __post_init__(self):
        if not self.e_max > self.e_min > 0:
            raise ValueError("require e_max > e_min > 0")
        if not 0 < self.t_max < self.t_r < self.period:
            raise ValueError("require 0 < t_max < t_r < period")


def elastance(params: ElastanceParams, t):
    """Evaluate E(t), periodic in t.

    Two-cosine form: half-cosine rise to e_max at t_max, half-cosine
    relaxation back to e_min at t_r, flat diastole until the period ends.
    Accepts scalars or arrays.
    """
    tm = np.mod(t, params.period)
    rise = 0.5 * (1.0 - np.cos(np.pi * tm / params.t_max))
    fall = 0.5 * (1.0 + np.cos(np.pi * (tm - params.t_max) / (params.t_r - params.t_max)))
    s = np.where(tm <= params.t_max, rise, np.where(tm <= params.t_r, fall, 0.0))
    out = params.e_min + (params.e_max - params.e_min) * s
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class HeartParams:
    r_mv: float  # mitral valve resistance, Pa*s/mm^3
    l_mv: float  # mitral valve inductance, Pa*s^2/mm^3
    r_av: float
    l_av: float
    p_la: float  # fixed left atrial pressure, Pa
    elastance: ElastanceParams
    v_unstressed: float = 0.0  # mm^3

    def __post_init__(self):
        for name in ("r_mv", "l_mv", "r_av", "l_av", "p_la"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.v_unstressed < 0:
            raise ValueError("v_unstressed must be >= 0")


@dataclass(frozen=True)
class WindkesselParams:
    c_s: float    # systemic compliance, mm^3/Pa
    r_sp: float   # proximal systemic resistance, Pa*s/mm^3
    r_sd: float   # distal systemic resistance, Pa*s/mm^3
    p_ref: float = 0.0

    def __post_init__(self):
        if min(self.c_s, self.r_sp, self.r_sd) <= 0:
            raise ValueError("Windkessel elements must be > 0")
        if self.p_ref < 0:
            raise ValueError("p_ref must be >= 0")


@dataclass(frozen=True)
class CoronaryOutletParams:
    r_a: float    # large artery resistance
    r_ap: float   # proximal small artery resistance
    r_ad: float   # distal small artery resistance
    c_a: float    # arterial compliance
    c_im: float   # intramyocardial compliance
    im_coupling: float  # fraction of LV pressure applied to c_im
    p_v: float = 0.0    # coronary venous reference, Pa

    def __post_init__(self):
        if min(self.r_a, self.r_ap, self.r_ad, self.c_a, self.c_im) <= 0:
            raise ValueError("coronary resistances and compliances must be > 0")
        if not 0.0 <= self.im_coupling <= 1.0:
            raise ValueError("im_coupling must lie in [0, 1]")

    @property
    def total_resistance(self) -> float:
        return self.r_a + self.r_ap + self.r_ad


@dataclass(frozen=True)
class LpmParameterSet:
    state: PhysioState
    heart: HeartParams
    windkessel: WindkesselParams
    coronary: dict  # Branch -> CoronaryOutletParams, six entries
    period: float

    def __post_init__(self):
        missing = [b.value for b in OUTLET_BRANCHES if b not in self.coronary]
        if missing:
            raise ValueError(f"missing coronary outlet parameters: {missing}")
        if abs(self.period - self.heart.elastance.period) > 1e-12:
            raise ValueError("period must match elastance period")


# -- reference values ----------------------------------------------------------

# valve constants, shared by both states; t_r - t_max is fixed at 0.1 s
_VALVES = dict(r_mv=3.9e-4, l_mv=1e-5, r_av=1e-5, l_av=1e-5)
_T_RELAX = 0.1

_SYSTEMIC = {
    PhysioState.REST: dict(c_s=18.382, r_sp=0.009, r_sd=0.158,
                           e_max=0.190, e_min=0.015, t_max=0.390,
                           p_la=2286.880, period=1.0),
    PhysioState.HYPEREMIA: dict(c_s=16.361, r_sp=0.005, r_sd=0.087,
                                e_max=0.228, e_min=0.015, t_max=0.409,
                                p_la=2376.910, period=0.73),
}

# per-branch (r_a, r_ap, r_ad, c_a, c_im)
_CORONARY = {
    PhysioState.REST: {
        Branch.LAD: (4.544, 1.363, 12.696, 0.014, 0.135),
        Branch.OM1: (3.732, 1.120, 10.429, 0.014, 0.135),
        Branch.OM2: (7.153, 2.146, 19.989, 0.007, 0.135),
        Branch.LCX: (6.398, 1.919, 17.878, 0.007, 0.135),
        Branch.AM: (4.757, 1.427, 13.293, 0.012, 0.189),
        Branch.RCA: (3.199, 0.960, 8.939, 0.012, 0.189),
    },
    PhysioState.HYPEREMIA: {
        Branch.LAD: (1.159, 0.348, 3.239, 0.014, 0.128),
        Branch.OM1: (0.952, 0.286, 2.660, 0.014, 0.128),
        Branch.OM2: (1.825, 0.547, 5.099, 0.007, 0.128),
        Branch.LCX: (1.632, 0.490, 4.561, 0.007, 0.128),
        Branch.AM: (1.214, 0.364, 3.391, 0.011, 0.180),
        Branch.RCA: (0.816, 0.245, 2.280, 0.011, 0.180),
    },
}

# Intramyocardial pressure coupling P_im = gamma * P_LV.  Left branches feel
# the full LV compression; right branches a reduced fraction standing in for
# the unmodelled right ventricle.
GAMMA_LEFT = 1.0
GAMMA_RIGHT = 0.2


def reference_parameters(state: PhysioState) -> LpmParameterSet:
    """Calibrated reference parameter set for the requested physiologic state."""
    state = PhysioState(state)
    sysp = _SYSTEMIC[state]
    ela = ElastanceParams(e_max=sysp["e_max"], e_min=sysp["e_min"],
                          t_max=sysp["t_max"], t_r=sysp["t_max"] + _T_RELAX,
                          period=sysp["period"])
    heart = HeartParams(p_la=sysp["p_la"], elastance=ela, v_unstressed=0.0, **_VALVES)
    wk = WindkesselParams(c_s=sysp["c_s"], r_sp=sysp["r_sp"], r_sd=sysp["r_sd"])
    coronary = {}
    for branch, (r_a, r_ap, r_ad, c_a, c_im) in _CORONARY[state].items():
        gamma = GAMMA_LEFT if branch in LEFT_BRANCHES else GAMMA_RIGHT
        coronary[branch] = CoronaryOutletParams(r_a=r_a, r_ap=r_ap, r_ad=r_ad,
                                                c_a=c_a, c_im=c_im, im_coupling=gamma)
    return LpmParameterSet(state=state, heart=heart, windkessel=wk,
                           coronary=coronary, period=sysp["period"])


# -- design-variable scaling -----------------------------------------------

# admissible (x1, x2, x3, x4) boxes per state
DESIGN_RANGES = {
    PhysioState.REST: ((1.0, 2.0), (1.0, 2.0), (0.5, 1.0), (0.0, 1.0)),
    PhysioState.HYPEREMIA: ((1.0, 5.0), (1.0, 5.0), (0.1, 1.0), (0.0, 1.0)),
}


@dataclass(frozen=True)
class DesignPoint:
    """One sampled point in the microvascular/injection design space.

    x1 scales (r_a, r_ap), x2 scales r_ad, x3 scales (c_a, c_im); x4 is the
    injection-onset phase within the injection cardiac cycle.
    """

    x1: float
    x2: float
    x3: float
    x4: float
    state: PhysioState

    def as_tuple(self):
        return (self.x1, self.x2, self.x3, self.x4)

    def in_range(self) -> bool:
        box = DESIGN_RANGES[self.state]
        return all(lo <= v <= hi for v, (lo, hi) in zip(self.as_tuple(), box))


def scale_parameters(base: LpmParameterSet, x: DesignPoint) -> LpmParameterSet:
    """Scale every coronary outlet by the design point; heart/Windkessel untouched."""
    if x.state != base.state:
        raise RangeError(f"design point state {x.state.value} != base state {base.state.value}")
    if not x.in_range():
        raise RangeError(f"design point {x.as_tuple()} outside the {x.state.value} box")
    coronary = {
        b: replace(p, r_a=p.r_a * x.x1, r_ap=p.r_ap * x.x1,
                   r_ad=p.r_ad * x.x2, c_a=p.c_a * x.x3, c_im=p.c_im * x.x3)
        for b, p in base.coronary.items()
    }
    return replace(base, coronary=coronary)
