"""1D advection-diffusion of contrast agent on the vessel tree.

Each segment carries a uniform finite-volume grid.  Advection is first-order
upwind (monotone, positivity-preserving), diffusion explicit centered, both
operator-split and sub-stepped to satisfy CFL <= 0.9 and diffusion number
<= 0.4.  Junctions mix by flow-weighted upstream flux; the inlet carries the
injection mixing boundary and the six outlets are outflow boundaries that
accumulate exited mass.

The injected volume is a concentration boundary condition only: the 1000
mm^3/s catheter stream does not perturb the hemodynamic solve.  This is a
deliberate fidelity gap of the surrogate (the full model resolves the
catheter); it targets profile morphology, not absolute augmented flow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import CflViolation, MismatchError, UnknownBranch
from .hemo import SimulationResult
from .vessels import Branch, OUTLET_BRANCHES, VesselTree

CONTRAST_DIFFUSIVITY = 0.00203  # mm^2/s
DEFAULT_C0 = 0.4                # mg/mm^3  (400 mg/mL)
DEFAULT_RATE = 1000.0           # mm^3/s
DEFAULT_VOLUME = 2000.0         # mm^3     (2 mL)

_MAX_SUBSTEPS = 10_000
_CFL_LIMIT = 0.9
_DIFF_LIMIT = 0.4


@dataclass(frozen=True)
class InjectionSpec:
    """Constant-rate contrast injection starting at t_start."""

    t_start: float
    c0: float = DEFAULT_C0
    rate: float = DEFAULT_RATE
    volume: float = DEFAULT_VOLUME

    def __post_init__(self):
        if self.c0 <= 0 or self.rate <= 0 or self.volume <= 0:
            raise ValueError("c0, rate and volume must be > 0")

    @property
    def duration(self) -> float:
        return self.volume / self.rate

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

@njit(cache=True)
def _advance(c, c2, node_c, q_steps, dt,
             ncell, off, dx, area, prox, dist, node_kind,
             seg_in_ptr, seg_in_idx, seg_out_ptr, seg_out_idx,
             c0, rate, inj_t0, inj_t1, diffusivity,
             rec_stride, rec_conc, rec_distal, rec_mass, distal_cells):
    """March the full-rate flow history; returns 0 on success, 1 on CFL failure.

    node_kind: 0 = inlet, 1 = internal junction, 2 = outlet.
    seg_in_*: segments whose distal end touches the node (CSR layout);
    seg_out_*: segments whose proximal end touches the node.
    """
    n_seg = ncell.shape[0]
    n_nodes = node_kind.shape[0]
    n_steps = q_steps.shape[0]
    injected = 0.0
    exited = 0.0
    rec = 0

    for i in range(n_steps + 1):
        if i % rec_stride == 0:
            dom = 0.0
            for s in range(n_seg):
                acc = 0.0
                for ii in range(ncell[s]):
                    acc += c[off[s] + ii]
                dom += acc * area[s] * dx[s]
            for j in range(c.shape[0]):
                rec_conc[rec, j] = c[j]
            for k in range(distal_cells.shape[0]):
                rec_distal[rec, k] = c[distal_cells[k]]
            rec_mass[rec, 0] = injected
            rec_mass[rec, 1] = dom
            rec_mass[rec, 2] = exited
            rec += 1
        if i == n_steps:
            break

        t = i * dt
        # stability-limited sub-step count for this flow interval
        need = 1.0
        for s in range(n_seg):
            v = abs(q_steps[i, s]) / area[s]
            a = v * dt / (_CFL_LIMIT * dx[s])
            if a > need:
                need = a
            d = diffusivity * dt / (_DIFF_LIMIT * dx[s] * dx[s])
            if d > need:
                need = d
        n_sub = int(math.ceil(need - 1e-12))
        if n_sub > _MAX_SUBSTEPS:
            return 1
        sub_dt = dt / n_sub

        for sub in range(n_sub):
            t_sub = t + sub * sub_dt

            # node concentrations: flow-weighted mix of upstream-side values
            for nd in range(n_nodes):
                if node_kind[nd] == 2:
                    node_c[nd] = 0.0  # outflow boundary; reversal draws fresh fluid
                    continue
                if node_kind[nd] == 0:
                    if inj_t0 <= t_sub < inj_t1:
                        q_in_tree = 0.0
                        for jj in range(seg_out_ptr[nd], seg_out_ptr[nd + 1]):
                            q_in_tree += q_steps[i, seg_out_idx[jj]]
                        if q_in_tree < 0.0:
                            q_in_tree = 0.0
                        node_c[nd] = c0 * rate / (rate + q_in_tree)
                    else:
                        node_c[nd] = 0.0
                    continue
                num = 0.0
                den = 0.0
                for jj in range(seg_in_ptr[nd], seg_in_ptr[nd + 1]):
                    s = seg_in_idx[jj]
                    q = q_steps[i, s]
                    if q > 0.0:
                        num += q * c[off[s] + ncell[s] - 1]
                        den += q
                for jj in range(seg_out_ptr[nd], seg_out_ptr[nd + 1]):
                    s = seg_out_idx[jj]
                    q = q_steps[i, s]
                    if q < 0.0:
                        num += (-q) * c[off[s]]
                        den += (-q)
                node_c[nd] = num / den if den > 0.0 else 0.0

            # upwind advection, per segment
            for s in range(n_seg):
                a0 = off[s]
                n = ncell[s]
                q = q_steps[i, s]
                v = q / area[s]
                nu = v * sub_dt / dx[s]
                if v > 0.0:
                    up = node_c[prox[s]]
                    c2[a0] = c[a0] - nu * (c[a0] - up)
                    for ii in range(1, n):
                        c2[a0 + ii] = c[a0 + ii] - nu * (c[a0 + ii] - c[a0 + ii - 1])
                    if node_kind[prox[s]] == 0:
                        injected += q * up * sub_dt
                    if node_kind[dist[s]] == 2:
                        exited += q * c[a0 + n - 1] * sub_dt
                elif v < 0.0:
                    dn = node_c[dist[s]]
                    for ii in range(n - 1):
                        c2[a0 + ii] = c[a0 + ii] - nu * (c[a0 + ii + 1] - c[a0 + ii])
                    c2[a0 + n - 1] = c[a0 + n - 1] - nu * (dn - c[a0 + n - 1])
                    if node_kind[prox[s]] == 0:
                        exited += (-q) * c[a0] * sub_dt
                else:
                    for ii in range(n):
                        c2[a0 + ii] = c[a0 + ii]

            # explicit centered diffusion with zero-flux segment ends
            if diffusivity > 0.0:
                for s in range(n_seg):
                    a0 = off[s]
                    n = ncell[s]
                    if n < 2:
                        continue
                    al = diffusivity * sub_dt / (dx[s] * dx[s])
                    carry = c2[a0]
                    c2[a0] = c2[a0] + al * (c2[a0 + 1] - c2[a0])
                    for ii in range(1, n - 1):
                        tmp = c2[a0 + ii]
                        c2[a0 + ii] = tmp + al * (c2[a0 + ii + 1] - 2.0 * tmp + carry)
                        carry = tmp
                    tmp = c2[a0 + n - 1]
                    c2[a0 + n - 1] = tmp + al * (carry - tmp)

            for j in range(c.shape[0]):
                c[j] = c2[j]
    return 0


# ---------------------------------------------------------------------------
# mesh assembly and public API
# ---------------------------------------------------------------------------

def _build_mesh(tree: VesselTree):
    """Per-segment grids (dx = min(0.5 mm, L/10)) and node CSR adjacency."""
    n_seg = len(tree.segments)
    ncell = np.empty(n_seg, dtype=np.int64)
    dx = np.empty(n_seg)
    area = np.empty(n_seg)
    prox = np.empty(n_seg, dtype=np.int64)
    dist = np.empty(n_seg, dtype=np.int64)
    for s, seg in enumerate(tree.segments):
        target = min(0.5, seg.length / 10.0)
        n = int(math.ceil(seg.length / target - 1e-9))
        ncell[s] = n
        dx[s] = seg.length / n
        area[s] = seg.area
        prox[s] = tree.prox_node(seg.id)
        dist[s] = tree.dist_node(seg.id)
    off = np.zeros(n_seg, dtype=np.int64)
    off[1:] = np.cumsum(ncell)[:-1]
    total = int(ncell.sum())

    n_nodes = tree.n_nodes
    node_kind = np.ones(n_nodes, dtype=np.int64)
    node_kind[0] = 0
    for b in OUTLET_BRANCHES:
        node_kind[tree.outlet_node(b)] = 2

    seg_in = [[] for _ in range(n_nodes)]
    seg_out = [[] for _ in range(n_nodes)]
    for s in range(n_seg):
        seg_in[dist[s]].append(s)
        seg_out[prox[s]].append(s)
    def _csr(lists):
        ptr = np.zeros(n_nodes + 1, dtype=np.int64)
        for nd in range(n_nodes):
            ptr[nd + 1] = ptr[nd] + len(lists[nd])
        flat = [s for members in lists for s in members]
        idx = np.array(flat, dtype=np.int64) if flat else np.zeros(0, dtype=np.int64)
        return ptr, idx
    in_ptr, in_idx = _csr(seg_in)
    out_ptr, out_idx = _csr(seg_out)
    return ncell, off, dx, area, prox, dist, node_kind, in_ptr, in_idx, out_ptr, out_idx, total


@dataclass
class ConcentrationField:
    """Contrast concentration history on the tree grid, sampled at ~100 Hz."""

    times: np.ndarray          # (n_rec,)
    conc: np.ndarray           # (n_rec, total_cells)
    distal: np.ndarray         # (n_rec, 6) concentration at each outlet's last cell
    injected: np.ndarray       # (n_rec,) cumulative mass through the inlet, mg
    domain: np.ndarray         # (n_rec,) mass resident in the tree, mg
    exited: np.ndarray         # (n_rec,) cumulative mass through outflow faces, mg
    seg_ids: tuple
    seg_ncells: np.ndarray
    seg_offsets: np.ndarray
    seg_dx: np.ndarray
    seg_radius: np.ndarray
    injection: InjectionSpec
    diffusivity: float
    branch_order: tuple = OUTLET_BRANCHES

    def segment_profile(self, seg_id: str, sample: int) -> np.ndarray:
        s = self.seg_ids.index(seg_id)
        a0 = self.seg_offsets[s]
        return self.conc[sample, a0:a0 + self.seg_ncells[s]]

    def mass_balance_error(self) -> float:
        """Max |injected - domain - exited| relative to total injected mass."""
        resid = np.abs(self.injected - self.domain - self.exited)
        scale = max(self.injected[-1], 1e-300)
        return float(resid.max() / scale)


def transport(hemo: SimulationResult, tree: VesselTree, inj: InjectionSpec,
              diffusivity: float = CONTRAST_DIFFUSIVITY) -> ConcentrationField:
    """Advect/diffuse contrast through the tree driven by the recorded flows.

    ``hemo`` should be recorded at full rate (output_stride = 1); any uniform
    sampling is accepted and sub-stepped for stability, but coarse sampling
    degrades the flow pulsatility seen by the transport scheme.
    """
    if tuple(s.id for s in tree.segments) != tuple(hemo.seg_ids):
        raise MismatchError("vessel tree does not match the hemodynamic result")
    t_end = float(hemo.t[-1])
    if not (0.0 <= inj.t_start and inj.t_end <= t_end):
        raise MismatchError(
            f"injection window [{inj.t_start}, {inj.t_end}] outside simulated time [0, {t_end}]")

    (ncell, off, dx, area, prox, dist, node_kind,
     in_ptr, in_idx, out_ptr, out_idx, total) = _build_mesh(tree)

    dt = hemo.dt_sample
    n_steps = len(hemo.t) - 1
    q_steps = np.ascontiguousarray(hemo.q_seg[:-1])  # flow held constant over each interval

    rec_stride = max(1, int(round(0.01 / dt)))
    if n_steps % rec_stride != 0:
        rec_stride = 1
    n_rec = n_steps // rec_stride + 1

    c = np.zeros(total)
    c2 = np.zeros(total)
    node_c = np.zeros(tree.n_nodes)
    rec_conc = np.zeros((n_rec, total))
    rec_distal = np.zeros((n_rec, 6))
    rec_mass = np.zeros((n_rec, 3))
    distal_cells = np.array(
        [off[tree.segment_index(tree.outlet_ids[b])] + ncell[tree.segment_index(tree.outlet_ids[b])] - 1
         for b in OUTLET_BRANCHES], dtype=np.int64)

    status = _advance(c, c2, node_c, q_steps, dt,
                      ncell, off, dx, area, prox, dist, node_kind,
                      in_ptr, in_idx, out_ptr, out_idx,
                      inj.c0, inj.rate, inj.t_start, inj.t_end, diffusivity,
                      rec_stride, rec_conc, rec_distal, rec_mass, distal_cells)
    if status != 0:
        raise CflViolation(
            f"cannot satisfy CFL {_CFL_LIMIT} / diffusion {_DIFF_LIMIT} with <= {_MAX_SUBSTEPS} sub-steps")

    return ConcentrationField(
        times=hemo.t[::rec_stride].copy(),
        conc=rec_conc,
        distal=rec_distal,
        injected=rec_mass[:, 0],
        domain=rec_mass[:, 1],
        exited=rec_mass[:, 2],
        seg_ids=tuple(s.id for s in tree.segments),
        seg_ncells=ncell,
        seg_offsets=off,
        seg_dx=dx,
        seg_radius=np.array([s.radius for s in tree.segments]),
        injection=inj,
        diffusivity=diffusivity,
    )


def distal_series(field: ConcentrationField, branch: Branch):
    """(t, c) at the most distal cell of the branch's outlet segment."""
    try:
        k = field.branch_order.index(Branch(branch))
    except ValueError:
        raise UnknownBranch(f"{branch!r} is not an outlet branch") from None
    return field.times, field.distal[:, k]


def injection_start(state, x4: float, period: float) -> float:
    """Injection onset: start of the protocol's injection cycle plus x4 of a period."""
    from .hemo import INJECTION_CYCLE
    return (INJECTION_CYCLE[state] + float(x4)) * period
