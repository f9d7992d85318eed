"""Closed-loop 0D hemodynamics on the epicardial tree.

The system couples a time-varying-elastance left ventricle (with diode
valves), a three-element systemic Windkessel, the resistive epicardial tree,
and six coronary outlet ladders (r_a - c_a - r_ap - c_im - r_ad) whose
intramyocardial compliance is compressed by a fraction of LV pressure.

Integration is fixed-step RK4; the purely resistive node network is solved
exactly inside every stage from the precomputed inverse conductance matrix,
which is constant for a given tree/parameter set.  Valves switch between
steps only, so a single step is a smooth ODE flow and runs are bit-for-bit
reproducible.

State vector layout (16 floats):
    [0] v_lv   [1] q_av   [2] q_mv   [3] p_cs
    [4:10]  p_ca  per outlet branch
    [10:16] pi_im per outlet branch, where pi_im = p_cim - gamma*p_lv
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InsufficientData, NumericalDivergence
from .lpm import LMIN, MMHG, LpmParameterSet, PhysioState
from .vessels import (
    Branch,
    LEFT_BRANCHES,
    OUTLET_BRANCHES,
    RIGHT_BRANCHES,
    VesselTree,
    poiseuille_resistance,
)

# protocol constants: cycle counts and the cycle in which contrast is injected
DEFAULT_N_CYCLES = {PhysioState.REST: 8, PhysioState.HYPEREMIA: 9}
INJECTION_CYCLE = {PhysioState.REST: 2, PhysioState.HYPEREMIA: 4}  # 0-based

# documented cold start; the first two cycles are discarded downstream
COLD_START_V_LV = 120_000.0     # mm^3
COLD_START_PRESSURE = 10_000.0  # Pa on every capacitor node

_NSTATE = 16


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _elastance_scalar(hp, t):
    # hp: [e_max, e_min, t_max, t_r, period, r_mv, l_mv, r_av, l_av, p_la, v0]
    tm = t % hp[4]
    if tm <= hp[2]:
        s = 0.5 * (1.0 - math.cos(math.pi * tm / hp[2]))
    elif tm <= hp[3]:
        s = 0.5 * (1.0 + math.cos(math.pi * (tm - hp[2]) / (hp[3] - hp[2])))
    else:
        s = 0.0
    return hp[1] + (hp[0] - hp[1]) * s


@njit(cache=True)
def _solve_nodes(y, wk, cor, ainv, outlet_nodes, b, p):
    """Exact solve of the resistive node network for the current state."""
    n = b.shape[0]
    for i in range(n):
        b[i] = 0.0
    b[0] = y[1] + y[3] / wk[1]  # inlet: aortic-valve flow + Windkessel coupling
    for k in range(6):
        b[outlet_nodes[k]] += y[4 + k] / cor[k, 0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += ainv[i, j] * b[j]
        p[i] = acc


@njit(cache=True)
def _rhs(t, y, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes, dy, b, p):
    e_now = _elastance_scalar(hp, t)
    p_lv = e_now * (y[0] - hp[10])
    _solve_nodes(y, wk, cor, ainv, outlet_nodes, b, p)
    p_root = p[0]

    dy[1] = (p_lv - p_root - hp[7] * y[1]) / hp[8] if av_open else 0.0
    dy[2] = (hp[9] - p_lv - hp[5] * y[2]) / hp[6] if mv_open else 0.0
    dy[0] = y[2] - y[1]
    dy[3] = ((p_root - y[3]) / wk[1] - (y[3] - wk[3]) / wk[2]) / wk[0]

    for k in range(6):
        r_a, r_ap, r_ad = cor[k, 0], cor[k, 1], cor[k, 2]
        c_a, c_im = cor[k, 3], cor[k, 4]
        p_o = p[outlet_nodes[k]]
        p_ca = y[4 + k]
        p_cim = y[10 + k] + cor[k, 5] * p_lv
        q_a = (p_o - p_ca) / r_a
        q_ap = (p_ca - p_cim) / r_ap
        q_ad = (p_cim - cor[k, 6]) / r_ad
        dy[4 + k] = (q_a - q_ap) / c_a
        dy[10 + k] = (q_ap - q_ad) / c_im


@njit(cache=True)
def _rk4(t, y, dt, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes,
         k1, k2, k3, k4, yt, b, p):
    _rhs(t, y, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes, k1, b, p)
    for i in range(_NSTATE):
        yt[i] = y[i] + 0.5 * dt * k1[i]
    _rhs(t + 0.5 * dt, yt, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes, k2, b, p)
    for i in range(_NSTATE):
        yt[i] = y[i] + 0.5 * dt * k2[i]
    _rhs(t + 0.5 * dt, yt, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes, k3, b, p)
    for i in range(_NSTATE):
        yt[i] = y[i] + dt * k3[i]
    _rhs(t + dt, yt, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes, k4, b, p)
    for i in range(_NSTATE):
        y[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _run(y, n_steps, dt, stride, hp, wk, cor, ainv, outlet_nodes,
         seg_prox, seg_dist, seg_g,
         rec_p, rec_q, rec_y, rec_plv):
    """Integrate n_steps; record every stride-th step (plus the final one).

    Returns 0 on success, 1 on a non-finite state.
    """
    n_nodes = ainv.shape[0]
    n_seg = seg_g.shape[0]
    b = np.empty(n_nodes)
    p = np.empty(n_nodes)
    k1 = np.empty(_NSTATE)
    k2 = np.empty(_NSTATE)
    k3 = np.empty(_NSTATE)
    k4 = np.empty(_NSTATE)
    yt = np.empty(_NSTATE)
    av_open = False
    mv_open = False

    for i in range(n_steps + 1):
        t = i * dt
        e_now = _elastance_scalar(hp, t)
        p_lv = e_now * (y[0] - hp[10])
        _solve_nodes(y, wk, cor, ainv, outlet_nodes, b, p)

        if i % stride == 0:
            r = i // stride
            for j in range(n_nodes):
                rec_p[r, j] = p[j]
            for s in range(n_seg):
                rec_q[r, s] = (p[seg_prox[s]] - p[seg_dist[s]]) * seg_g[s]
            for j in range(_NSTATE):
                rec_y[r, j] = y[j]
            rec_plv[r] = p_lv

        if i == n_steps:
            break

        # valve openings are evaluated on the pre-step state
        if not av_open and p_lv > p[0]:
            av_open = True
        if not mv_open and hp[9] > p_lv:
            mv_open = True

        _rk4(t, y, dt, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes,
             k1, k2, k3, k4, yt, b, p)

        # a valve closes the moment its flow is exhausted; flow pinned at 0
        if av_open and y[1] <= 0.0:
            y[1] = 0.0
            av_open = False
        if mv_open and y[2] <= 0.0:
            y[2] = 0.0
            mv_open = False

        for j in range(_NSTATE):
            if not np.isfinite(y[j]):
                return 1
    return 0


# ---------------------------------------------------------------------------
# python-level assembly
# ---------------------------------------------------------------------------

def _pack_heart(params: LpmParameterSet) -> np.ndarray:
    h = params.heart
    e = h.elastance
    return np.array([e.e_max, e.e_min, e.t_max, e.t_r, e.period,
                     h.r_mv, h.l_mv, h.r_av, h.l_av, h.p_la, h.v_unstressed])


def _pack_windkessel(params: LpmParameterSet) -> np.ndarray:
    w = params.windkessel
    return np.array([w.c_s, w.r_sp, w.r_sd, w.p_ref])


def _pack_coronary(params: LpmParameterSet) -> np.ndarray:
    rows = []
    for b in OUTLET_BRANCHES:
        c = params.coronary[b]
        rows.append([c.r_a, c.r_ap, c.r_ad, c.c_a, c.c_im, c.im_coupling, c.p_v])
    return np.array(rows)


def build_nodal_system(tree: VesselTree, params: LpmParameterSet):
    """Conductance matrix of the resistive network and its exact inverse.

    Unknowns are the tree node pressures (inlet = node 0).  Known boundary
    pressures (Windkessel capacitor, coronary c_a nodes) appear as grounded
    conductances; the aortic-valve flow enters the inlet as a current source.
    """
    n = tree.n_nodes
    g_mat = np.zeros((n, n))
    seg_prox = np.empty(len(tree.segments), dtype=np.int64)
    seg_dist = np.empty(len(tree.segments), dtype=np.int64)
    seg_g = np.empty(len(tree.segments))
    for s, seg in enumerate(tree.segments):
        i, j = tree.prox_node(seg.id), tree.dist_node(seg.id)
        g = 1.0 / poiseuille_resistance(seg)
        seg_prox[s], seg_dist[s], seg_g[s] = i, j, g
        g_mat[i, i] += g
        g_mat[j, j] += g
        g_mat[i, j] -= g
        g_mat[j, i] -= g
    g_mat[0, 0] += 1.0 / params.windkessel.r_sp
    outlet_nodes = np.array([tree.outlet_node(b) for b in OUTLET_BRANCHES], dtype=np.int64)
    for k, b in enumerate(OUTLET_BRANCHES):
        g_mat[outlet_nodes[k], outlet_nodes[k]] += 1.0 / params.coronary[b].r_a
    ainv = np.linalg.inv(g_mat)
    return ainv, seg_prox, seg_dist, seg_g, outlet_nodes


# ---------------------------------------------------------------------------
# public types and operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimulationConfig:
    tree: VesselTree
    params: LpmParameterSet
    dt: float = 1e-4
    n_cycles: int | None = None      # None -> protocol default for the state
    output_stride: int = 100
    injection: object = None         # InjectionSpec carried for the transport stage

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")
        if self.cycles < 3:
            raise ValueError("n_cycles must be >= 3")

    @property
    def cycles(self) -> int:
        return self.n_cycles if self.n_cycles is not None else DEFAULT_N_CYCLES[self.params.state]


@dataclass
class HemoState:
    """Publicly visible instantaneous state (capacitor node pressures in Pa)."""

    v_lv: float
    q_av: float
    q_mv: float
    p_cs: float
    p_ca: np.ndarray   # (6,) ordered as OUTLET_BRANCHES
    p_cim: np.ndarray  # (6,)
    av_open: bool = False
    mv_open: bool = False


@dataclass
class SimulationResult:
    t: np.ndarray            # (n,)
    p_node: np.ndarray       # (n, n_nodes)
    q_seg: np.ndarray        # (n, n_segments), in tree segment order
    v_lv: np.ndarray
    p_lv: np.ndarray
    q_av: np.ndarray
    q_mv: np.ndarray
    states: np.ndarray       # (n, 16) raw state vectors
    cycle_starts: np.ndarray  # sample indices of cycle boundaries, incl. 0 and end
    dt_sample: float
    period: float
    state: PhysioState
    tree: VesselTree
    params: LpmParameterSet
    seg_ids: tuple = ()
    outlet_nodes: dict = field(default_factory=dict)

    @property
    def p_ao(self) -> np.ndarray:
        """Aortic-root (inlet node) pressure series, Pa."""
        return self.p_node[:, 0]

    def p_distal(self, branch: Branch) -> np.ndarray:
        return self.p_node[:, self.outlet_nodes[branch]]

    def q_branch(self, branch: Branch) -> np.ndarray:
        seg_id = self.tree.outlet_ids[branch]
        return self.q_seg[:, self.tree.segment_index(seg_id)]

    def q_inlet(self) -> np.ndarray:
        """Total flow entering the tree (root segment flow)."""
        return self.q_seg[:, self.tree.segment_index(self.tree.inlet_id)]

    def final_cycle(self) -> tuple[int, int]:
        """Sample index range [i0, i1] of the last complete cycle."""
        if len(self.cycle_starts) < 2:
            raise InsufficientData("no complete cycle recorded")
        return int(self.cycle_starts[-2]), int(self.cycle_starts[-1])

    def cycle_mean(self, series: np.ndarray, cycle: int = -1) -> float:
        starts = self.cycle_starts
        if len(starts) < 2:
            raise InsufficientData("no complete cycle recorded")
        i0, i1 = int(starts[cycle - 1]), int(starts[cycle])
        return float(np.trapezoid(series[i0:i1 + 1], self.t[i0:i1 + 1]) / (self.t[i1] - self.t[i0]))


def _initial_state_vector(cfg: SimulationConfig) -> np.ndarray:
    params = cfg.params
    y = np.empty(_NSTATE)
    y[0] = COLD_START_V_LV
    y[1] = 0.0
    y[2] = 0.0
    y[3] = COLD_START_PRESSURE
    e0 = params.heart.elastance
    p_lv0 = e0.e_min * (COLD_START_V_LV - params.heart.v_unstressed)
    for k, b in enumerate(OUTLET_BRANCHES):
        y[4 + k] = COLD_START_PRESSURE
        y[10 + k] = COLD_START_PRESSURE - params.coronary[b].im_coupling * p_lv0
    return y


def initial_state(cfg: SimulationConfig) -> HemoState:
    """Documented cold start: V_LV = 120 mL, capacitor nodes at 10 kPa, valves shut."""
    y = _initial_state_vector(cfg)
    return _state_from_vector(y, cfg, t=0.0)


def _state_from_vector(y, cfg, t):
    params = cfg.params
    from .lpm import elastance as _ela
    p_lv = _ela(params.heart.elastance, t) * (y[0] - params.heart.v_unstressed)
    gam = np.array([params.coronary[b].im_coupling for b in OUTLET_BRANCHES])
    return HemoState(v_lv=float(y[0]), q_av=float(y[1]), q_mv=float(y[2]),
                     p_cs=float(y[3]), p_ca=y[4:10].copy(),
                     p_cim=y[10:16] + gam * p_lv)


def _vector_from_state(state: HemoState, cfg: SimulationConfig, t: float) -> np.ndarray:
    params = cfg.params
    from .lpm import elastance as _ela
    p_lv = _ela(params.heart.elastance, t) * (state.v_lv - params.heart.v_unstressed)
    gam = np.array([params.coronary[b].im_coupling for b in OUTLET_BRANCHES])
    y = np.empty(_NSTATE)
    y[0], y[1], y[2], y[3] = state.v_lv, state.q_av, state.q_mv, state.p_cs
    y[4:10] = state.p_ca
    y[10:16] = state.p_cim - gam * p_lv
    return y


def step(state: HemoState, t: float, cfg: SimulationConfig) -> HemoState:
    """Advance one RK4 step of cfg.dt from time t (valve logic included)."""
    hp = _pack_heart(cfg.params)
    wk = _pack_windkessel(cfg.params)
    cor = _pack_coronary(cfg.params)
    ainv, seg_prox, seg_dist, seg_g, outlet_nodes = build_nodal_system(cfg.tree, cfg.params)
    y = _vector_from_state(state, cfg, t)
    n = ainv.shape[0]
    b, p = np.empty(n), np.empty(n)
    k1, k2, k3, k4, yt = (np.empty(_NSTATE) for _ in range(5))

    e_now = _elastance_scalar(hp, t)
    p_lv = e_now * (y[0] - hp[10])
    _solve_nodes(y, wk, cor, ainv, outlet_nodes, b, p)
    av_open = state.av_open or p_lv > p[0]
    mv_open = state.mv_open or hp[9] > p_lv
    _rk4(t, y, cfg.dt, av_open, mv_open, hp, wk, cor, ainv, outlet_nodes,
         k1, k2, k3, k4, yt, b, p)
    if av_open and y[1] <= 0.0:
        y[1] = 0.0
        av_open = False
    if mv_open and y[2] <= 0.0:
        y[2] = 0.0
        mv_open = False
    if not np.all(np.isfinite(y)):
        raise NumericalDivergence(f"non-finite state after step at t={t}")
    out = _state_from_vector(y, cfg, t + cfg.dt)
    out.av_open, out.mv_open = av_open, mv_open
    return out


def simulate(cfg: SimulationConfig) -> SimulationResult:
    """Run the configured number of cardiac cycles from the documented cold start."""
    params = cfg.params
    period = params.period
    steps_per_cycle = int(round(period / cfg.dt))
    if abs(steps_per_cycle * cfg.dt - period) > 1e-9:
        raise ValueError("dt must divide the cardiac period")
    if steps_per_cycle % cfg.output_stride != 0:
        raise ValueError("output_stride must divide the steps per cycle")
    n_cycles = cfg.cycles
    n_steps = n_cycles * steps_per_cycle

    hp = _pack_heart(params)
    wk = _pack_windkessel(params)
    cor = _pack_coronary(params)
    ainv, seg_prox, seg_dist, seg_g, outlet_nodes = build_nodal_system(cfg.tree, params)

    n_rec = n_steps // cfg.output_stride + 1
    n_nodes = ainv.shape[0]
    n_seg = len(cfg.tree.segments)
    rec_p = np.empty((n_rec, n_nodes))
    rec_q = np.empty((n_rec, n_seg))
    rec_y = np.empty((n_rec, _NSTATE))
    rec_plv = np.empty(n_rec)

    y = _initial_state_vector(cfg)
    status = _run(y, n_steps, cfg.dt, cfg.output_stride, hp, wk, cor, ainv,
                  outlet_nodes, seg_prox, seg_dist, seg_g,
                  rec_p, rec_q, rec_y, rec_plv)
    if status != 0:
        raise NumericalDivergence("hemodynamic state became non-finite; "
                                  "check parameter magnitudes and dt")

    dt_sample = cfg.dt * cfg.output_stride
    t = np.arange(n_rec) * dt_sample
    rec_per_cycle = steps_per_cycle // cfg.output_stride
    cycle_starts = np.arange(n_cycles + 1) * rec_per_cycle
    return SimulationResult(
        t=t, p_node=rec_p, q_seg=rec_q,
        v_lv=rec_y[:, 0], p_lv=rec_plv, q_av=rec_y[:, 1], q_mv=rec_y[:, 2],
        states=rec_y, cycle_starts=cycle_starts, dt_sample=dt_sample,
        period=period, state=params.state, tree=cfg.tree, params=params,
        seg_ids=tuple(s.id for s in cfg.tree.segments),
        outlet_nodes={b: cfg.tree.outlet_node(b) for b in OUTLET_BRANCHES},
    )


# ---------------------------------------------------------------------------
# summary metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HemoMetrics:
    """Whole-run hemodynamic summary over the final complete cycle."""

    q_mean_lmin: float
    q_max_lmin: float
    p_sys_mmhg: float
    p_dia_mmhg: float
    edv_ml: float
    esv_ml: float
    sv_ml: float
    ef_pct: float
    q_lct_lmin: float
    q_rct_lmin: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def summarize_hemodynamics(result: SimulationResult) -> HemoMetrics:
    if len(result.cycle_starts) < 3:
        raise InsufficientData("need at least two complete cycles")
    i0, i1 = result.final_cycle()
    sl = slice(i0, i1 + 1)
    t = result.t[sl]
    span = t[-1] - t[0]

    def cmean(series):
        return float(np.trapezoid(series[sl], t) / span)

    q_mean = cmean(result.q_av)
    q_max = float(np.max(result.q_av[sl]))
    p_sys = float(np.max(result.p_ao[sl]))
    p_dia = float(np.min(result.p_ao[sl]))
    edv = float(np.max(result.v_lv[sl]))
    esv = float(np.min(result.v_lv[sl]))
    sv = edv - esv
    q_lct = sum(cmean(result.q_branch(b)) for b in LEFT_BRANCHES)
    q_rct = sum(cmean(result.q_branch(b)) for b in RIGHT_BRANCHES)
    return HemoMetrics(
        q_mean_lmin=q_mean / LMIN,
        q_max_lmin=q_max / LMIN,
        p_sys_mmhg=p_sys / MMHG,
        p_dia_mmhg=p_dia / MMHG,
        edv_ml=edv / 1000.0,
        esv_ml=esv / 1000.0,
        sv_ml=sv / 1000.0,
        ef_pct=100.0 * sv / edv,
        q_lct_lmin=q_lct / LMIN,
        q_rct_lmin=q_rct / LMIN,
    )
