import math

import numpy as np
import pytest

import coroflow as cf
from coroflow import Branch, PhysioState, SimulationConfig, default_tree, reference_parameters, simulate
from coroflow.errors import CflViolation, MismatchError, UnknownBranch
from coroflow.transport import (
    InjectionSpec,
    _advance,
    distal_series,
    injection_start,
    transport,
)

REST = PhysioState.REST
HYPER = PhysioState.HYPEREMIA


def run_single_segment(q_of_t, t_end, dt, length=50.0, radius=1.5,
                       inj=InjectionSpec(t_start=0.0), diffusivity=0.0,
                       n_cells=100, rec_stride=10):
    """Drive the transport kernel on one segment: inlet node -> outlet node."""
    area = math.pi * radius ** 2
    n_steps = int(round(t_end / dt))
    t = np.arange(n_steps) * dt
    q_steps = np.asarray(q_of_t(t), dtype=float).reshape(n_steps, 1)

    ncell = np.array([n_cells], dtype=np.int64)
    off = np.array([0], dtype=np.int64)
    dx = np.array([length / n_cells])
    areas = np.array([area])
    prox = np.array([0], dtype=np.int64)
    dist = np.array([1], dtype=np.int64)
    node_kind = np.array([0, 2], dtype=np.int64)
    in_ptr = np.array([0, 0, 1], dtype=np.int64)
    in_idx = np.array([0], dtype=np.int64)
    out_ptr = np.array([0, 1, 1], dtype=np.int64)
    out_idx = np.array([0], dtype=np.int64)

    assert n_steps % rec_stride == 0
    n_rec = n_steps // rec_stride + 1
    c = np.zeros(n_cells)
    c2 = np.zeros(n_cells)
    node_c = np.zeros(2)
    rec_conc = np.zeros((n_rec, n_cells))
    rec_distal = np.zeros((n_rec, 1))
    rec_mass = np.zeros((n_rec, 3))
    distal_cells = np.array([n_cells - 1], dtype=np.int64)

    status = _advance(c, c2, node_c, q_steps, dt, ncell, off, dx, areas,
                      prox, dist, node_kind, in_ptr, in_idx, out_ptr, out_idx,
                      inj.c0, inj.rate, inj.t_start, inj.t_end, diffusivity,
                      rec_stride, rec_conc, rec_distal, rec_mass, distal_cells)
    times = np.arange(n_rec) * dt * rec_stride
    return status, times, rec_conc, rec_distal[:, 0], rec_mass


class TestSingleSegmentOracles:
    def test_pure_advection_pulse_centroid(self):
        """Method-of-characteristics: a short pulse arrives at L/v."""
        Q = 4000.0
        L, r = 50.0, 1.5
        area = math.pi * r ** 2
        v = Q / area
        inj = InjectionSpec(t_start=0.0, rate=1000.0, volume=50.0)  # 0.05 s pulse
        status, t, conc, distal, mass = run_single_segment(
            lambda tt: np.full_like(tt, Q), t_end=0.4, dt=1e-4, length=L,
            radius=r, inj=inj, diffusivity=0.0)
        assert status == 0
        centroid = np.trapezoid(t * distal, t) / np.trapezoid(distal, t)
        expected = inj.duration / 2 + L / v
        dx = L / 100
        assert abs(centroid - expected) <= dx / v + 1e-3

    def test_mass_closure_after_washout(self):
        Q = 4000.0
        inj = InjectionSpec(t_start=0.0)  # 2 s full bolus
        status, t, conc, distal, mass = run_single_segment(
            lambda tt: np.full_like(tt, Q), t_end=4.0, dt=1e-4, inj=inj,
            diffusivity=0.00203)
        assert status == 0
        injected, domain, exited = mass[-1]
        assert domain < 1e-9 * injected
        assert exited == pytest.approx(injected, rel=1e-3)
        # influx through the mixing boundary: c0*rate*Q/(Q+rate)*duration
        expected_injected = inj.c0 * inj.rate * Q / (Q + inj.rate) * inj.duration
        assert injected == pytest.approx(expected_injected, rel=1e-6)
        # audit closes at every recorded sample
        resid = np.abs(mass[:, 0] - mass[:, 1] - mass[:, 2])
        assert resid.max() <= 1e-3 * injected

    def test_inlet_saturates_at_c0_for_tiny_blood_flow(self):
        """rate >> q limit of the mixing formula: boundary concentration -> c0."""
        inj = InjectionSpec(t_start=0.0, rate=1e9, volume=1e9 * 0.5)
        status, t, conc, distal, mass = run_single_segment(
            lambda tt: np.full_like(tt, 1000.0), t_end=0.5, dt=1e-3,
            inj=inj, rec_stride=1)
        assert status == 0
        assert conc[-1, 0] == pytest.approx(inj.c0, rel=1e-4)
        assert conc.max() <= inj.c0 + 1e-12

    def test_transit_time_inverse_in_flow(self):
        """Halving the flow doubles (T_mn - bolus centroid) within 2%."""
        L, r = 50.0, 1.5
        inj = InjectionSpec(t_start=0.0)
        tm = {}
        for Q in (4000.0, 2000.0):
            status, t, conc, distal, mass = run_single_segment(
                lambda tt: np.full_like(tt, Q), t_end=8.0, dt=1e-4,
                length=L, radius=r, inj=inj, diffusivity=0.00203)
            assert status == 0
            tmn = np.trapezoid(t * distal, t) / np.trapezoid(distal, t)
            tm[Q] = tmn - inj.duration / 2
        assert tm[2000.0] / tm[4000.0] == pytest.approx(2.0, rel=0.02)

    def test_boundedness_and_positivity_with_reversal(self):
        inj = InjectionSpec(t_start=0.0)
        status, t, conc, distal, mass = run_single_segment(
            lambda tt: 3000.0 * np.sin(2 * np.pi * tt / 0.8) + 1500.0,
            t_end=4.0, dt=1e-4, inj=inj, diffusivity=0.0)
        assert status == 0
        assert conc.min() >= 0.0
        assert conc.max() <= inj.c0 + 1e-12

    def test_total_variation_nonincreasing_after_injection(self):
        """Pure advection is TV-diminishing once the inflow boundary is quiet.

        TV is measured on the profile padded with its ghost values (0 after
        the injection ends), the proper TVD statement on a bounded domain.
        """
        inj = InjectionSpec(t_start=0.0, volume=500.0)  # 0.5 s pulse
        status, t, conc, distal, mass = run_single_segment(
            lambda tt: 2500.0 * np.sin(2 * np.pi * tt / 0.9) + 1200.0,
            t_end=3.0, dt=1e-4, inj=inj, diffusivity=0.0, rec_stride=100)
        assert status == 0
        after = t > inj.t_end + 0.05
        padded = np.pad(conc[after], ((0, 0), (1, 1)))
        tv = np.abs(np.diff(padded, axis=1)).sum(axis=1)
        assert np.all(np.diff(tv) <= 1e-12)

    def test_washout_returns_to_zero(self):
        inj = InjectionSpec(t_start=0.0)
        status, t, conc, distal, mass = run_single_segment(
            lambda tt: np.full_like(tt, 5000.0), t_end=6.0, dt=1e-4, inj=inj,
            diffusivity=0.00203)
        assert status == 0
        assert distal[-1] < 1e-6 * inj.c0

    def test_cfl_violation_flagged(self):
        status, *_ = run_single_segment(
            lambda tt: np.full_like(tt, 1e12), t_end=0.01, dt=1e-3,
            rec_stride=1)
        assert status == 1


def test_two_identical_branches_identical_series():
    """Symmetric junction split: equal geometry and flow give equal profiles."""
    L, r = 40.0, 1.5
    n = 80
    area = math.pi * r ** 2
    dt = 1e-4
    n_steps = 20_000
    q_trunk = 4000.0
    q_steps = np.tile([q_trunk, q_trunk / 2, q_trunk / 2], (n_steps, 1))

    ncell = np.array([n, n, n], dtype=np.int64)
    off = np.array([0, n, 2 * n], dtype=np.int64)
    dx = np.full(3, L / n)
    areas = np.full(3, area)
    prox = np.array([0, 1, 1], dtype=np.int64)
    dist = np.array([1, 2, 3], dtype=np.int64)
    node_kind = np.array([0, 1, 2, 2], dtype=np.int64)
    in_ptr = np.array([0, 0, 1, 2, 3], dtype=np.int64)
    in_idx = np.array([0, 1, 2], dtype=np.int64)
    out_ptr = np.array([0, 1, 3, 3, 3], dtype=np.int64)
    out_idx = np.array([0, 1, 2], dtype=np.int64)

    inj = InjectionSpec(t_start=0.0)
    n_rec = n_steps // 100 + 1
    c = np.zeros(3 * n)
    c2 = np.zeros(3 * n)
    node_c = np.zeros(4)
    rec_conc = np.zeros((n_rec, 3 * n))
    rec_distal = np.zeros((n_rec, 2))
    rec_mass = np.zeros((n_rec, 3))
    distal_cells = np.array([2 * n - 1, 3 * n - 1], dtype=np.int64)
    status = _advance(c, c2, node_c, q_steps, dt, ncell, off, dx, areas,
                      prox, dist, node_kind, in_ptr, in_idx, out_ptr, out_idx,
                      inj.c0, inj.rate, inj.t_start, inj.t_end, 0.00203,
                      100, rec_conc, rec_distal, rec_mass, distal_cells)
    assert status == 0
    np.testing.assert_array_equal(rec_distal[:, 0], rec_distal[:, 1])
    resid = np.abs(rec_mass[:, 0] - rec_mass[:, 1] - rec_mass[:, 2])
    assert resid.max() <= 1e-3 * rec_mass[-1, 0]


@pytest.fixture(scope="module")
def rest_field():
    tree = default_tree()
    params = reference_parameters(REST)
    cfg = SimulationConfig(tree=tree, params=params, n_cycles=6, output_stride=1)
    res = simulate(cfg)
    inj = InjectionSpec(t_start=injection_start(REST, 0.0, params.period))
    return res, transport(res, tree, inj)


class TestTreeTransport:
    def test_mass_balance_on_tree(self, rest_field):
        _, field = rest_field
        assert field.mass_balance_error() < 1e-3

    def test_concentration_bounds(self, rest_field):
        _, field = rest_field
        assert field.conc.min() >= 0.0
        assert field.conc.max() <= field.injection.c0 + 1e-12

    def test_distal_series_causal(self, rest_field):
        _, field = rest_field
        for b in cf.OUTLET_BRANCHES:
            t, c = distal_series(field, b)
            assert np.all(c[t < field.injection.t_start] == 0.0)

    def test_distal_series_sampling_rate(self, rest_field):
        _, field = rest_field
        t, _ = distal_series(field, Branch.LAD)
        assert np.allclose(np.diff(t), 0.01)

    def test_unknown_branch(self, rest_field):
        _, field = rest_field
        with pytest.raises(UnknownBranch):
            distal_series(field, "LAD2")

    def test_tree_mismatch_rejected(self, rest_field):
        res, _ = rest_field
        other = cf.load_tree(cf.save_tree(default_tree()).replace('"lad"', '"ladx"'))
        with pytest.raises(MismatchError):
            transport(res, other, InjectionSpec(t_start=2.0))

    def test_window_outside_run_rejected(self, rest_field):
        res, _ = rest_field
        with pytest.raises(MismatchError):
            transport(res, default_tree(), InjectionSpec(t_start=5.5))


def test_injection_start_protocol():
    assert injection_start(REST, 0.0, 1.0) == pytest.approx(2.0)
    assert injection_start(REST, 0.5, 1.0) == pytest.approx(2.5)
    assert injection_start(HYPER, 0.0, 0.73) == pytest.approx(2.92)
    assert injection_start(HYPER, 1.0, 0.73) == pytest.approx(3.65)


def test_injection_spec_validation():
    with pytest.raises(ValueError):
        InjectionSpec(t_start=0.0, c0=-1.0)
    spec = InjectionSpec(t_start=1.0)
    assert spec.duration == pytest.approx(2.0)
    assert spec.t_end == pytest.approx(3.0)
