import numpy as np
import pytest

from coroflow import (
    Branch,
    DesignPoint,
    PhysioState,
    RangeError,
    elastance,
    reference_parameters,
    scale_parameters,
)

REST = PhysioState.REST
HYPER = PhysioState.HYPEREMIA


class TestElastance:
    def test_endpoint_values_rest(self):
        p = reference_parameters(REST).heart.elastance
        assert elastance(p, 0.0) == pytest.approx(0.015, abs=1e-12)
        assert elastance(p, p.t_max) == pytest.approx(0.190, abs=1e-12)
        assert elastance(p, 0.390) == pytest.approx(0.190, abs=1e-12)
        assert elastance(p, p.t_r) == pytest.approx(0.015, abs=1e-12)

    def test_periodicity(self):
        p = reference_parameters(HYPER).heart.elastance
        t = np.linspace(0, p.period, 211)
        np.testing.assert_allclose(elastance(p, t), elastance(p, t + p.period),
                                   rtol=0, atol=1e-12)

    def test_range(self):
        p = reference_parameters(REST).heart.elastance
        e = elastance(p, np.linspace(0, 3 * p.period, 4001))
        assert np.all(e >= p.e_min - 1e-15)
        assert np.all(e <= p.e_max + 1e-15)

    def test_continuity_at_knots(self):
        p = reference_parameters(REST).heart.elastance
        eps = 1e-9
        for knot in (p.t_max, p.t_r):
            left = elastance(p, knot - eps)
            right = elastance(p, knot + eps)
            assert left == pytest.approx(right, abs=1e-6)


class TestReferenceParameters:
    def test_rest_systemic_values(self):
        p = reference_parameters(REST)
        assert p.heart.elastance.e_max == 0.190
        assert p.windkessel.c_s == 18.382
        assert p.windkessel.r_sp == 0.009
        assert p.windkessel.r_sd == 0.158
        assert p.heart.p_la == 2286.880
        lad = p.coronary[Branch.LAD]
        assert (lad.r_a, lad.r_ap, lad.r_ad) == (4.544, 1.363, 12.696)

    def test_hyperemia_values(self):
        p = reference_parameters(HYPER)
        lad = p.coronary[Branch.LAD]
        assert (lad.r_a, lad.r_ap, lad.r_ad) == (1.159, 0.348, 3.239)
        assert lad.c_im == 0.128
        assert p.period == 0.73

    def test_valve_constants_shared(self):
        for state in (REST, HYPER):
            h = reference_parameters(state).heart
            assert h.r_av == 1e-5
            assert h.l_av == 1e-5
            assert h.l_mv == 1e-5
            assert h.r_mv == 3.9e-4

    def test_relaxation_gap(self):
        for state in (REST, HYPER):
            e = reference_parameters(state).heart.elastance
            assert e.t_r - e.t_max == pytest.approx(0.1, abs=1e-12)

    def test_im_coupling_split(self):
        p = reference_parameters(REST)
        for b in (Branch.LAD, Branch.OM1, Branch.OM2, Branch.LCX):
            assert p.coronary[b].im_coupling == 1.0
        for b in (Branch.AM, Branch.RCA):
            assert p.coronary[b].im_coupling == 0.2

    def test_venous_references_zero(self):
        p = reference_parameters(REST)
        assert p.windkessel.p_ref == 0.0
        assert all(c.p_v == 0.0 for c in p.coronary.values())
        assert p.heart.v_unstressed == 0.0


class TestScaling:
    def test_identity(self):
        base = reference_parameters(REST)
        x = DesignPoint(1.0, 1.0, 1.0, 0.3, REST)
        scaled = scale_parameters(base, x)
        assert scaled.coronary == base.coronary
        assert scaled.heart == base.heart

    def test_x2_scales_r_ad(self):
        base = reference_parameters(HYPER)
        scaled = scale_parameters(base, DesignPoint(1.0, 5.0, 1.0, 0.0, HYPER))
        assert scaled.coronary[Branch.LAD].r_ad == pytest.approx(16.195, rel=1e-12)
        assert scaled.coronary[Branch.LAD].r_a == base.coronary[Branch.LAD].r_a

    def test_x3_scales_compliances(self):
        base = reference_parameters(REST)
        scaled = scale_parameters(base, DesignPoint(1.0, 1.0, 0.5, 0.0, REST))
        assert scaled.coronary[Branch.LAD].c_im == pytest.approx(0.0675, rel=1e-12)
        assert scaled.coronary[Branch.LAD].c_a == pytest.approx(0.007, rel=1e-12)

    def test_multiplicative_composition(self):
        base = reference_parameters(HYPER)
        a = DesignPoint(1.5, 2.0, 0.5, 0.0, HYPER)
        b = DesignPoint(2.0, 1.5, 0.4, 0.0, HYPER)
        ab = DesignPoint(3.0, 3.0, 0.2, 0.0, HYPER)
        two_step = scale_parameters(scale_parameters(base, a), b)
        one_step = scale_parameters(base, ab)
        for br in two_step.coronary:
            assert two_step.coronary[br].r_a == pytest.approx(one_step.coronary[br].r_a, rel=1e-12)
            assert two_step.coronary[br].r_ad == pytest.approx(one_step.coronary[br].r_ad, rel=1e-12)
            assert two_step.coronary[br].c_im == pytest.approx(one_step.coronary[br].c_im, rel=1e-12)

    def test_out_of_range_rejected(self):
        base = reference_parameters(REST)
        with pytest.raises(RangeError):
            scale_parameters(base, DesignPoint(3.0, 1.0, 1.0, 0.0, REST))
        with pytest.raises(RangeError):
            scale_parameters(base, DesignPoint(1.0, 1.0, 0.3, 0.0, REST))
        with pytest.raises(RangeError):
            scale_parameters(base, DesignPoint(1.0, 1.0, 1.0, 0.0, HYPER))

    def test_hyperemia_box_wider(self):
        base = reference_parameters(HYPER)
        scaled = scale_parameters(base, DesignPoint(5.0, 5.0, 0.1, 1.0, HYPER))
        assert scaled.coronary[Branch.RCA].r_a == pytest.approx(0.816 * 5, rel=1e-12)
