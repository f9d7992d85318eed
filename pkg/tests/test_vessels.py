import math

import pytest

from coroflow import (
    Branch,
    ParseError,
    Segment,
    TopologyError,
    UnknownSegment,
    VesselTree,
    apply_stenosis,
    default_tree,
    load_tree,
    poiseuille_resistance,
    save_tree,
)


def seg(id, parent, branch=Branch.TRUNK, length=30.0, radius=1.5):
    return Segment(id=id, parent=parent, length=length, radius=radius, branch=branch)


def test_default_tree_valid():
    tree = default_tree()
    assert len(tree.segments) == 7
    assert set(tree.outlet_ids) == {Branch.LAD, Branch.OM1, Branch.OM2,
                                    Branch.LCX, Branch.AM, Branch.RCA}
    assert tree.inlet_id == "trunk"


def test_duplicate_branch_label_rejected():
    segs = [seg("t", None)]
    labels = [Branch.LAD, Branch.LAD, Branch.OM2, Branch.LCX, Branch.AM, Branch.RCA]
    segs += [seg(f"s{i}", "t", b) for i, b in enumerate(labels)]
    with pytest.raises(TopologyError):
        VesselTree(segs)


def test_self_parent_cycle_rejected():
    segs = [seg("t", None)]
    segs += [seg(b.value.lower(), "t", b) for b in
             (Branch.LAD, Branch.OM1, Branch.OM2, Branch.LCX, Branch.RCA)]
    segs += [seg("am", "am", Branch.AM)]
    with pytest.raises(TopologyError):
        VesselTree(segs)


def test_missing_outlet_rejected():
    segs = [seg("t", None)]
    segs += [seg(b.value.lower(), "t", b) for b in
             (Branch.LAD, Branch.OM1, Branch.OM2, Branch.LCX, Branch.AM)]
    with pytest.raises(TopologyError):
        VesselTree(segs)


def test_duplicate_id_rejected():
    segs = [seg("t", None), seg("t", "t", Branch.LAD)]
    with pytest.raises(TopologyError):
        VesselTree(segs)


def test_unknown_parent_rejected():
    segs = [seg("t", None)]
    segs += [seg(b.value.lower(), "nope" if b == Branch.LAD else "t", b)
             for b in (Branch.LAD, Branch.OM1, Branch.OM2, Branch.LCX, Branch.AM, Branch.RCA)]
    with pytest.raises(TopologyError):
        VesselTree(segs)


def test_parse_error_on_bad_json():
    with pytest.raises(ParseError):
        load_tree("{not json")
    with pytest.raises(ParseError):
        load_tree('{"no_segments": []}')


def test_round_trip_is_bit_exact():
    tree = default_tree()
    text = save_tree(tree)
    assert load_tree(text) == tree
    assert save_tree(load_tree(text)) == text


def test_poiseuille_reference_value():
    # independent evaluation of 8*mu*L/(pi*r^4), L=10 mm, r=1.5 mm, mu=0.004
    s = seg("x", None, length=10.0, radius=1.5)
    expected = 8 * 0.004 * 10.0 / (math.pi * 1.5 ** 4)
    got = poiseuille_resistance(s, viscosity=0.004)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.0201203, rel=1e-4)


def test_poiseuille_extra_resistance_additive():
    s = Segment(id="x", parent=None, length=10.0, radius=1.5,
                branch=Branch.TRUNK, extra_resistance=0.5)
    base = poiseuille_resistance(seg("x", None, length=10.0, radius=1.5))
    assert poiseuille_resistance(s) == pytest.approx(base + 0.5, rel=1e-12)


def test_poiseuille_radius_scaling():
    r1 = poiseuille_resistance(seg("a", None, length=10.0, radius=1.0))
    r2 = poiseuille_resistance(seg("b", None, length=10.0, radius=2.0))
    assert r1 / r2 == pytest.approx(16.0, rel=1e-12)


def test_poiseuille_monotonicity():
    base = poiseuille_resistance(seg("a", None, length=20.0, radius=1.5))
    assert poiseuille_resistance(seg("a", None, length=25.0, radius=1.5)) > base
    assert poiseuille_resistance(seg("a", None, length=20.0, radius=1.6)) < base
    assert poiseuille_resistance(seg("a", None, length=20.0, radius=1.5),
                                 viscosity=0.005) > base


def test_stenosis_identity():
    tree = default_tree()
    same = apply_stenosis(tree, "lad", 0.0)
    assert same.segment("lad").extra_resistance == 0.0


def test_stenosis_resistance_scaling():
    tree = default_tree()
    for a in (0.3, 0.5, 0.9):
        narrowed = apply_stenosis(tree, "lad", a)
        healthy = poiseuille_resistance(tree.segment("lad"))
        total = poiseuille_resistance(narrowed.segment("lad"))
        assert total == pytest.approx(healthy / (1.0 - a) ** 2, rel=1e-12)


def test_stenosis_unknown_segment():
    with pytest.raises(UnknownSegment):
        apply_stenosis(default_tree(), "nope", 0.5)


def test_stenosis_bad_fraction():
    with pytest.raises(ValueError):
        apply_stenosis(default_tree(), "lad", 1.0)


def test_left_segment_scope():
    tree = default_tree()
    assert set(tree.left_segment_ids()) == {"lad", "om1", "om2", "lcx"}


def test_segment_validation():
    with pytest.raises(ValueError):
        Segment(id="x", parent=None, length=-1.0, radius=1.0, branch=Branch.TRUNK)
    with pytest.raises(ValueError):
        Segment(id="x", parent=None, length=1.0, radius=0.0, branch=Branch.TRUNK)
    with pytest.raises(ValueError):
        Segment(id="x", parent=None, length=1.0, radius=1.0,
                branch=Branch.TRUNK, extra_resistance=-0.1)
