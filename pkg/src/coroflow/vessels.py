"""Epicardial vessel tree: geometry, topology validation, Poiseuille resistances.

The tree is a directed acyclic graph of cylindrical segments from a single
aortic-root inlet to six labelled outlet branches.  Epicardial segments are
purely resistive; the microvasculature behind each outlet is represented by
the lumped models in :mod:`coroflow.lpm`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import ParseError, TopologyError, UnknownSegment

# Newtonian blood properties
BLOOD_VISCOSITY = 0.004  # Pa*s
BLOOD_DENSITY = 1060.0   # kg/m^3 (reference property; the resistive network has no inertia)


class Branch(str, Enum):
    TRUNK = "TRUNK"
    LAD = "LAD"
    OM1 = "OM1"
    OM2 = "OM2"
    LCX = "LCX"
    AM = "AM"
    RCA = "RCA"


LEFT_BRANCHES = (Branch.LAD, Branch.OM1, Branch.OM2, Branch.LCX)
RIGHT_BRANCHES = (Branch.AM, Branch.RCA)
OUTLET_BRANCHES = LEFT_BRANCHES + RIGHT_BRANCHES


@dataclass(frozen=True)
class Segment:
    """One cylindrical epicardial segment (lengths/radii in mm)."""

    id: str
    parent: str | None
    length: float
    radius: float
    branch: Branch
    extra_resistance: float = 0.0  # Pa*s/mm^3 surcharge (stenosis)

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"segment {self.id!r}: length must be > 0")
        if self.radius <= 0:
            raise ValueError(f"segment {self.id!r}: radius must be > 0")
        if self.extra_resistance < 0:
            raise ValueError(f"segment {self.id!r}: extra_resistance must be >= 0")

    @property
    def area(self) -> float:
        """Lumen cross-section in mm^2."""
        return math.pi * self.radius ** 2


def poiseuille_resistance(segment: Segment, viscosity: float = BLOOD_VISCOSITY) -> float:
    """Hagen-Poiseuille resistance 8*mu*L/(pi*r^4) plus any stenosis surcharge, Pa*s/mm^3."""
    if viscosity <= 0:
        raise ValueError("viscosity must be > 0")
    base = 8.0 * viscosity * segment.length / (math.pi * segment.radius ** 4)
    return base + segment.extra_resistance


class VesselTree:
    """Validated, immutable tree of epicardial segments.

    Node convention used by the hemodynamic solver: node 0 is the inlet
    (aortic root); node 1+i is the distal end of ``segments[i]``.  A segment
    connects its parent's distal node (or the inlet) to its own distal node.
    """

    def __init__(self, segments):
        self.segments = tuple(segments)
        self._by_id = {}
        for seg in self.segments:
            if seg.id in self._by_id:
                raise TopologyError(f"duplicate segment id {seg.id!r}")
            self._by_id[seg.id] = seg
        self._validate()
        self._index = {seg.id: i for i, seg in enumerate(self.segments)}

    # -- validation -------------------------------------------------------

    def _validate(self):
        roots = [s for s in self.segments if s.parent is None]
        if len(roots) != 1:
            raise TopologyError(f"expected exactly one root segment, found {len(roots)}")
        self.root = roots[0]

        children: dict[str, list[Segment]] = {s.id: [] for s in self.segments}
        for seg in self.segments:
            if seg.parent is not None:
                if seg.parent not in self._by_id:
                    raise TopologyError(f"segment {seg.id!r} references unknown parent {seg.parent!r}")
                children[seg.parent].append(seg)
        self._children = children

        # acyclicity: walking up from any segment must terminate at the root
        for seg in self.segments:
            seen = set()
            cur = seg
            while cur.parent is not None:
                if cur.id in seen:
                    raise TopologyError(f"cycle detected at segment {seg.id!r}")
                seen.add(cur.id)
                cur = self._by_id[cur.parent]

        leaves = [s for s in self.segments if not children[s.id]]
        outlets: dict[Branch, Segment] = {}
        for leaf in leaves:
            if leaf.branch == Branch.TRUNK:
                raise TopologyError(f"leaf segment {leaf.id!r} carries no outlet label")
            if leaf.branch in outlets:
                raise TopologyError(f"branch label {leaf.branch.value} appears on more than one outlet")
            outlets[leaf.branch] = leaf
        for seg in self.segments:
            if children[seg.id] and seg.branch != Branch.TRUNK:
                raise TopologyError(f"internal segment {seg.id!r} must be labelled TRUNK")
        missing = [b.value for b in OUTLET_BRANCHES if b not in outlets]
        if missing:
            raise TopologyError(f"missing outlet branches: {', '.join(missing)}")
        self.outlets = outlets

    # -- lookups ----------------------------------------------------------

    def segment(self, segment_id: str) -> Segment:
        try:
            return self._by_id[segment_id]
        except KeyError:
            raise UnknownSegment(f"no segment with id {segment_id!r}") from None

    def children(self, segment_id: str):
        return tuple(self._children[segment_id])

    @property
    def inlet_id(self) -> str:
        return self.root.id

    @property
    def outlet_ids(self) -> dict[Branch, str]:
        return {b: s.id for b, s in self.outlets.items()}

    def segment_index(self, segment_id: str) -> int:
        return self._index[segment_id]

    # -- solver node numbering ---------------------------------------------

    @property
    def n_nodes(self) -> int:
        return 1 + len(self.segments)

    def dist_node(self, segment_id: str) -> int:
        return 1 + self._index[segment_id]

    def prox_node(self, segment_id: str) -> int:
        seg = self.segment(segment_id)
        return 0 if seg.parent is None else self.dist_node(seg.parent)

    def outlet_node(self, branch: Branch) -> int:
        return self.dist_node(self.outlets[branch].id)

    # -- subtree scopes -----------------------------------------------------

    def leaf_branches_below(self, segment_id: str) -> frozenset:
        seg = self.segment(segment_id)
        kids = self._children[seg.id]
        if not kids:
            return frozenset({seg.branch})
        out = set()
        for k in kids:
            out |= self.leaf_branches_below(k.id)
        return frozenset(out)

    def left_segment_ids(self) -> tuple[str, ...]:
        """Segments whose entire subtree drains to left-tree outlets."""
        left = set(LEFT_BRANCHES)
        return tuple(s.id for s in self.segments if self.leaf_branches_below(s.id) <= left)

    # -- equality / repr ----------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, VesselTree) and self.segments == other.segments

    def __hash__(self):
        return hash(self.segments)

    def __repr__(self):
        return f"VesselTree({len(self.segments)} segments, inlet={self.inlet_id!r})"

    def replace_segment(self, segment: Segment) -> "VesselTree":
        segs = [segment if s.id == segment.id else s for s in self.segments]
        return VesselTree(segs)


# -- serialization ----------------------------------------------------------

def load_tree(config_text: str) -> VesselTree:
    """Parse a JSON tree description and validate it."""
    try:
        obj = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or "segments" not in obj:
        raise ParseError("tree config must be an object with a 'segments' list")
    segments = []
    for rec in obj["segments"]:
        try:
            branch = Branch(rec.get("label", "TRUNK"))
        except ValueError:
            raise ParseError(f"unknown branch label {rec.get('label')!r}") from None
        try:
            segments.append(
                Segment(
                    id=str(rec["id"]),
                    parent=rec.get("parent"),
                    length=float(rec["length_mm"]),
                    radius=float(rec["radius_mm"]),
                    branch=branch,
                    extra_resistance=float(rec.get("extra_resistance", 0.0)),
                )
            )
        except KeyError as exc:
            raise ParseError(f"segment record missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc)) from None
    tree = VesselTree(segments)
    if "inlet" in obj and obj["inlet"] != tree.inlet_id:
        raise TopologyError(f"declared inlet {obj['inlet']!r} is not the root segment")
    if "outlets" in obj:
        declared = {Branch(k): v for k, v in obj["outlets"].items()}
        if declared != tree.outlet_ids:
            raise TopologyError("declared outlet map disagrees with tree topology")
    return tree


def save_tree(tree: VesselTree) -> str:
    """Canonical JSON text; load_tree(save_tree(t)) == t and the text round-trips byte-exactly."""
    obj = {
        "segments": [
            {
                "id": s.id,
                "parent": s.parent,
                "length_mm": s.length,
                "radius_mm": s.radius,
                "label": s.branch.value,
                "extra_resistance": s.extra_resistance,
            }
            for s in tree.segments
        ],
        "inlet": tree.inlet_id,
        "outlets": {b.value: sid for b, sid in tree.outlet_ids.items()},
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_tree_file(path) -> VesselTree:
    with open(path, "r", encoding="utf-8") as fh:
        return load_tree(fh.read())


# -- stenosis ----------------------------------------------------------------

def apply_stenosis(tree: VesselTree, segment_id: str, area_reduction: float,
                   viscosity: float = BLOOD_VISCOSITY) -> VesselTree:
    """Narrow a segment's lumen by the given area fraction.

    The surcharge is chosen so the total segment resistance equals the
    Poiseuille value of the narrowed lumen, r' = r*sqrt(1 - a); total
    resistance therefore scales by (1 - a)^-2.
    """
    if not 0.0 <= area_reduction < 1.0:
        raise ValueError("area_reduction must lie in [0, 1)")
    seg = tree.segment(segment_id)
    healthy = 8.0 * viscosity * seg.length / (math.pi * seg.radius ** 4)
    extra = healthy * (1.0 / (1.0 - area_reduction) ** 2 - 1.0)
    return tree.replace_segment(replace(seg, extra_resistance=extra))


# -- bundled default geometry -------------------------------------------------

# Synthetic stand-in for patient anatomy: one aortic-root trunk feeding six
# outlet branches.  The trunk models the ostial feed carrying the summed
# coronary flow, hence its larger caliber; branch dimensions were chosen so
# healthy hyperemic FFR stays within 0.02 of unity while branch volumes give
# transit times well clear of the sampling grid.  All dimensions are
# configurable via JSON configs.
_DEFAULT_SEGMENTS = (
    ("trunk", None, 10.0, 3.0, Branch.TRUNK),
    ("lad", "trunk", 55.0, 2.0, Branch.LAD),
    ("om1", "trunk", 45.0, 1.9, Branch.OM1),
    ("om2", "trunk", 50.0, 1.7, Branch.OM2),
    ("lcx", "trunk", 45.0, 1.8, Branch.LCX),
    ("am", "trunk", 40.0, 1.7, Branch.AM),
    ("rca", "trunk", 50.0, 1.9, Branch.RCA),
)


def default_tree() -> VesselTree:
    """The bundled seven-segment tree (trunk plus six labelled outlets)."""
    return VesselTree(
        Segment(id=i, parent=p, length=l, radius=r, branch=b)
        for (i, p, l, r, b) in _DEFAULT_SEGMENTS
    )
