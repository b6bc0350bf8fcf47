"""Cut-and-paste calculus for simple arcs and Jordan curves on compact surfaces.

Everything here works on invariants only.  A cut yields :class:`CutOutcome`
records whose parts are :class:`PartClass` values: a connectivity number, an
orientability that is either forced (``True``/``False``) or left open
(``None``), and whether the part must carry boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

from .surfaces import SurfaceInvariants

__all__ = [
    "CurveError",
    "PartClass",
    "CutOutcome",
    "cut_separating_arc",
    "cut_nonseparating_arc",
    "cut_jordan",
    "identity_outcome",
    "reglue_roundtrip",
    "all_outcomes",
]

KINDS = ("wedge_split", "two_point_identified", "plain_surface", "identity")

# orientability constraints carried by an outcome
ALL_ORIENTABLE = "all parts orientable"
SOME_NON_ORIENTABLE = "at least one part non-orientable"
UNCONSTRAINED = "unconstrained"
SOURCE_NON_ORIENTABLE = "source non-orientable"


class CurveError(ValueError):
    """The requested curve cannot exist on the given surface class."""


@dataclass(frozen=True)
class PartClass:
    connectivity: int
    orientable: bool | None
    needs_boundary: bool = False

    def to_json(self) -> dict:
        return {
            "connectivity": self.connectivity,
            "orientable": self.orientable,
            "needs_boundary": self.needs_boundary,
        }


@dataclass(frozen=True)
class CutOutcome:
    kind: str
    parts: tuple[PartClass, ...]
    orientability_note: str
    source: SurfaceInvariants
    op: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CurveError(f"unknown outcome kind {self.kind!r}")
        want = 2 if self.kind == "wedge_split" else 1
        if len(self.parts) != want:
            raise CurveError(f"{self.kind} outcomes have {want} part(s)")

    @property
    def connectivities(self) -> tuple[int, ...]:
        return tuple(p.connectivity for p in self.parts)

    def to_json(self) -> dict:
        return {
            "op": self.op,
            "kind": self.kind,
            "parts": [p.to_json() for p in self.parts],
            "orientability_note": self.orientability_note,
            "source": self.source.to_json(),
        }


def _pairs(total: int, least: int) -> list[tuple[int, int]]:
    return [(c1, total - c1) for c1 in range(least, total // 2 + 1) if total - c1 >= least]


def cut_separating_arc(S: SurfaceInvariants) -> list[CutOutcome]:
    """Quotients by a separating simple arc: a wedge of parts with
    ``c1 + c2 = c + 1``, ``c_i >= 2``, wedge point on both boundaries."""
    if S.boundary_count < 1:
        raise CurveError("simple arcs need a boundary")
    pairs = _pairs(S.connectivity + 1, 2)
    if not pairs:
        raise CurveError(f"no admissible separating arc for c={S.connectivity}")
    o = True if S.orientable else None
    note = ALL_ORIENTABLE if S.orientable else SOME_NON_ORIENTABLE
    return [
        CutOutcome("wedge_split", (PartClass(c1, o, True), PartClass(c2, o, True)), note, S, "separating_arc")
        for c1, c2 in pairs
    ]


def cut_nonseparating_arc(S: SurfaceInvariants) -> list[CutOutcome]:
    """Quotient by a non-separating simple arc: a boundary 2-point
    identification of one part with ``c - 1``.  Empty when the part could
    not carry boundary (the disc)."""
    if S.boundary_count < 1:
        raise CurveError("simple arcs need a boundary")
    if S.connectivity < 1:
        raise CurveError("c = 0 has no simple arcs")
    c1 = S.connectivity - 1
    if c1 < 1:
        # the only c = 0 class is the sphere, which has no boundary for the glued points
        return []
    o = True if S.orientable else None
    note = ALL_ORIENTABLE if S.orientable else UNCONSTRAINED
    return [CutOutcome("two_point_identified", (PartClass(c1, o, True),), note, S, "nonseparating_arc")]


def cut_jordan(S: SurfaceInvariants) -> list[CutOutcome]:
    """Quotients by a non-contractible simple Jordan curve, all three cases."""
    c = S.connectivity
    if c < 1:
        raise CurveError("c = 0 carries no non-contractible Jordan curve")
    out = []
    o = True if S.orientable else None
    note = ALL_ORIENTABLE if S.orientable else SOME_NON_ORIENTABLE
    for c1, c2 in _pairs(c, 1):
        out.append(CutOutcome("wedge_split", (PartClass(c1, o), PartClass(c2, o)), note, S, "jordan"))
    if c >= 2:
        note2 = ALL_ORIENTABLE if S.orientable else UNCONSTRAINED
        out.append(CutOutcome("two_point_identified", (PartClass(c - 2, o),), note2, S, "jordan"))
    if not S.orientable:
        out.append(CutOutcome("plain_surface", (PartClass(c - 1, None),), SOURCE_NON_ORIENTABLE, S, "jordan"))
    return out


def identity_outcome(S: SurfaceInvariants) -> CutOutcome:
    return CutOutcome(
        "identity", (PartClass(S.connectivity, S.orientable, S.boundary_count > 0),), UNCONSTRAINED, S, "identity"
    )


def all_outcomes(S: SurfaceInvariants) -> list[CutOutcome]:
    """Every outcome of every cut that applies to ``S``."""
    out = []
    for cut in (cut_separating_arc, cut_nonseparating_arc, cut_jordan):
        try:
            out += cut(S)
        except CurveError:
            pass
    return out


def reglue_roundtrip(outcome: CutOutcome) -> SurfaceInvariants:
    """Undo a cut with the gluing-side arithmetic and check it against the source.

    Boundary-arc wedge: ``c1 + c2 - 1``; interior wedge: ``c1 + c2``;
    boundary 2-point identification: ``+1``; interior: ``+2``; re-inserting a
    one-sided curve: ``+1``.
    """
    cs = outcome.connectivities
    rule = {
        ("separating_arc", "wedge_split"): lambda: cs[0] + cs[1] - 1,
        ("nonseparating_arc", "two_point_identified"): lambda: cs[0] + 1,
        ("jordan", "wedge_split"): lambda: cs[0] + cs[1],
        ("jordan", "two_point_identified"): lambda: cs[0] + 2,
        ("jordan", "plain_surface"): lambda: cs[0] + 1,
        ("identity", "identity"): lambda: cs[0],
    }.get((outcome.op, outcome.kind))
    if rule is None:
        raise CurveError(f"inconsistent outcome record ({outcome.op}, {outcome.kind})")
    c = rule()
    src = outcome.source
    if c != src.connectivity:
        raise CurveError(f"reglue gives c={c}, source has c={src.connectivity}")
    if outcome.orientability_note == ALL_ORIENTABLE and not src.orientable:
        raise CurveError("orientable parts cannot reglue to a non-orientable source here")
    if outcome.orientability_note in (SOME_NON_ORIENTABLE, SOURCE_NON_ORIENTABLE) and src.orientable:
        raise CurveError("non-orientable part recorded for an orientable source")
    return SurfaceInvariants.of(src.orientable, c, src.boundary_count)
