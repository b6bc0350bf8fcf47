import pytest

from cactoid_lab.curves import (
    ALL_ORIENTABLE,
    SOME_NON_ORIENTABLE,
    CurveError,
    all_outcomes,
    cut_jordan,
    cut_nonseparating_arc,
    cut_separating_arc,
    identity_outcome,
    reglue_roundtrip,
)
from cactoid_lab.surfaces import SurfaceInvariants

inv = SurfaceInvariants.of


def valid_classes(cmax=10):
    for c in range(cmax + 1):
        for orientable in (True, False):
            for b in range(c + 1):
                try:
                    yield inv(orientable, c, b)
                except ValueError:
                    continue


def test_separating_arc_pairs():
    assert [o.connectivities for o in cut_separating_arc(inv(True, 3, 1))] == [(2, 2)]
    assert [o.connectivities for o in cut_separating_arc(inv(True, 5, 1))] == [(2, 4), (3, 3)]
    with pytest.raises(CurveError):
        cut_separating_arc(inv(True, 2, 2))
    with pytest.raises(CurveError, match="boundary"):
        cut_separating_arc(inv(True, 4, 0))


def test_nonseparating_arc_examples():
    (m,) = cut_nonseparating_arc(inv(False, 2, 1))
    assert m.connectivities == (1,) and m.kind == "two_point_identified" and m.parts[0].needs_boundary
    (a,) = cut_nonseparating_arc(inv(True, 2, 2))
    assert a.parts[0].orientable is True
    assert cut_nonseparating_arc(inv(True, 1, 1)) == []


def test_jordan_examples():
    torus = cut_jordan(inv(True, 2, 0))
    assert sorted((o.kind, o.connectivities) for o in torus) == [
        ("two_point_identified", (0,)),
        ("wedge_split", (1, 1)),
    ]
    klein = cut_jordan(inv(False, 2, 0))
    assert ("plain_surface", (1,)) in {(o.kind, o.connectivities) for o in klein}
    rp2 = cut_jordan(inv(False, 1, 0))
    assert [(o.kind, o.connectivities) for o in rp2] == [("plain_surface", (0,))]
    with pytest.raises(CurveError):
        cut_jordan(inv(True, 0, 0))


def test_identities_and_roundtrip_exhaustive():
    count = 0
    for S in valid_classes():
        c = S.connectivity
        for o in all_outcomes(S) + [identity_outcome(S)]:
            cs = o.connectivities
            if o.op == "separating_arc":
                assert sum(cs) == c + 1 and min(cs) >= 2
            elif o.op == "nonseparating_arc":
                assert cs == (c - 1,)
            elif o.op == "jordan" and o.kind == "wedge_split":
                assert sum(cs) == c and min(cs) >= 1
            elif o.op == "jordan" and o.kind == "two_point_identified":
                assert cs == (c - 2,)
            elif o.op == "jordan":
                assert cs == (c - 1,) and not S.orientable
            # orientability clauses
            if S.orientable:
                assert all(p.orientable is True for p in o.parts)
                assert o.kind != "plain_surface"
            elif o.kind == "wedge_split":
                assert o.orientability_note == SOME_NON_ORIENTABLE
            assert reglue_roundtrip(o).connectivity == c
            count += 1
    assert count > 100


def test_roundtrip_examples():
    torus = inv(True, 2, 0)
    case2 = next(o for o in cut_jordan(torus) if o.kind == "two_point_identified")
    assert reglue_roundtrip(case2) == torus
    split = next(o for o in cut_separating_arc(inv(True, 5, 1)) if o.connectivities == (3, 3))
    assert reglue_roundtrip(split).connectivity == 5
    assert reglue_roundtrip(identity_outcome(torus)) == torus


def test_orientable_notes():
    for o in cut_jordan(inv(True, 4, 0)):
        assert o.orientability_note == ALL_ORIENTABLE
