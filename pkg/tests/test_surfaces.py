import numpy as np
import pytest

from cactoid_lab.metric_core import Correspondence, check_metric, gh_upper
from cactoid_lab.surfaces import (
    SurfaceError,
    SurfaceInvariants,
    TriSurface,
    band,
    double,
    dump_surface,
    edge_key,
    essential_cycle_diagnostic,
    geodesic_metric,
    graph_metric,
    icosphere,
    invariants,
    load_surface,
    mesh_resolution,
    split_edge,
    subdivide,
    tetrahedron,
    torus7,
    triangle,
)


def moebius7():
    """Smallest twisted band the grid builder makes: 3 x 3 vertices."""
    return band(3, rows=3, twist=True)


def pants():
    S = band(6, rows=5, closed=True)
    # punch a third hole: remove the star of an interior vertex
    v = (2, 2)
    faces = [f for f in S.faces if v not in f]
    used = {edge_key(a, b) for f in faces for a, b in zip(f, f[1:] + f[:1])}
    lengths = {e: w for e, w in S.lengths.items() if e in used}
    verts = [u for u in S.vertices if u != v]
    return TriSurface(verts, faces, lengths)


CORPUS = {
    "triangle": triangle,
    "strip": lambda: band(4, closed=False),
    "annulus": lambda: band(6),
    "moebius": lambda: band(6, twist=True),
    "pants": pants,
}


# -- validation ----------------------------------------------------------------

def test_rejects_edge_in_three_faces():
    with pytest.raises(SurfaceError, match="3 faces"):
        TriSurface(range(5), [(0, 1, 2), (0, 1, 3), (0, 1, 4)],
                   {(a, b): 1 for a in range(5) for b in range(a + 1, 5) if (a, b) != (2, 3) and (a, b) != (2, 4) and (a, b) != (3, 4)})


def test_rejects_pinch_point():
    faces = [(0, 1, 2), (0, 3, 4)]
    lengths = {(0, 1): 1, (1, 2): 1, (2, 0): 1, (0, 3): 1, (3, 4): 1, (4, 0): 1}
    with pytest.raises(SurfaceError, match="pinch"):
        TriSurface(range(5), faces, lengths)


def test_rejects_flat_triangle():
    with pytest.raises(SurfaceError, match="strict triangle"):
        triangle(1, 1, 2)


def test_rejects_missing_length_and_orphans():
    with pytest.raises(SurfaceError, match="no length"):
        TriSurface(range(3), [(0, 1, 2)], {(0, 1): 1, (1, 2): 1})
    with pytest.raises(SurfaceError, match="no face"):
        TriSurface(range(4), [(0, 1, 2)], {(0, 1): 1, (1, 2): 1, (0, 2): 1})


def test_rejects_disconnected():
    faces = [(0, 1, 2), (3, 4, 5)]
    lengths = {(0, 1): 1, (1, 2): 1, (2, 0): 1, (3, 4): 1, (4, 5): 1, (5, 3): 1}
    with pytest.raises(SurfaceError, match="disconnected"):
        TriSurface(range(6), faces, lengths)


# -- invariants -------------------------------------------------------------------

@pytest.mark.parametrize(
    "make, chi, c, b, orientable",
    [
        (tetrahedron, 2, 0, 0, True),
        (triangle, 1, 1, 1, True),
        (moebius7, 0, 2, 1, False),
        (lambda: band(5), 0, 2, 2, True),
        (torus7, 0, 2, 0, True),
        (lambda: icosphere(1), 2, 0, 0, True),
        (pants, -1, 3, 3, True),
    ],
)
def test_invariants_table(make, chi, c, b, orientable):
    inv = invariants(make())
    assert (inv.euler_char, inv.connectivity, inv.boundary_count, inv.orientable) == (chi, c, b, orientable)
    assert inv.reduced_connectivity == c - b


def test_moebius7_counts():
    S = moebius7()
    # three rows of three columns, the last column folded onto the first with a flip
    assert S.counts() == (9, 21, 12)
    assert len(S.boundary_cycles()[0]) == 6


def test_invariant_class_rules():
    with pytest.raises(ValueError):
        SurfaceInvariants.of(True, 1, 0)
    with pytest.raises(ValueError):
        SurfaceInvariants.of(False, 0, 0)
    assert SurfaceInvariants.of(False, 1, 0).name() == "projective plane"


def test_invariants_survive_edits():
    for make in CORPUS.values():
        S = make()
        inv = invariants(S)
        assert invariants(subdivide(S)) == inv
        e = S.edges[0]
        a, b = sorted(e, key=repr)
        assert invariants(split_edge(S, a, b, 0.3)) == inv


# -- metrics ----------------------------------------------------------------------

def test_single_edge_graph():
    X = graph_metric(["p", "q"], [("p", "q", 2.5)])
    assert X.d("p", "q") == 2.5


def test_equilateral_and_tetrahedron_refine0():
    X = geodesic_metric(triangle(2, 3, 4))
    assert sorted(X.dist[np.triu_indices(3, 1)]) == [2, 3, 4]
    T = geodesic_metric(tetrahedron())
    assert np.all(T.dist[~np.eye(4, dtype=bool)] == 1)


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_refinement_monotone_and_within_resolution(name):
    S = CORPUS[name]()
    spaces = [geodesic_metric(S, r) for r in range(3)]
    for r in range(2):
        coarse, fine = spaces[r], spaces[r + 1]
        fine_sub = fine.subspace([fine.index(v) for v in coarse.labels])
        assert np.all(fine_sub.dist <= coarse.dist + 1e-12)
        pairs = [(coarse.index(v), fine.index(v)) for v in coarse.labels]
        nearest = np.argmin(fine.dist[:, [fine.index(v) for v in coarse.labels]], axis=1)
        pairs += [(int(k), j) for j, k in enumerate(nearest)]
        assert gh_upper(coarse, fine, Correspondence(pairs)) <= mesh_resolution(S, r) + 1e-12


def test_geodesic_metric_is_metric():
    for make in CORPUS.values():
        check_metric(geodesic_metric(make(), 1))


def test_flat_strip_approaches_euclidean():
    # a flat unit square strip: the intrinsic metric is Euclidean
    S = band(2, rows=3, closed=False, width=1.0, height=1.0)
    errs = []
    for r in range(4):
        X = geodesic_metric(S, r, keep=[(0, 0), (2, 2), (2, 1)])
        errs.append(X.d((0, 0), (2, 2)) - 2**0.5)
        assert X.d((0, 0), (2, 1)) >= np.hypot(1, 0.5) - 1e-12
    assert errs[-1] < 1e-9  # the diagonal is an edge chain
    assert all(e >= -1e-12 for e in errs)


# -- doubling -----------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(CORPUS))
def test_double_invariants(name):
    S = CORPUS[name]()
    inv = invariants(S)
    D = double(S)
    dinv = invariants(D.surface)
    assert dinv.euler_char == 2 * inv.euler_char
    assert dinv.boundary_count == 0
    assert dinv.orientable == inv.orientable


def test_double_examples():
    assert invariants(double(triangle()).surface).name() == "sphere"
    assert invariants(double(band(6)).surface).name() == "torus"
    assert invariants(double(band(6, twist=True)).surface).name() == "Klein bottle"
    with pytest.raises(SurfaceError):
        double(tetrahedron())


def test_double_halves_are_copies():
    S = band(6, twist=True)
    base = geodesic_metric(S)
    D = double(S)
    for tau, sign in ((D.tau_plus, "+"), (D.tau_minus, "-")):
        half = tau.target
        order = [half.index(("b", v) if ("b", v) in half.labels else (sign, v)) for v in base.labels]
        assert np.allclose(half.dist[np.ix_(order, order)], base.dist)
        # each projection fixes its own half
        for v in half.labels:
            assert tau(v) == v


def test_double_splits_chords():
    # the single interior edge of this square joins two boundary vertices
    sq = band(1, rows=2, closed=False)
    D = double(sq).surface
    assert invariants(D).name() == "sphere"
    assert len(D.vertices) > 2 * 4 - 4


# -- essential cycles ---------------------------------------------------------------

def _shortest_nonseparating_cycle(S: TriSurface, max_len: int):
    """Exhaustive search over simple edge cycles; a cycle is kept if cutting
    the surface along it leaves the face-adjacency graph connected."""
    nb = S.neighbors()
    ef = S.edge_faces
    order = {v: i for i, v in enumerate(S.vertices)}
    best = None

    def separating(cyc_edges):
        adj = {i: set() for i in range(len(S.faces))}
        for e, fs in ef.items():
            if len(fs) == 2 and e not in cyc_edges:
                adj[fs[0]].add(fs[1])
                adj[fs[1]].add(fs[0])
        seen, todo = {0}, [0]
        while todo:
            f = todo.pop()
            for g in adj[f]:
                if g not in seen:
                    seen.add(g)
                    todo.append(g)
        return len(seen) != len(S.faces)

    def walk(path, length):
        nonlocal best
        v = path[-1]
        for w in nb[v]:
            if w == path[0] and len(path) >= 3:
                cyc = {edge_key(a, b) for a, b in zip(path, path[1:] + path[:1])}
                L = length + S.length(v, w)
                if (best is None or L < best) and not separating(cyc):
                    best = L
            elif w not in path and order[w] > order[path[0]] and len(path) < max_len:
                walk(path + [w], length + S.length(v, w))

    for s in S.vertices:
        walk([s], 0.0)
    return best


def test_essential_cycle_torus_matches_exhaustive():
    T = torus7()
    assert essential_cycle_diagnostic(T) == pytest.approx(_shortest_nonseparating_cycle(T, 7))
    assert essential_cycle_diagnostic(T) == pytest.approx(3.0)


def test_essential_cycle_double_annulus_matches_exhaustive():
    S = band(3, rows=2, width=3.0, height=0.4)
    D = double(S, with_maps=False).surface
    assert essential_cycle_diagnostic(S) == pytest.approx(_shortest_nonseparating_cycle(D, 6))


def test_essential_cycle_none_on_spheres_and_discs():
    assert essential_cycle_diagnostic(tetrahedron()) is None
    assert essential_cycle_diagnostic(triangle()) is None
    assert essential_cycle_diagnostic(icosphere(1)) is None


def test_essential_cycle_flags_thin_neck():
    wide = band(8, width=4.0, height=1.0)
    thin = band(8, width=0.4, height=1.0)
    assert essential_cycle_diagnostic(thin) < essential_cycle_diagnostic(wide)


# -- file format ----------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(CORPUS))
def test_file_round_trip(name):
    S = CORPUS[name]()
    assert load_surface(dump_surface(S)) == S


def test_loader_reports_location():
    bad = "TRISURF 1\n3 1 3\nv 0\nv 1\nv 2\nf 0 1 2\ne 0 1 1\ne 1 2 1\ne 0 2 5\n"
    with pytest.raises(SurfaceError, match="strict triangle"):
        load_surface(bad, "t.tri")
    with pytest.raises(SurfaceError, match="t.tri:4"):
        load_surface("TRISURF 1\n3 1 3\nv 0\nq 1\n", "t.tri")
    with pytest.raises(SurfaceError, match="header"):
        load_surface("OFF\n")
