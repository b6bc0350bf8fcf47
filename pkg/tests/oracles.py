"""Independent brute-force oracles shared by the test modules.

Nothing here imports the search code under test; the oracles only read the
distance matrices of the spaces.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import lcm

import numpy as np

from cactoid_lab.metric_core import FiniteMetricSpace


def random_metric(rng: np.random.Generator, n: int, denom: int = 4, top: int = 12):
    """Random rational metric: shortest-path closure of random positive weights."""
    w = rng.integers(1, top + 1, size=(n, n))
    w = np.triu(w, 1)
    w = w + w.T
    d = w.astype(np.int64)
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return FiniteMetricSpace(
        list(range(n)), [[Fraction(int(v), denom) for v in row] for row in d]
    )


def _scaled_ints(X: FiniteMetricSpace, Y: FiniteMetricSpace):
    vals = [v for v in X.dist.ravel()] + [v for v in Y.dist.ravel()]
    den = 1
    for v in vals:
        den = lcm(den, Fraction(v).denominator)
    dx = np.array([[int(Fraction(v) * den) for v in r] for r in X.dist], dtype=np.int64)
    dy = np.array([[int(Fraction(v) * den) for v in r] for r in Y.dist], dtype=np.int64)
    return dx, dy, den


def brute_gh(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> Fraction:
    """d_GH = 1/2 min over total f: X->Y, g: Y->X of max(dis f, dis g, codis(f, g))."""
    dx, dy, den = _scaled_ints(X, Y)
    n, m = len(X), len(Y)
    F = np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64)  # (#f, n)
    G = np.array(list(itertools.product(range(n), repeat=m)), dtype=np.int64)  # (#g, m)
    # dis f for each f
    dis_f = np.abs(dy[F[:, :, None], F[:, None, :]] - dx[None]).reshape(len(F), -1).max(axis=1)
    dis_g = np.abs(dx[G[:, :, None], G[:, None, :]] - dy[None]).reshape(len(G), -1).max(axis=1)
    best = None
    for a, f in enumerate(F):
        # codis(f, g) = max_{x, y} |dX(x, g(y)) - dY(f(x), y)|
        lhs = dx[:, G]  # (n, #g, m): dX(x, g(y))
        rhs = dy[f][:, None, :]  # (n, 1, m): dY(f(x), y)
        codis = np.abs(lhs - rhs).max(axis=(0, 2))
        tot = np.maximum(np.maximum(codis, dis_g), dis_f[a]).min()
        best = tot if best is None else min(best, tot)
    return Fraction(int(best), 2 * den)


def brute_isometric(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> bool:
    if len(X) != len(Y):
        return False
    n = len(X)
    dx = X.dist
    for perm in itertools.permutations(range(n)):
        p = list(perm)
        if np.all(Y.dist[np.ix_(p, p)] == dx):
            return True
    return False


def floyd(weights: dict, nodes) -> dict:
    """All-pairs shortest paths by Floyd-Warshall over a dict-of-edges graph."""
    nodes = list(nodes)
    inf = float("inf")
    d = {(a, b): (0 if a == b else inf) for a in nodes for b in nodes}
    for (a, b), w in weights.items():
        if w < d[a, b]:
            d[a, b] = d[b, a] = w
    for k in nodes:
        for i in nodes:
            dik = d[i, k]
            if dik == inf:
                continue
            for j in nodes:
                if dik + d[k, j] < d[i, j]:
                    d[i, j] = dik + d[k, j]
    return d


# -- graphs -----------------------------------------------------------------------

def simple_cycles(edges):
    """All simple cycles (as edge frozensets) of a small undirected simple graph."""
    adj = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    order = {v: i for i, v in enumerate(sorted(adj, key=repr))}
    found = set()

    def walk(start, path, seen):
        v = path[-1]
        for w in adj[v]:
            if w == start and len(path) >= 3:
                cyc = frozenset(frozenset(e) for e in zip(path, path[1:] + path[:1]))
                found.add(cyc)
            elif w not in seen and order[w] > order[start]:
                walk(start, path + [w], seen | {w})

    for s in adj:
        walk(s, [s], {s})
    return found


def brute_blocks(edges):
    """Blocks as edge sets: two edges share a block iff some simple cycle holds both."""
    es = [frozenset(e) for e in edges]
    cycles = simple_cycles(edges)
    parent = {e: e for e in es}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for cyc in cycles:
        cyc = list(cyc)
        for e in cyc[1:]:
            parent[find(e)] = find(cyc[0])
    groups = {}
    for e in es:
        groups.setdefault(find(e), set()).add(e)
    return {frozenset(g) for g in groups.values()}


def brute_cut_vertices(edges):
    nodes = {x for e in edges for x in e}
    out = set()
    for v in nodes:
        rest = [e for e in edges if v not in e]
        others = nodes - {v}
        if not others:
            continue
        start = next(iter(others))
        seen, todo = {start}, [start]
        while todo:
            x = todo.pop()
            for a, b in rest:
                for p, q in ((a, b), (b, a)):
                    if p == x and q not in seen:
                        seen.add(q)
                        todo.append(q)
        if seen != others:
            out.add(v)
    return out


# -- cactoids ---------------------------------------------------------------------

def random_cactoid(rng, max_circles=5, max_parts=5):
    """Random tree-shaped wedge of pieces and small trees with <= max_circles circles."""
    from cactoid_lab.cactoid import CactoidGraph, MetricTree, Piece
    from cactoid_lab.surfaces import SurfaceInvariants

    kinds = [(True, 0, 0), (True, 1, 1), (True, 2, 2), (False, 2, 1), (True, 3, 3), (True, 2, 0)]
    comps = []
    circles = 0
    for i in range(int(rng.integers(1, max_parts + 1))):
        if rng.random() < 0.3:
            comps.append(("tree", f"T{i}"))
            continue
        o, c, b = kinds[int(rng.integers(len(kinds)))]
        if circles + b > max_circles:
            o, c, b = True, 0, 0
        circles += b
        comps.append(("piece", f"P{i}", SurfaceInvariants.of(o, c, b)))
    points = {c[1]: {} for c in comps if c[0] == "piece"}
    tree_edges = {c[1]: [] for c in comps if c[0] == "tree"}
    incidences = []

    def new_point(comp):
        if comp[0] == "piece":
            inv = comp[2]
            name = f"q{len(points[comp[1]])}"
            on = inv.boundary_count and rng.random() < 0.7
            points[comp[1]][name] = int(rng.integers(inv.boundary_count)) if on else None
            return (comp[1], name)
        es = tree_edges[comp[1]]
        if not es:
            es.append(("a", "b", 1.0))
        nodes = sorted({x for e in es for x in e[:2]})
        if rng.random() < 0.5:
            new = f"n{len(nodes)}"
            es.append((nodes[int(rng.integers(len(nodes)))], new, 1.0))
            return (comp[1], new)
        return (comp[1], nodes[int(rng.integers(len(nodes)))])

    wedge_pts = []  # existing attachment points that later parts may reuse
    for i, comp in enumerate(comps):
        if i == 0:
            continue
        j = int(rng.integers(i))
        if wedge_pts and rng.random() < 0.25:
            host = wedge_pts[int(rng.integers(len(wedge_pts)))]
            host_ok = host[0] != comp[1] and host[0] in {c[1] for c in comps[:i]}
        else:
            host_ok = False
        a = host if host_ok else new_point(comps[j])
        b = new_point(comp)
        incidences.append((a, b))
        wedge_pts += [a, b]
    for comp in comps:
        if comp[0] == "tree" and not tree_edges[comp[1]]:
            tree_edges[comp[1]].append(("a", "b", 1.0))
        if comp[0] == "piece" and comp[2].boundary_count:
            for k in range(comp[2].boundary_count):
                if k not in points[comp[1]].values():
                    points[comp[1]][f"c{k}"] = k
    pieces = [Piece(c[1], c[2], points[c[1]]) for c in comps if c[0] == "piece"]
    trees = [MetricTree(c[1], tuple(tree_edges[c[1]])) for c in comps if c[0] == "tree"]
    return CactoidGraph("R", pieces, trees, incidences)


def brute_preboundary(G):
    """Exhaustive search over families of disjoint admissible carrier sets.

    Returns (minimal count, list of carrier-set unions of all minimal families).
    """
    # own union-find over incidences
    pts = [(p.name, x) for p in G.pieces for x in p.points]
    pts += [(t.name, x) for t in G.trees for e in t.edges for x in e[:2]]
    parent = {p: p for p in pts}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in G.incidences:
        parent[find(a)] = find(b)
    carriers = []
    touch = {}
    for p in G.pieces:
        for i in range(p.invariants.boundary_count):
            c = ("circle", (p.name, i))
            carriers.append(c)
            touch[c] = {find((p.name, x)) for x, k in p.points.items() if k == i}
    for t in G.trees:
        for u, v, _ in t.edges:
            c = ("edge", (t.name, u, v))
            carriers.append(c)
            touch[c] = {find((t.name, u)), find((t.name, v))}
    circle_set = [c for c in carriers if c[0] == "circle"]

    def points_of(sub):
        out = set()
        for c in sub:
            out |= touch[c]
        return out

    def admissible(sub):
        ps = points_of(sub)
        for p in G.pieces:
            mine = [c for c in sub if c[0] == "circle" and c[1][0] == p.name]
            hit = {x for x in p.points if find((p.name, x)) in ps}
            if len(mine) > 1:
                return False
            if mine:
                if any(p.points[x] != mine[0][1][1] for x in hit):
                    return False
            elif len(hit) > 1:
                return False
        return True

    def connected(sub):
        sub = list(sub)
        seen, todo = {sub[0]}, [sub[0]]
        while todo:
            c = todo.pop()
            for d in sub:
                if d not in seen and touch[c] & touch[d]:
                    seen.add(d)
                    todo.append(d)
        return len(seen) == len(sub)

    cands = []
    for r in range(1, len(carriers) + 1):
        for sub in itertools.combinations(carriers, r):
            if any(c[0] == "circle" for c in sub) and connected(sub) and admissible(sub):
                cands.append(frozenset(sub))
    families = []

    def search(chosen, used_c, used_p):
        left = [c for c in circle_set if c not in used_c]
        if not left:
            families.append(list(chosen))
            return
        first = left[0]
        for cand in cands:
            if first in cand and not (cand & used_c) and not (points_of(cand) & used_p):
                search(chosen + [cand], used_c | cand, used_p | points_of(cand))

    search([], frozenset(), frozenset())
    if not families:
        return None, []
    m = min(len(f) for f in families)
    unions = [frozenset().union(*f) for f in families if len(f) == m]
    return m, unions


def random_pipeline_input(rng, max_circles=3, max_parts=4, max_steps=2):
    """Random cactoid plus a random history on fresh points (flags computed)."""
    from cactoid_lab.cactoid import CactoidGraph, Piece, boundary_flags

    G = random_cactoid(rng, max_circles=max_circles, max_parts=max_parts)
    while not G.pieces:
        G = random_cactoid(rng, max_circles=max_circles, max_parts=max_parts)
    pieces = list(G.pieces)
    steps = int(rng.integers(0, max_steps + 1))
    fresh = []
    for j in range(2 * steps):
        i = int(rng.integers(len(pieces)))
        p = pieces[i]
        b = p.invariants.boundary_count
        circ = int(rng.integers(b)) if b and rng.random() < 0.5 else None
        pts = dict(p.points)
        pts[f"h{j}"] = circ
        pieces[i] = Piece(p.name, p.invariants, pts)
        fresh.append((p.name, f"h{j}"))
    H = CactoidGraph(G.name, pieces, G.trees, G.incidences)
    pairs = [(fresh[2 * j], fresh[2 * j + 1]) for j in range(steps)]
    pairs = [(a, b) for a, b in pairs if a != b]
    flags = boundary_flags(H, pairs)
    return H.with_history([(a, b, f) for (a, b), f in zip(pairs, flags)])
