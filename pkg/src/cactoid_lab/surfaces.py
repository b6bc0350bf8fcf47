"""Triangulated length surfaces.

A :class:`TriSurface` is a 2-complex given by vertex labels, oriented faces and
positive edge lengths; every face is a flat Euclidean triangle, so the
polyhedral length metric is fully determined by the edge lengths.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Hashable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .metric_core import FiniteMetricSpace, PointMap, label_order

__all__ = [
    "SurfaceError",
    "SurfaceInvariants",
    "TriSurface",
    "Doubled",
    "invariants",
    "geodesic_metric",
    "graph_metric",
    "mesh_resolution",
    "double",
    "essential_cycle_diagnostic",
    "subdivide",
    "split_edge",
    "tetrahedron",
    "triangle",
    "from_coordinates",
    "icosphere",
    "band",
    "torus7",
    "load_surface",
    "dump_surface",
]

REL_TRI_TOL = 1e-12


class SurfaceError(ValueError):
    """Invalid triangulated surface; the message names the offending element."""


def edge_key(a: Hashable, b: Hashable) -> frozenset:
    return frozenset((a, b))


def _sorted_pair(a, b):
    try:
        return (a, b) if a <= b else (b, a)
    except TypeError:
        return (a, b) if repr(a) <= repr(b) else (b, a)


@dataclass(frozen=True)
class SurfaceInvariants:
    """Classification fingerprint of a compact connected surface."""

    orientable: bool
    euler_char: int
    boundary_count: int

    def __post_init__(self):
        if self.boundary_count < 0:
            raise ValueError("boundary_count must be non-negative")
        r = self.reduced_connectivity
        if r < 0:
            raise ValueError(f"reduced connectivity {r} < 0 is not a surface")
        if self.orientable and r % 2:
            raise ValueError("orientable surfaces have even reduced connectivity")
        if not self.orientable and r == 0:
            raise ValueError("non-orientable surfaces have reduced connectivity >= 1")

    @classmethod
    def of(cls, orientable: bool, connectivity: int, boundary_count: int = 0):
        return cls(bool(orientable), 2 - connectivity, boundary_count)

    @property
    def connectivity(self) -> int:
        return 2 - self.euler_char

    @property
    def reduced_connectivity(self) -> int:
        return self.connectivity - self.boundary_count

    @property
    def genus(self) -> int:
        """Handle count (orientable) or cross-cap count (non-orientable)."""
        r = self.reduced_connectivity
        return r // 2 if self.orientable else r

    def is_sphere_or_disc(self) -> bool:
        return self.orientable and self.reduced_connectivity == 0 and self.boundary_count <= 1

    def name(self) -> str:
        known = {
            (True, 0, 0): "sphere",
            (True, 1, 1): "disc",
            (True, 2, 2): "annulus",
            (True, 2, 0): "torus",
            (False, 1, 0): "projective plane",
            (False, 2, 1): "Moebius band",
            (False, 2, 0): "Klein bottle",
            (True, 3, 3): "pair of pants",
        }
        key = (self.orientable, self.connectivity, self.boundary_count)
        if key in known:
            return known[key]
        kind = "orientable genus" if self.orientable else "non-orientable genus"
        return f"{kind} {self.genus} with {self.boundary_count} boundary circles"

    def to_json(self) -> dict:
        return {
            "orientable": self.orientable,
            "connectivity": self.connectivity,
            "boundary_count": self.boundary_count,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SurfaceInvariants":
        return cls.of(d["orientable"], d["connectivity"], d.get("boundary_count", 0))


class TriSurface:
    """Triangulated compact connected surface with positive edge lengths."""

    def __init__(
        self,
        vertices: Iterable[Hashable],
        faces: Iterable[Sequence[Hashable]],
        lengths: dict,
        *,
        check: bool = True,
    ):
        self.vertices = tuple(vertices)
        self.faces = tuple(tuple(f) for f in faces)
        self.lengths = {edge_key(*tuple(k)): float(v) for k, v in lengths.items()}
        self._edge_faces = None
        if check:
            self.validate()

    # -- structure -----------------------------------------------------------
    @property
    def edge_faces(self) -> dict:
        if self._edge_faces is None:
            ef = defaultdict(list)
            for fi, (a, b, c) in enumerate(self.faces):
                for u, v in ((a, b), (b, c), (c, a)):
                    ef[edge_key(u, v)].append(fi)
            self._edge_faces = dict(ef)
        return self._edge_faces

    @property
    def edges(self) -> list[frozenset]:
        return list(self.edge_faces)

    def boundary_edges(self) -> list[frozenset]:
        return [e for e, fs in self.edge_faces.items() if len(fs) == 1]

    def boundary_vertices(self) -> set:
        out = set()
        for e in self.boundary_edges():
            out |= e
        return out

    def length(self, a, b) -> float:
        return self.lengths[edge_key(a, b)]

    def neighbors(self) -> dict:
        nb = defaultdict(set)
        for e in self.edge_faces:
            a, b = tuple(e)
            nb[a].add(b)
            nb[b].add(a)
        return nb

    def faces_at(self) -> dict:
        fa = defaultdict(list)
        for fi, f in enumerate(self.faces):
            for v in f:
                fa[v].append(fi)
        return fa

    def counts(self) -> tuple[int, int, int]:
        return len(self.vertices), len(self.edge_faces), len(self.faces)

    def euler_char(self) -> int:
        v, e, f = self.counts()
        return v - e + f

    def boundary_cycles(self) -> list[list]:
        """Boundary circles as vertex cycles, deterministic order."""
        adj = defaultdict(list)
        for e in self.boundary_edges():
            a, b = tuple(e)
            adj[a].append(b)
            adj[b].append(a)
        order = {v: i for i, v in enumerate(self.vertices)}
        seen = set()
        cycles = []
        for start in sorted(adj, key=order.__getitem__):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            prev, cur = None, start
            nxt = min(adj[start], key=order.__getitem__)
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                prev, cur = cur, nxt
                cands = [w for w in adj[cur] if w != prev]
                nxt = cands[0] if cands else start
            cycles.append(cyc)
        return cycles

    def circle_of(self) -> dict:
        """Map boundary vertex -> index of its boundary circle."""
        return {v: i for i, cyc in enumerate(self.boundary_cycles()) for v in cyc}

    # -- validation ------------------------------------------------------------
    def validate(self) -> None:
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise SurfaceError("duplicate vertex labels")
        if not self.faces:
            raise SurfaceError("surface has no faces")
        for fi, f in enumerate(self.faces):
            if len(f) != 3 or len(set(f)) != 3:
                raise SurfaceError(f"face {fi} {f} is not a triangle on 3 distinct vertices")
            for v in f:
                if v not in vset:
                    raise SurfaceError(f"face {fi} uses unknown vertex {v!r}")
        ef = self.edge_faces
        for e, fs in ef.items():
            if len(fs) > 2:
                raise SurfaceError(f"edge {_sorted_pair(*e)} lies in {len(fs)} faces")
            if e not in self.lengths:
                raise SurfaceError(f"edge {_sorted_pair(*e)} has no length")
            if not self.lengths[e] > 0:
                raise SurfaceError(f"edge {_sorted_pair(*e)} has non-positive length")
        for e in self.lengths:
            if e not in ef:
                raise SurfaceError(f"length given for non-edge {_sorted_pair(*e)}")
        for fi, (a, b, c) in enumerate(self.faces):
            x, y, z = self.length(a, b), self.length(b, c), self.length(c, a)
            s = max(x, y, z)
            if not (x + y + z - s > s * (1 + REL_TRI_TOL)):
                raise SurfaceError(f"face {fi} {(a, b, c)} violates the strict triangle inequality")
        used = {v for f in self.faces for v in f}
        if used != vset:
            missing = next(v for v in self.vertices if v not in used)
            raise SurfaceError(f"vertex {missing!r} lies in no face")
        self._check_links()
        nb = self.neighbors()
        start = self.vertices[0]
        seen = {start}
        todo = [start]
        while todo:
            v = todo.pop()
            for w in nb[v]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        if len(seen) != len(vset):
            lost = next(v for v in self.vertices if v not in seen)
            raise SurfaceError(f"edge graph is disconnected (vertex {lost!r} unreachable)")

    def _check_links(self) -> None:
        links = defaultdict(list)
        for a, b, c in self.faces:
            links[a].append((b, c))
            links[b].append((c, a))
            links[c].append((a, b))
        for v, segs in links.items():
            deg = defaultdict(int)
            adj = defaultdict(list)
            for i, (p, q) in enumerate(segs):
                deg[p] += 1
                deg[q] += 1
                adj[p].append(q)
                adj[q].append(p)
            if any(d > 2 for d in deg.values()):
                raise SurfaceError(f"vertex {v!r} is not a manifold point (link branches)")
            start = next(iter(adj))
            seen = {start}
            todo = [start]
            while todo:
                p = todo.pop()
                for q in adj[p]:
                    if q not in seen:
                        seen.add(q)
                        todo.append(q)
            if len(seen) != len(adj):
                raise SurfaceError(
                    f"vertex {v!r} is a pinch point (its faces form several fans)"
                )
            ends = [p for p, d in deg.items() if d == 1]
            if len(ends) not in (0, 2):
                raise SurfaceError(f"vertex {v!r} has a broken link")

    # -- misc ------------------------------------------------------------------
    def __repr__(self) -> str:
        v, e, f = self.counts()
        return f"TriSurface(V={v}, E={e}, F={f})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, TriSurface):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.faces == other.faces
            and self.lengths == other.lengths
        )

    __hash__ = None

    def relabel(self, fn) -> "TriSurface":
        return TriSurface(
            [fn(v) for v in self.vertices],
            [tuple(fn(v) for v in f) for f in self.faces],
            {edge_key(*(fn(x) for x in e)): w for e, w in self.lengths.items()},
            check=False,
        )

    def max_edge(self) -> float:
        return max(self.lengths.values())

    def min_edge(self) -> float:
        return min(self.lengths.values())


# -- invariants ------------------------------------------------------------------

def orientation_propagates(S: TriSurface) -> bool:
    """Breadth-first orientation propagation across shared edges."""
    ef = S.edge_faces
    flip: dict[int, bool] = {0: False}
    todo = deque([0])

    def directed(fi, flipped):
        a, b, c = S.faces[fi]
        cyc = ((a, b), (b, c), (c, a))
        return [(q, p) for p, q in cyc] if flipped else list(cyc)

    while todo:
        fi = todo.popleft()
        for u, v in directed(fi, flip[fi]):
            for gj in ef[edge_key(u, v)]:
                if gj == fi:
                    continue
                # neighbour must traverse the shared edge as (v, u)
                want = (v, u) in directed(gj, False)
                need_flip = not want
                if gj in flip:
                    if flip[gj] != need_flip:
                        return False
                else:
                    flip[gj] = need_flip
                    todo.append(gj)
    return True


def invariants(S: TriSurface) -> SurfaceInvariants:
    return SurfaceInvariants(
        orientable=orientation_propagates(S),
        euler_char=S.euler_char(),
        boundary_count=len(S.boundary_cycles()),
    )


# -- metrics -----------------------------------------------------------------------

def graph_metric(nodes: Sequence[Hashable], edges: Iterable[tuple], keep=None) -> FiniteMetricSpace:
    """All-pairs shortest-path metric of a weighted graph, restricted to ``keep``."""
    nodes = list(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    rows, cols, vals = [], [], []
    for a, b, w in edges:
        rows.append(idx[a])
        cols.append(idx[b])
        vals.append(float(w))
    n = len(nodes)
    g = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    keep = nodes if keep is None else list(keep)
    src = [idx[v] for v in keep]
    d = dijkstra(g, directed=False, indices=src)[:, src]
    if not np.all(np.isfinite(d)):
        raise SurfaceError("graph is disconnected")
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(keep, d, trusted=True)


def _layout(a: float, b: float, c: float):
    """Planar positions of a triangle with side lengths |p0p1|=a, |p1p2|=b, |p2p0|=c."""
    x = (a * a + c * c - b * b) / (2 * a)
    y = math.sqrt(max(c * c - x * x, 0.0))
    return np.array([0.0, 0.0]), np.array([a, 0.0]), np.array([x, y])


def _dyadic(k: int, m: int) -> tuple[int, int]:
    g = math.gcd(k, m)
    return k // g, m // g


def _refined_graph(S: TriSurface, refine: int):
    m = 2**refine
    nodes = list(S.vertices)
    points = {}

    def edge_points(u, v):
        a, b = _sorted_pair(u, v)
        pts = [a] + [("e", a, b, *_dyadic(k, m)) for k in range(1, m)] + [b]
        return pts if (a, b) == (u, v) else pts[::-1]

    edges = {}

    def add(p, q, w):
        key = edge_key(p, q)
        if key not in edges or w < edges[key]:
            edges[key] = w

    for e, w in S.lengths.items():
        a, b = _sorted_pair(*e)
        pts = edge_points(a, b)
        for p in pts[1:-1]:
            if p not in points:
                points[p] = None
                nodes.append(p)
        for p, q in zip(pts, pts[1:]):
            add(p, q, w / m)
    for fi, (a, b, c) in enumerate(S.faces):
        pa, pb, pc = _layout(S.length(a, b), S.length(b, c), S.length(c, a))
        pos = {}
        sides = []
        for (u, v), (pu, pv) in (((a, b), (pa, pb)), ((b, c), (pb, pc)), ((c, a), (pc, pa))):
            pts = edge_points(u, v)
            side = []
            for k, p in enumerate(pts):
                pos[p] = pu + (pv - pu) * (k / m)
                side.append(p)
            sides.append(side)
        centre = ("c", fi)
        nodes.append(centre)
        cpos = (pa + pb + pc) / 3
        for p, xy in pos.items():
            add(centre, p, float(np.linalg.norm(xy - cpos)))
        for s1 in range(3):
            for s2 in range(s1 + 1, 3):
                for p in sides[s1]:
                    for q in sides[s2]:
                        if p != q and not (p in sides[s2] or q in sides[s1]):
                            add(p, q, float(np.linalg.norm(pos[p] - pos[q])))
    keep = [v for v in nodes if not (isinstance(v, tuple) and v and v[0] == "c")]
    return nodes, [(*tuple(k), w) for k, w in edges.items()], keep


def geodesic_metric(S: TriSurface, refine: int = 0, *, keep=None) -> FiniteMetricSpace:
    """Shortest-path metric on the refined 1-skeleton.

    Each edge is cut into ``2**refine`` segments; inside every face all
    boundary points on different sides are joined by straight segments and to
    the face centroid.  The returned space holds the original vertices plus
    the edge subdivision points (centroids are auxiliary) unless ``keep``
    restricts it.  See :func:`mesh_resolution` for the sampling radius.
    """
    if refine < 0:
        raise ValueError("refine must be >= 0")
    if refine == 0:
        nodes = list(S.vertices)
        edges = [(*tuple(e), w) for e, w in S.lengths.items()]
        return graph_metric(nodes, edges, keep)
    nodes, edges, default_keep = _refined_graph(S, refine)
    return graph_metric(nodes, edges, default_keep if keep is None else keep)


def mesh_resolution(S: TriSurface, refine: int = 0) -> float:
    """Longest refined edge segment; every surface point lies within it of a sample."""
    return S.max_edge() / 2**refine


# -- doubling --------------------------------------------------------------------

class Doubled(NamedTuple):
    surface: TriSurface
    tau_plus: PointMap | None
    tau_minus: PointMap | None


def _split_chords(S: TriSurface) -> TriSurface:
    bverts = S.boundary_vertices()
    ef = S.edge_faces
    chords = [e for e, fs in ef.items() if len(fs) == 2 and e <= bverts]
    for e in sorted(chords, key=lambda e: repr(_sorted_pair(*e))):
        a, b = _sorted_pair(*e)
        S = split_edge(S, a, b, 0.5, label=("mid", a, b))
    return S


def double(S: TriSurface, *, with_maps: bool = True) -> Doubled:
    """Glue two copies of ``S`` along the boundary.

    Interior edges joining two boundary vertices are split first so that the
    doubled complex stays free of multi-edges.  Labels: ``("+", v)`` and
    ``("-", v)`` for interior vertices, ``("b", v)`` for boundary vertices.
    """
    bedges = S.boundary_edges()
    if not bedges:
        raise SurfaceError("cannot double a closed surface")
    S = _split_chords(S)
    bverts = S.boundary_vertices()

    def lab(v, sign):
        return ("b", v) if v in bverts else (sign, v)

    verts = [lab(v, "+") for v in S.vertices] + [("-", v) for v in S.vertices if v not in bverts]
    faces = [tuple(lab(v, "+") for v in f) for f in S.faces]
    faces += [tuple(lab(v, "-") for v in (f[0], f[2], f[1])) for f in S.faces]
    lengths = {}
    for e, w in S.lengths.items():
        a, b = tuple(e)
        lengths[edge_key(lab(a, "+"), lab(b, "+"))] = w
        lengths[edge_key(lab(a, "-"), lab(b, "-"))] = w
    D = TriSurface(verts, faces, lengths)
    if not with_maps:
        return Doubled(D, None, None)
    M = geodesic_metric(D)
    maps = []
    for sign in ("+", "-"):
        half = [i for i, v in enumerate(M.labels) if v[0] in (sign, "b")]
        target = M.subspace(half)
        fold = {v: (v if v[0] == "b" else (sign, v[1])) for v in M.labels}
        maps.append(PointMap.from_labels(M, target, fold))
    return Doubled(D, maps[0], maps[1])


# -- essential cycles -------------------------------------------------------------

def _cocycles(S: TriSurface) -> tuple[dict, int]:
    """Z/2 cohomology basis via tree-cotree; returns edge -> bitmask, rank."""
    nb = S.neighbors()
    order = {v: i for i, v in enumerate(S.vertices)}
    root = S.vertices[0]
    tree = set()
    seen = {root}
    todo = deque([root])
    while todo:
        v = todo.popleft()
        for w in sorted(nb[v], key=order.__getitem__):
            if w not in seen:
                seen.add(w)
                tree.add(edge_key(v, w))
                todo.append(w)
    ef = S.edge_faces
    dual_adj = defaultdict(list)
    for e, fs in ef.items():
        if e not in tree and len(fs) == 2:
            dual_adj[fs[0]].append((fs[1], e))
            dual_adj[fs[1]].append((fs[0], e))
    cotree = set()
    parent: dict[int, tuple[int, frozenset] | None] = {0: None}
    todo = deque([0])
    while todo:
        f = todo.popleft()
        for g, e in dual_adj[f]:
            if g not in parent:
                parent[g] = (f, e)
                cotree.add(e)
                todo.append(g)
    leftover = [e for e in ef if e not in tree and e not in cotree and len(ef[e]) == 2]

    def path_to_root(f):
        out = []
        while parent[f] is not None:
            g, e = parent[f]
            out.append(e)
            f = g
        return out

    mask = defaultdict(int)
    for bit, e in enumerate(leftover):
        f, g = ef[e]
        crossed = set(path_to_root(f)) ^ set(path_to_root(g))
        crossed.add(e)
        for c in crossed:
            mask[c] |= 1 << bit
    return mask, len(leftover)


def essential_cycle_diagnostic(S: TriSurface) -> float | None:
    """Length of the shortest homologically non-trivial edge cycle of the double.

    DIAGNOSTIC only: a cycle that is non-trivial in Z/2 homology is
    non-contractible, so the value is an upper bound for the edge-graph
    systole of the (doubled) surface.  ``None`` means no essential cycle was
    found, which happens exactly for spheres (and discs, whose double is a
    sphere).
    """
    D = double(S, with_maps=False).surface if S.boundary_edges() else S
    mask, rank = _cocycles(D)
    if rank == 0:
        return None
    nodes = list(D.vertices)
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    rows, cols, vals = [], [], []
    elist = []
    for e, w in D.lengths.items():
        a, b = tuple(e)
        rows += [idx[a], idx[b]]
        cols += [idx[b], idx[a]]
        vals += [w, w]
        elist.append((idx[a], idx[b], w, mask.get(e, 0)))
    g = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    dist, pred = dijkstra(g, directed=True, return_predecessors=True)
    emask = {}
    for a, b, w, m in elist:
        emask[(a, b)] = emask[(b, a)] = m
    best = None
    for s in range(n):
        order = np.argsort(dist[s], kind="stable")
        phi = np.zeros(n, dtype=object)
        for v in order:
            p = pred[s, v]
            if p >= 0:
                phi[v] = phi[p] ^ emask[(p, v)]
        for a, b, w, m in elist:
            if pred[s, b] == a or pred[s, a] == b:
                continue
            if phi[a] ^ phi[b] ^ m:
                L = dist[s, a] + dist[s, b] + w
                if best is None or L < best - 1e-12:
                    best = float(L)
    return best


# -- mesh builders and edits ------------------------------------------------------

def from_coordinates(points: dict, faces: Iterable[Sequence]) -> TriSurface:
    faces = [tuple(f) for f in faces]
    lengths = {}
    for f in faces:
        for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            lengths[edge_key(u, v)] = float(
                np.linalg.norm(np.asarray(points[u], float) - np.asarray(points[v], float))
            )
    return TriSurface(list(points), faces, lengths)


def triangle(a: float = 1.0, b: float = 1.0, c: float = 1.0) -> TriSurface:
    """Single triangle 0-1-2 with |01|=a, |12|=b, |20|=c (a disc)."""
    return TriSurface([0, 1, 2], [(0, 1, 2)], {(0, 1): a, (1, 2): b, (2, 0): c})


def tetrahedron(edge: float = 1.0) -> TriSurface:
    faces = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]
    lengths = {(i, j): edge for i in range(4) for j in range(i + 1, 4)}
    return TriSurface(range(4), faces, lengths)


def torus7(edge: float = 1.0) -> TriSurface:
    """Minimal 7-vertex torus (Moebius-Kantor triangulation, 1-skeleton K7)."""
    faces = []
    for i in range(7):
        faces.append((i, (i + 1) % 7, (i + 3) % 7))
        faces.append((i, (i + 3) % 7, (i + 2) % 7))
    lengths = {(i, j): edge for i in range(7) for j in range(i + 1, 7)}
    return TriSurface(range(7), faces, lengths)


def icosphere(level: int = 1, radius: float = 1.0, label_prefix=None) -> TriSurface:
    """Geodesic icosphere with chordal edge lengths."""
    t = (1 + 5**0.5) / 2
    pts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    pts = [np.array(p, float) / np.linalg.norm(p) for p in pts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(level):
        mid = {}
        new = []

        def m(a, b):
            k = (min(a, b), max(a, b))
            if k not in mid:
                p = pts[a] + pts[b]
                pts.append(p / np.linalg.norm(p))
                mid[k] = len(pts) - 1
            return mid[k]

        for a, b, c in faces:
            ab, bc, ca = m(a, b), m(b, c), m(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    lab = (lambda i: i) if label_prefix is None else (lambda i: (label_prefix, i))
    coords = {lab(i): p * radius for i, p in enumerate(pts)}
    return from_coordinates(coords, [tuple(lab(v) for v in f) for f in faces])


def band(columns: int, rows: int = 3, *, twist: bool = False, closed: bool = True,
         width: float = 1.0, height: float = 1.0) -> TriSurface:
    """Grid strip of ``rows`` x ``columns`` vertices.

    ``closed`` glues the last column to the first (annulus, or Moebius band
    with ``twist``); otherwise the strip is a disc.  Vertex ``(r, k)`` sits in
    row ``r`` and column ``k``; rows 0 and ``rows-1`` carry the boundary.
    """
    if rows < 2 or columns < (3 if closed else 1):
        raise SurfaceError("band too small to be simplicial")
    ncol = columns if closed else columns + 1
    dx, dy = width / columns, height / (rows - 1)
    diag = math.hypot(dx, dy)

    def v(r, k):
        if closed and k == columns:
            return (rows - 1 - r, 0) if twist else (r, 0)
        return (r, k)

    verts = [(r, k) for r in range(rows) for k in range(ncol)]
    faces, lengths = [], {}
    for r in range(rows - 1):
        for k in range(columns):
            a, b, c, d = v(r, k), v(r, k + 1), v(r + 1, k + 1), v(r + 1, k)
            faces += [(a, b, c), (a, c, d)]
            lengths[edge_key(a, b)] = dx
            lengths[edge_key(d, c)] = dx
            lengths[edge_key(a, d)] = dy
            lengths[edge_key(b, c)] = dy
            lengths[edge_key(a, c)] = diag
    return TriSurface(verts, faces, lengths)


def _stewart(p: float, q: float, base: float, t: float) -> float:
    """Length from the apex to the point at fraction t along the base (apex-sides p, q)."""
    # p = |apex, u|, q = |apex, v|, point m = u + t (v - u)
    val = (1 - t) * p * p + t * q * q - t * (1 - t) * base * base
    return math.sqrt(max(val, 0.0))


def split_edge(S: TriSurface, a, b, t: float = 0.5, *, label=None, check: bool = True) -> TriSurface:
    """Insert a vertex on edge ab at fraction ``t`` from ``a`` (flat metric kept)."""
    e = edge_key(a, b)
    if e not in S.edge_faces:
        raise SurfaceError(f"{(a, b)} is not an edge")
    if not 0 < t < 1:
        raise ValueError("t must lie strictly between 0 and 1")
    m = ("split", *_sorted_pair(a, b), t) if label is None else label
    L = S.lengths[e]
    lengths = dict(S.lengths)
    del lengths[e]
    lengths[edge_key(a, m)] = t * L
    lengths[edge_key(m, b)] = (1 - t) * L
    faces = []
    hit = set(S.edge_faces[e])
    for fi, f in enumerate(S.faces):
        if fi not in hit:
            faces.append(f)
            continue
        i = f.index(a)
        # rotate so that the face reads (a, x, y)
        f = f[i:] + f[:i]
        if f[1] == b:
            c = f[2]
            faces += [(a, m, c), (m, b, c)]
        else:
            c = f[1]
            faces += [(a, c, m), (m, c, b)]
        lengths[edge_key(m, c)] = _stewart(S.length(a, c), S.length(b, c), L, t)
    return TriSurface(list(S.vertices) + [m], faces, lengths, check=check)


def subdivide(S: TriSurface, *, check: bool = True) -> TriSurface:
    """Midpoint 1-to-4 subdivision; the polyhedral metric is unchanged."""
    mids = {}
    lengths = {}
    verts = list(S.vertices)
    for e, w in S.lengths.items():
        a, b = _sorted_pair(*e)
        m = ("m", a, b)
        mids[e] = m
        verts.append(m)
        lengths[edge_key(a, m)] = w / 2
        lengths[edge_key(m, b)] = w / 2
    faces = []
    for a, b, c in S.faces:
        ab, bc, ca = mids[edge_key(a, b)], mids[edge_key(b, c)], mids[edge_key(c, a)]
        faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        lengths[edge_key(ab, bc)] = S.length(c, a) / 2
        lengths[edge_key(bc, ca)] = S.length(a, b) / 2
        lengths[edge_key(ca, ab)] = S.length(b, c) / 2
    return TriSurface(verts, faces, lengths, check=check)


# -- file format -------------------------------------------------------------------
#
#   TRISURF 1
#   <V> <F> <E>
#   v <label>                  (V lines)
#   f <label> <label> <label>  (F lines, oriented)
#   e <label> <label> <length> (E lines)
#
# '#' starts a comment.  A label token is compact JSON (tuples as arrays);
# bare words that are not valid JSON are read as strings.

def _untuple(x):
    return tuple(_untuple(y) for y in x) if isinstance(x, list) else x


def _tok(s: str):
    try:
        return _untuple(json.loads(s))
    except ValueError:
        return s


def _label_token(v) -> str:
    if isinstance(v, str) and v.isidentifier():
        try:
            json.loads(v)
        except ValueError:
            return v
    s = json.dumps(v, separators=(",", ":"))
    if any(ch.isspace() for ch in s) or "#" in s:
        raise SurfaceError(f"label {v!r} cannot be written to the text format")
    return s


def load_surface(text: str, source: str = "<string>") -> TriSurface:
    lines = []
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((no, body.split()))
    if not lines or lines[0][1] != ["TRISURF", "1"]:
        raise SurfaceError(f"{source}:1: expected header 'TRISURF 1'")
    try:
        nv, nf, ne = (int(x) for x in lines[1][1])
    except (IndexError, ValueError):
        raise SurfaceError(f"{source}:{lines[1][0] if len(lines) > 1 else 2}: expected '<V> <F> <E>'")
    body = lines[2:]
    verts, faces, lengths = [], [], {}
    for k, (no, toks) in enumerate(body):
        want = "v" if k < nv else ("f" if k < nv + nf else "e")
        arity = {"v": 2, "f": 4, "e": 4}[want]
        if k >= nv + nf + ne:
            raise SurfaceError(f"{source}:{no}: more records than the header declares")
        if toks[0] != want or len(toks) != arity:
            raise SurfaceError(f"{source}:{no}: expected a '{want}' record with {arity - 1} fields")
        if want == "v":
            verts.append(_tok(toks[1]))
        elif want == "f":
            faces.append(tuple(_tok(t) for t in toks[1:]))
        else:
            try:
                w = float(toks[3])
            except ValueError:
                raise SurfaceError(f"{source}:{no}: bad length {toks[3]!r}")
            lengths[edge_key(_tok(toks[1]), _tok(toks[2]))] = w
    if len(body) < nv + nf + ne:
        raise SurfaceError(f"{source}: expected {nv + nf + ne} records, found {len(body)}")
    try:
        return TriSurface(verts, faces, lengths)
    except SurfaceError as exc:
        raise SurfaceError(f"{source}: {exc}") from None


def dump_surface(S: TriSurface) -> str:
    lab = _label_token
    out = ["TRISURF 1", f"{len(S.vertices)} {len(S.faces)} {len(S.lengths)}"]
    out += [f"v {lab(v)}" for v in S.vertices]
    out += ["f " + " ".join(lab(v) for v in f) for f in S.faces]
    pairs = sorted((_sorted_pair(*e), w) for e, w in S.lengths.items())
    out += [f"e {lab(a)} {lab(b)} {w!r}" for (a, b), w in pairs]
    return "\n".join(out) + "\n"
