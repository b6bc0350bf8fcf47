"""Surface approximations of glued cactoids with measured GH bounds.

The pipeline runs, for each scale index ``n``::

    truncate -> prune_and_finitize -> inflate_to_surfaces -> realize_surface

and emits one record per ``n``.  Every record carries the invariants measured
on the built mesh ``X_n`` and an upper bound on the GH distance between the
vertex metric of ``X_n`` and the vertex model of the target space, obtained
from an explicit correspondence.

Target model.  Every original piece is realized once by a fixed mesh (its own
``surface`` or :func:`~cactoid_lab.gluing.standard_surface`); tree edges are cut
into stations.  The target is the graph metric on all these vertices after
merging wedge points and identified pairs.  Raw target labels are
``("v", piece, vertex)``, ``("n", tree, node)`` and ``("t", tree, u, v, i)``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Sequence

import numpy as np

from .cactoid import (
    CactoidError,
    CactoidGraph,
    MainTheoremCertificate,
    MetricTree,
    Piece,
    certify,
    connectivity_number,
    history_flags_valid,
    minimal_preboundary,
    validate,
)
from .gluing import (
    GluingError,
    GluingHistory,
    boundary_arc,
    glue_boundary_arcs,
    identification_to_handle,
    standard_surface,
    tube_wedge,
)
from .metric_core import DEFAULT_GH_CAP, CapExceeded, Correspondence, FiniteMetricSpace, gh_exact, gh_upper, net_sample
from .surfaces import (
    SurfaceInvariants,
    TriSurface,
    edge_key,
    from_coordinates,
    geodesic_metric,
    graph_metric,
    invariants,
    orientation_propagates,
    split_edge,
    subdivide,
)

__all__ = [
    "PipelineError",
    "PipelineConfig",
    "StepRecord",
    "ConvergenceCertificate",
    "TargetModel",
    "piece_mesh",
    "target_model",
    "truncate",
    "prune_and_finitize",
    "tree_cut_hausdorff",
    "inflate_to_surfaces",
    "realize_surface",
    "run_pipeline",
    "thread_count",
]

ORIENTABILITY = ("orientable", "non_orientable", "free")
DEFAULT_SCHEDULE = (2, 4, 8, 16)
NET_BUDGET = 20_000  # search nodes for the net cross-check


class PipelineError(ValueError):
    """The requested approximation cannot be built."""


def thread_count() -> int:
    """Worker cap from ``CACTOID_LAB_THREADS`` (default: CPU count)."""
    raw = os.environ.get("CACTOID_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise PipelineError(f"CACTOID_LAB_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class PipelineConfig:
    n: int = 2
    refine: int = 0
    sample_size: int = DEFAULT_GH_CAP
    orientability: str = "free"
    max_pieces: int | None = None

    def __post_init__(self):
        o = self.orientability.replace("-", "_")
        object.__setattr__(self, "orientability", o)
        if o not in ORIENTABILITY:
            raise PipelineError(f"orientability must be one of {ORIENTABILITY}, got {self.orientability!r}")
        if self.n < 1:
            raise PipelineError("scale index n must be >= 1")
        if self.refine < 0:
            raise PipelineError("refine must be >= 0")
        if not 1 <= self.sample_size <= DEFAULT_GH_CAP:
            raise PipelineError(f"sample size must lie in [1, {DEFAULT_GH_CAP}] to keep gh_exact usable")
        if self.max_pieces is not None and self.max_pieces < 1:
            raise PipelineError("max_pieces must be >= 1")

    def at(self, n: int) -> "PipelineConfig":
        return replace(self, n=n)

    def to_json(self) -> dict:
        return {"n": self.n, "refine": self.refine, "sample_size": self.sample_size,
                "orientability": self.orientability, "max_pieces": self.max_pieces}


# -- piece meshes -------------------------------------------------------------------------

_MESH_CACHE: dict = {}


def _anchor_spots(S: TriSurface, wanted: dict) -> dict | None:
    """Pick pairwise far-apart vertices: ``wanted`` maps point name to circle
    index or None.  Returns None when the mesh is too coarse."""
    cycles = S.boundary_cycles()
    nb = S.neighbors()
    fa = S.faces_at()
    blocked: set = set()
    out = {}

    def block(v):
        ring1 = {v} | nb[v]
        for u in list(ring1):
            blocked.update(nb[u] | {u})
        for u in ring1:
            for fi in fa[u]:
                blocked.update(S.faces[fi])

    names = sorted(wanted, key=repr)
    for idx in sorted({c for c in wanted.values() if c is not None}):
        mine = [x for x in names if wanted[x] == idx]
        cyc = cycles[idx]
        step = len(cyc) / len(mine)
        for j, x in enumerate(mine):
            start = int(round(j * step))
            v = next((cyc[(start + t) % len(cyc)] for t in range(len(cyc))
                      if cyc[(start + t) % len(cyc)] not in blocked), None)
            if v is None:
                return None
            out[x] = v
            block(v)
    inner = [x for x in names if wanted[x] is None]
    if inner:
        bverts = S.boundary_vertices()
        X = geodesic_metric(S)
        cand = [i for i, v in enumerate(X.labels) if v not in bverts]
        if not cand:
            return None
        idx, _ = net_sample(X.subspace(cand), len(cand))
        order = [X.labels[cand[i]] for i in idx]
        for x in inner:
            v = next((u for u in order if u not in blocked), None)
            if v is None:
                return None
            out[x] = v
            block(v)
    return out


def piece_mesh(P: Piece) -> tuple[TriSurface, dict]:
    """Fixed mesh for a piece, vertices labelled ``(piece, v)``, and the anchor
    vertex of every named point."""
    if P.surface is not None:
        S = P.surface.relabel(lambda v: (P.name, v))
        return S, {x: (P.name, v) for x, v in P.anchors.items()}
    key = (P.name, P.invariants, P.diameter, tuple(sorted(P.points.items(), key=repr)))
    if key in _MESH_CACHE:
        return _MESH_CACHE[key]
    S = standard_surface(P.invariants, diameter=P.diameter, tag="s")
    for _ in range(4):
        spots = _anchor_spots(S, P.points)
        if spots is not None:
            break
        S = subdivide(S)
    else:
        raise PipelineError(f"piece {P.name}: cannot place {len(P.points)} points on its mesh")
    S = S.relabel(lambda v: (P.name, v))
    out = (S, {x: (P.name, v) for x, v in spots.items()})
    _MESH_CACHE[key] = out
    return out


def _raw_vertex(piece: str, v) -> tuple:
    return ("v", piece, v)


# -- target model ----------------------------------------------------------------------------

def _min_diameter(G: CactoidGraph) -> float:
    return min((p.diameter for p in G.pieces), default=1.0)


def _station_spacing(G: CactoidGraph) -> float:
    return _min_diameter(G) / 4


def _stations(length: float, spacing: float) -> int:
    return max(2, math.ceil(length / spacing - 1e-9))


@dataclass
class TargetModel:
    """Vertex model of the target glued cactoid."""

    space: FiniteMetricSpace
    node: dict  # raw label -> node label (a representative raw label)
    radius: float  # every point of the target lies this close to a model vertex
    point_raw: dict  # (component, point) -> raw label

    @property
    def diameter(self) -> float:
        return float(self.space.as_float().max())


def _union_find(items):
    parent = {x: x for x in items}

    def find(x):
        if x not in parent:
            return x
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        ra, rb = find(a), find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb), key=repr)
            parent[hi] = lo

    return find, union


def _point_raw(G: CactoidGraph) -> dict:
    out = {}
    for p in G.pieces:
        _, anchors = piece_mesh(p)
        for x in p.points:
            out[(p.name, x)] = _raw_vertex(p.name, anchors[x])
    for t in G.trees:
        for x in t.nodes():
            out[(t.name, x)] = ("n", t.name, x)
    return out


def target_model(G: CactoidGraph, refine: int = 0) -> TargetModel:
    """Graph-metric model of ``G`` with its wedge points and history merged."""
    nodes, edges = [], []
    radius = 0.0
    for p in G.pieces:
        S, _ = piece_mesh(p)
        nodes += [_raw_vertex(p.name, v) for v in S.vertices]
        radius = max(radius, S.max_edge())
        if refine == 0:
            edges += [(_raw_vertex(p.name, u), _raw_vertex(p.name, v), w)
                      for (u, v), w in ((tuple(e), w) for e, w in S.lengths.items())]
        else:
            M = geodesic_metric(S, refine, keep=list(S.vertices))
            D = M.as_float()
            for i, u in enumerate(M.labels):
                for j in range(i + 1, len(M)):
                    edges.append((_raw_vertex(p.name, u), _raw_vertex(p.name, M.labels[j]), D[i, j]))
    spacing = _station_spacing(G)
    for t in G.trees:
        nodes += [("n", t.name, x) for x in t.nodes()]
        for u, v, w in t.edges:
            m = _stations(w, spacing)
            chain = [("n", t.name, u)] + [("t", t.name, u, v, i) for i in range(1, m)] + [("n", t.name, v)]
            nodes += chain[1:-1]
            edges += [(a, b, w / m) for a, b in zip(chain, chain[1:])]
            radius = max(radius, w / m)
    point_raw = _point_raw(G)
    find, union = _union_find(nodes)
    for a, b in G.incidences:
        union(point_raw[a], point_raw[b])
    for s in G.history:
        union(point_raw[s["a"]], point_raw[s["b"]])
    node = {x: find(x) for x in nodes}
    reps = sorted(set(node.values()), key=repr)
    merged = [(node[a], node[b], w) for a, b, w in edges if node[a] != node[b]]
    space = graph_metric(reps, merged)
    return TargetModel(space, node, radius, point_raw)


# -- stage 1: truncation ----------------------------------------------------------------------

def _copy(G: CactoidGraph, **kw) -> CactoidGraph:
    base = dict(name=G.name, pieces=list(G.pieces), trees=list(G.trees), incidences=list(G.incidences),
                grouping=G.grouping, families=list(G.families), history=[dict(s) for s in G.history],
                notes={k: (dict(v) if isinstance(v, dict) else v) for k, v in G.notes.items()})
    base.update(kw)
    return CactoidGraph(**base)


def _history_components(G: CactoidGraph) -> set:
    return {s[k][0] for s in G.history for k in ("a", "b")}


def _collapse(G: CactoidGraph, removed: set) -> tuple[list, dict]:
    """Incidences after collapsing each connected cluster of ``removed``
    components to a point, and a stand-in point per removed component."""
    cls = G.point_classes()
    members: dict = {}
    for pt, r in cls.items():
        members.setdefault(r, []).append(pt)
    # clusters of removed components joined through shared wedge points
    find, union = _union_find(sorted(removed, key=repr))
    for ms in members.values():
        rem = [m[0] for m in ms if m[0] in removed]
        for c in rem[1:]:
            union(rem[0], c)
    clusters: dict = {}
    for c in removed:
        clusters.setdefault(find(c), set()).add(c)
    incidences = [(a, b) for a, b in G.incidences if a[0] not in removed and b[0] not in removed]
    stand_in = {}
    for cl in sorted(clusters.values(), key=lambda s: sorted(s, key=repr)):
        kept = []
        for r, ms in sorted(members.items(), key=lambda kv: repr(kv[0])):
            if any(m[0] in cl for m in ms):
                outside = sorted((m for m in ms if m[0] not in removed), key=repr)
                if outside:
                    kept.append(outside[0])
        if not kept:
            raise PipelineError(f"cannot collapse {sorted(cl)}: nothing else is attached")
        for k in kept[1:]:
            incidences.append((kept[0], k))
        for c in cl:
            stand_in[c] = kept[0]
    return incidences, stand_in


def truncate(G: CactoidGraph, m: int) -> CactoidGraph:
    """Keep the ``m`` largest pieces and collapse the rest.

    Pieces that are not spheres or discs, or that carry identified points, are
    always kept.  Removed clusters collapse to their attachment point; the
    grouping is recomputed.
    """
    if m < 1:
        raise PipelineError("truncate needs m >= 1")
    origin = G.notes.get("origin", G)
    if len(G.pieces) <= m:
        out = _copy(G, families=[])
        out.notes.setdefault("origin", origin)
        return out
    ranked = sorted(G.pieces, key=lambda p: (-p.diameter, p.name))
    keep = {p.name for p in ranked[:m]}
    keep |= {p.name for p in G.pieces if not p.invariants.is_sphere_or_disc()}
    keep |= _history_components(G)
    removed = {p.name for p in G.pieces} - keep
    if not removed:
        out = _copy(G, families=[])
        out.notes.setdefault("origin", origin)
        return out
    incidences, stand_in = _collapse(G, removed)
    out = _copy(G, pieces=[p for p in G.pieces if p.name in keep], incidences=incidences, families=[])
    out.notes["origin"] = origin
    out.notes.setdefault("collapsed", {}).update(stand_in)
    if G.grouping is not None:
        out.grouping = minimal_preboundary(out)
    return out


# -- stage 2: pruning ---------------------------------------------------------------------------

def _essential(G: CactoidGraph) -> set:
    pts = {a for a, b in G.incidences} | {b for a, b in G.incidences}
    pts |= {s[k] for s in G.history for k in ("a", "b")}
    return pts


def _prune_tree(t: MetricTree, essential: set, tau: float):
    """Return (kept edges, {pruned node: stand-in node}, {pruned edge: stand-in node})."""
    adj: dict = {}
    for u, v, w in t.edges:
        adj.setdefault(u, []).append((v, w))
        adj.setdefault(v, []).append((u, w))
    nodes = t.nodes()
    root = next((x for x in nodes if (t.name, x) in essential), nodes[0])
    parent = {root: None}
    order = [root]
    for x in order:
        for y, _ in adj[x]:
            if y not in parent:
                parent[y] = x
                order.append(y)
    height = {x: 0.0 for x in nodes}
    has_ess = {x: (t.name, x) in essential for x in nodes}
    for x in reversed(order):
        for y, w in adj[x]:
            if parent.get(y) == x:
                height[x] = max(height[x], w + height[y])
                has_ess[x] = has_ess[x] or has_ess[y]
    cut_nodes, cut_edges = {}, {}
    dropped = set()
    for x in order:
        if x in dropped:
            continue
        for y, w in adj[x]:
            if parent.get(y) == x and not has_ess[y] and w + height[y] < tau:
                sub = [y]
                for z in sub:
                    sub += [c for c, _ in adj[z] if parent.get(c) == z]
                for z in sub:
                    dropped.add(z)
                    cut_nodes[z] = x
    # stand-ins must be surviving nodes
    for z in list(cut_nodes):
        s = cut_nodes[z]
        while s in dropped:
            s = cut_nodes[s]
        cut_nodes[z] = s
    kept = []
    for u, v, w in t.edges:
        if u in dropped or v in dropped:
            cut_edges[(u, v)] = cut_nodes[v if v in dropped else u]
        else:
            kept.append((u, v, w))
    return kept, cut_nodes, cut_edges, root


def tree_cut_hausdorff(before: MetricTree, after_edges: Iterable[tuple], root) -> float:
    """Hausdorff distance, inside ``before``, between the tree and its subtree
    ``after_edges`` (which contains ``root``)."""
    nodes = before.nodes()
    M = graph_metric(nodes, list(before.edges))
    keep = {root} | {x for e in after_edges for x in e[:2]}
    D = M.as_float()
    ki = [M.index(x) for x in keep]
    return float(D[:, ki].min(axis=1).max())


def prune_and_finitize(G: CactoidGraph, n: int) -> CactoidGraph:
    """Cut tree twigs of height below ``eps / n`` (``eps`` = smallest piece
    diameter) that carry no wedge or identified point.  A tree pruned down to
    a single point collapses into the components it was attached to."""
    if n < 1:
        raise PipelineError("scale index n must be >= 1")
    if not G.trees:
        out = _copy(G)
        out.notes.setdefault("origin", G.notes.get("origin", G))
        return out
    tau = _min_diameter(G) / n
    essential = _essential(G)
    trees = []
    notes_nodes, notes_edges = {}, {}
    vanished = set()
    for t in G.trees:
        kept, cn, ce, root = _prune_tree(t, essential, tau)
        for z, s in cn.items():
            notes_nodes[(t.name, z)] = (t.name, s)
        for (u, v), s in ce.items():
            notes_edges[(t.name, u, v)] = (t.name, s)
        if kept:
            trees.append(MetricTree(t.name, tuple(kept)))
        else:
            vanished.add(t.name)
    out = _copy(G, trees=trees)
    out.notes["origin"] = G.notes.get("origin", G)
    out.notes.setdefault("pruned_nodes", {}).update(notes_nodes)
    out.notes.setdefault("pruned_edges", {}).update(notes_edges)
    if vanished:
        if len(vanished) == len(G.component_names()):
            raise PipelineError("pruning would remove every component")
        hist = _history_components(G) & vanished
        if hist:
            raise PipelineError(f"trees {sorted(hist)} carry identified points and cannot vanish")
        inc, stand_in = _collapse(out_with_trees(G, out), vanished)
        out.incidences = inc
        out.notes.setdefault("collapsed", {}).update(stand_in)
    if G.grouping is not None:
        out.grouping = minimal_preboundary(out)
    return out


def out_with_trees(G: CactoidGraph, pruned: CactoidGraph) -> CactoidGraph:
    """``pruned`` with its vanished trees restored as single edges, so that
    collapse bookkeeping still sees their wedge points."""
    names = {t.name for t in pruned.trees}
    back = list(pruned.trees)
    for t in G.trees:
        if t.name not in names:
            back.append(t)
    return _copy(pruned, trees=back)


# -- stage 3: inflation -----------------------------------------------------------------------------

def _spindle(tag, length: float, m: int, width: float) -> tuple[TriSurface, dict, list]:
    """Thin triangulated sphere around a segment: apexes at the ends, a
    triangle of radius ``width`` at each interior station."""
    pts = {(tag, "a"): (0.0, 0.0, 0.0), (tag, "b"): (length, 0.0, 0.0)}
    rings = []
    for i in range(1, m):
        x = length * i / m
        ring = []
        for j in range(3):
            ang = 2 * math.pi * j / 3 + (math.pi / 3) * (i % 2)
            v = (tag, i, j)
            pts[v] = (x, width * math.cos(ang), width * math.sin(ang))
            ring.append(v)
        rings.append(ring)
    faces = []
    for j in range(3):
        faces.append(((tag, "a"), rings[0][(j + 1) % 3], rings[0][j]))
        faces.append(((tag, "b"), rings[-1][j], rings[-1][(j + 1) % 3]))
    for r0, r1 in zip(rings, rings[1:]):
        for j in range(3):
            faces.append((r0[j], r0[(j + 1) % 3], r1[j]))
            faces.append((r0[(j + 1) % 3], r1[(j + 1) % 3], r1[j]))
    S = from_coordinates(pts, faces)
    station = {(tag, "a"): 0, (tag, "b"): m}
    for i, ring in enumerate(rings, start=1):
        for v in ring:
            station[v] = i
    return S, station, [(tag, "a"), (tag, "b")]


def _lens(tag, length: float, m: int, width: float) -> tuple[TriSurface, dict, list]:
    """Thin triangulated disc around a segment whose boundary circle runs
    along both sides; the end points lie on the boundary."""
    A, B = (tag, "a"), (tag, "b")
    pts = {A: (0.0, 0.0), B: (length, 0.0)}
    top, mid, bot = [], [], []
    for i in range(1, m):
        x = length * i / m
        for row, y, lst in (("t", width, top), ("c", 0.0, mid), ("u", -width, bot)):
            v = (tag, row, i)
            pts[v] = (x, y)
            lst.append(v)
    faces = [(A, top[0], mid[0]), (A, mid[0], bot[0]),
             (top[-1], B, mid[-1]), (mid[-1], B, bot[-1])]
    for i in range(len(top) - 1):
        faces += [(top[i], top[i + 1], mid[i + 1]), (top[i], mid[i + 1], mid[i]),
                  (mid[i], mid[i + 1], bot[i + 1]), (mid[i], bot[i + 1], bot[i])]
    S = from_coordinates(pts, faces)
    station = {A: 0, B: m}
    for lst in (top, mid, bot):
        for i, v in enumerate(lst, start=1):
            station[v] = i
    return S, station, [A, B]


def _wheel(tag, k: int, radius: float, closed: bool) -> tuple[TriSurface, list]:
    """Flat disc (centre + ``k``-gon) or bipyramid sphere; returns the rim."""
    rim = [(tag, "r", j) for j in range(k)]
    pts = {v: (radius * math.cos(2 * math.pi * j / k), radius * math.sin(2 * math.pi * j / k), 0.0)
           for j, v in enumerate(rim)}
    N, S_ = (tag, "N"), (tag, "S")
    pts[N] = (0.0, 0.0, radius if closed else 0.0)
    faces = [(N, rim[j], rim[(j + 1) % k]) for j in range(k)]
    if closed:
        pts[S_] = (0.0, 0.0, -radius)
        faces += [(S_, rim[(j + 1) % k], rim[j]) for j in range(k)]
    return from_coordinates(pts, faces), rim


def inflate_to_surfaces(G: CactoidGraph, n: int) -> CactoidGraph:
    """Replace trees and crowded wedge points by thin surfaces.

    Each tree edge becomes a thin disc if it lies on the boundary, a thin
    sphere otherwise; every wedge point shared by three or more components
    gets a small separator disc (boundary point) or sphere.  Every piece of
    the result carries a mesh, anchors and a vertex-to-target map
    (``notes["vertex_targets"]``).
    """
    if n < 1:
        raise PipelineError("scale index n must be >= 1")
    origin = G.notes.get("origin", G)
    spacing = _station_spacing(origin)
    eps = _min_diameter(origin)
    vt: dict = {}
    pieces = []
    for p in G.pieces:
        S, anchors = piece_mesh(p)
        pieces.append(Piece(p.name, p.invariants, dict(p.points), S, anchors, p.diameter))
        vt[p.name] = {v: _raw_vertex(p.name, v) for v in S.vertices}
    boundary_edges = set()
    if G.trees:
        for C in minimal_preboundary(G):
            boundary_edges |= set(C.tree_edges)
    incidences = list(G.incidences)
    history = [dict(s) for s in G.history]
    used_names = {p.name for p in G.pieces} | {t.name for t in G.trees}

    def fresh(base):
        name, j = base, 0
        while name in used_names:
            j += 1
            name = f"{base}.{j}"
        used_names.add(name)
        return name

    node_ends: dict = {}
    for t in G.trees:
        for i, (u, v, w) in enumerate(t.edges):
            name = fresh(f"{t.name}/e{i}")
            m = _stations(w, spacing)
            width = min(0.25 * w / m, eps / 4) / n
            on_bd = (t.name, u, v) in boundary_edges
            build = _lens if on_bd else _spindle
            S, station, (A, B) = build(name, w, m, width)
            inv = SurfaceInvariants.of(True, 1, 1) if on_bd else SurfaceInvariants.of(True, 0, 0)
            pts = {"a": 0 if on_bd else None, "b": 0 if on_bd else None}
            pieces.append(Piece(name, inv, pts, S, {"a": A, "b": B}, w))
            chain = {0: ("n", t.name, u), m: ("n", t.name, v)}
            vt[name] = {x: chain.get(station[x], ("t", t.name, u, v, station[x])) for x in S.vertices}
            node_ends.setdefault((t.name, u), []).append((name, "a"))
            node_ends.setdefault((t.name, v), []).append((name, "b"))

    def swap(pt):
        return node_ends[pt][0] if pt in node_ends else pt

    incidences = [(swap(a), swap(b)) for a, b in incidences]
    for ends in node_ends.values():
        incidences += [(ends[0], e) for e in ends[1:]]
    for s in history:
        s["a"], s["b"] = swap(s["a"]), swap(s["b"])
    out = _copy(G, pieces=pieces, trees=[], incidences=incidences, history=history, grouping=None)
    out.notes["origin"] = origin
    # separators at crowded wedge points
    cls = out.point_classes()
    members: dict = {}
    for pt, r in cls.items():
        members.setdefault(r, []).append(pt)
    crowded = [sorted(ms, key=repr) for _, ms in sorted(members.items(), key=lambda kv: repr(kv[0])) if len(ms) >= 3]
    for j, ms in enumerate(crowded):
        name = fresh(f"sep{j}")
        on_bd = any(out.circle_of_point(m) is not None for m in ms)
        k = max(6, 2 * len(ms) + 2)
        S, rim = _wheel(name, k, eps / (4 * n), closed=not on_bd)
        anchors = {f"s{i}": rim[2 * i] for i in range(len(ms))}
        inv = SurfaceInvariants.of(True, 1, 1) if on_bd else SurfaceInvariants.of(True, 0, 0)
        pts = {x: (0 if on_bd else None) for x in anchors}
        out.pieces.append(Piece(name, inv, pts, S, anchors, eps / (2 * n)))
        target = vt[ms[0][0]][_anchor_of(out, ms[0])]
        vt[name] = {v: target for v in S.vertices}
        mset = set(ms)
        out.incidences = [(a, b) for a, b in out.incidences if not (a in mset and b in mset)]
        out.incidences += [(m_, (name, f"s{i}")) for i, m_ in enumerate(ms)]
    out.notes["vertex_targets"] = vt
    if G.grouping is not None:
        out.grouping = minimal_preboundary(out)
    return out


def _anchor_of(G: CactoidGraph, pt):
    return G.piece(pt[0]).anchors[pt[1]]


# -- stage 4: realization ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    n: int
    gh_upper_bound: float
    net_radius: float
    total_error: float
    invariants: SurfaceInvariants
    expected_connectivity: int
    orientation_propagates: bool
    vertex_count: int
    net_gh: float | None
    net_radii: tuple
    main: MainTheoremCertificate

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "gh_upper_bound": self.gh_upper_bound,
            "net_radius": self.net_radius,
            "total_error": self.total_error,
            "invariants": self.invariants.to_json(),
            "expected_connectivity": self.expected_connectivity,
            "orientation_propagates": self.orientation_propagates,
            "vertex_count": self.vertex_count,
            "net_gh": self.net_gh,
            "net_radii": list(self.net_radii),
            "main_theorem": self.main.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "StepRecord":
        m = d["main_theorem"]
        return cls(
            int(d["n"]), float(d["gh_upper_bound"]), float(d["net_radius"]), float(d["total_error"]),
            SurfaceInvariants.from_json(d["invariants"]), int(d["expected_connectivity"]),
            bool(d["orientation_propagates"]), int(d["vertex_count"]),
            None if d["net_gh"] is None else float(d["net_gh"]),
            tuple(float(x) for x in d["net_radii"]),
            MainTheoremCertificate(m["c_target"], m["c0"], m["k"], m["k0"]),
        )


@dataclass
class ConvergenceCertificate:
    records: dict  # n -> StepRecord
    main: MainTheoremCertificate
    target_diameter: float
    orientability: str = "free"
    surfaces: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def schedule(self) -> list[int]:
        return sorted(self.records)

    def bounds(self) -> list[float]:
        return [self.records[n].gh_upper_bound for n in self.schedule]

    def strictly_decreasing(self) -> bool:
        b = self.bounds()
        return all(x > y for x, y in zip(b, b[1:]))

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "main_theorem": self.main.to_json(),
            "target_diameter": self.target_diameter,
            "orientability": self.orientability,
            "records": [self.records[n].to_json() for n in self.schedule],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ConvergenceCertificate":
        if d.get("format_version", 1) != 1:
            raise PipelineError(f"unsupported format_version {d.get('format_version')}")
        m = d["main_theorem"]
        recs = [StepRecord.from_json(r) for r in d["records"]]
        return cls({r.n: r for r in recs}, MainTheoremCertificate(m["c_target"], m["c0"], m["k"], m["k0"]),
                   float(d["target_diameter"]), d.get("orientability", "free"))

    def to_csv(self) -> str:
        rows = ["n,gh_upper_bound,net_radius,total_error,connectivity,boundary_count,orientable"]
        for n in self.schedule:
            r = self.records[n]
            rows.append(f"{n},{r.gh_upper_bound!r},{r.net_radius!r},{r.total_error!r},"
                        f"{r.invariants.connectivity},{r.invariants.boundary_count},{int(r.invariants.orientable)}")
        return "\n".join(rows) + "\n"


def _history_of(G: CactoidGraph, H) -> CactoidGraph:
    if H is None:
        return G
    if isinstance(H, GluingHistory):
        steps = []
        for s in H.steps:
            if s.kind != "two_point":
                raise PipelineError("only 2-point identifications can be replayed on a cactoid")
            steps.append((tuple(s.args["a"]), tuple(s.args["b"]), s.boundary_flag))
    else:
        steps = [(tuple(a), tuple(b), bool(f)) for a, b, f in H]
    out = _copy(G, history=[])
    return out.with_history(steps)


def _check_input(G: CactoidGraph) -> None:
    probe = _copy(G)
    probe.grouping = G.grouping if G.grouping is not None else minimal_preboundary(G)
    rep = validate(probe)
    if not rep.ok:
        raise CactoidError("; ".join(rep.violations))
    bad = history_flags_valid(G)
    if bad:
        raise CactoidError("; ".join(bad))
    pts = [s[k] for s in G.history for k in ("a", "b")]
    if len(set(pts)) != len(pts):
        raise PipelineError("each point may take part in at most one identification")
    if not G.pieces:
        raise PipelineError("the pipeline needs at least one surface piece")


def _orientation_plan(G: CactoidGraph, target: str) -> bool:
    """Whether to twist the first identification."""
    non_or = any(not p.invariants.orientable for p in G.pieces)
    if target == "orientable":
        if non_or:
            raise PipelineError("orientable approximations need orientable pieces")
        return False
    if target == "non_orientable":
        if non_or:
            return False
        if G.history:
            return True
        raise PipelineError("non-orientable approximations need a non-orientable piece or an identification")
    return False


class _Builder:
    """Folds a 𝒲₀ graph into one mesh while tracking vertex targets."""

    def __init__(self, G: CactoidGraph, n: int, kappa: float):
        self.G = G
        self.n = n
        self.kappa = kappa
        self.vt = G.notes["vertex_targets"]
        raw = {}
        for p in G.pieces:
            for x, v in p.anchors.items():
                raw[(p.name, x)] = self.vt[p.name][v]
        self.raw = raw
        find, union = _union_find(set(raw.values()))
        for a, b in G.incidences:
            union(raw[a], raw[b])
        self.wnode = find
        self.mesh: TriSurface | None = None
        self.tmap: dict = {}
        self.step = 0

    def piece(self, name):
        p = self.G.piece(name)
        return p.surface, {v: self.vt[name][v] for v in p.surface.vertices}

    def locate(self, S: TriSurface, tmap: dict, pt, want: str):
        node = self.wnode(self.raw[pt])
        anchor = self.G.piece(pt[0]).anchors[pt[1]]
        cands = [v for v in S.vertices if self.wnode(tmap[v]) == node]
        if not cands:
            raise PipelineError(f"point {pt!r} vanished from the mesh")
        bverts = S.boundary_vertices()
        if want == "boundary":
            pool = [v for v in cands if v in bverts]
            if not pool:
                raise PipelineError(f"point {pt!r} is flagged as boundary but is interior in the mesh")
        elif want == "interior":
            pool = [v for v in cands if v not in bverts]
            if not pool:
                return self.push_inside(S, tmap, anchor if anchor in cands else cands[0])
        else:
            pool = cands
        v = anchor if anchor in pool else pool[0]
        return S, v

    def push_inside(self, S: TriSurface, tmap: dict, v):
        inner = [x for x in S.neighbors()[v] if len(S.edge_faces[edge_key(v, x)]) == 2]
        if not inner:
            raise PipelineError(f"boundary vertex {v!r} has no interior edge")
        order = {u: i for i, u in enumerate(S.vertices)}
        x = max(inner, key=lambda u: (S.length(v, u), -order[u]))
        L = S.length(v, x)
        d = min(self.kappa / self.n, 0.45 * L)
        self.step += 1
        m = ("in", self.step)
        S = split_edge(S, v, x, d / L, label=m)
        tmap[m] = tmap[v]
        return S, m

    def arc_radius(self, S, v):
        bn = [S.length(v, x) for x in S.neighbors()[v] if len(S.edge_faces[edge_key(v, x)]) == 1]
        return min(bn)

    def wedge(self, a, b):
        """Attach the piece of ``b`` to the mesh (which contains ``a``)."""
        self.step += 1
        P, ptm = self.piece(b[0])
        a_on = self.G.circle_of_point(a) is not None
        b_on = self.G.circle_of_point(b) is not None
        tmap = dict(self.tmap)
        tmap.update(ptm)
        if a_on and b_on:
            M, va = self.locate(self.mesh, tmap, a, "boundary")
            P, vb = self.locate(P, tmap, b, "boundary")
            r = min(self.kappa / self.n, 0.45 * self.arc_radius(M, va), 0.45 * self.arc_radius(P, vb))
            M1, arc1 = boundary_arc(M, va, r, tag=("arc", self.step, 0))
            P1, arc2 = boundary_arc(P, vb, r, tag=("arc", self.step, 1))
            g = glue_boundary_arcs(M1, arc1, P1, arc2)
            fallback = tmap[va]
            self.mesh = g.surface
            self.tmap = {v: tmap.get(v, fallback) for v in g.surface.vertices}
        else:
            M, va = self.locate(self.mesh, tmap, a, "interior")
            P, vb = self.locate(P, tmap, b, "interior")
            g = tube_wedge(M, va, P, vb, self.n, tag=("w", self.step), kappa=self.kappa)
            self.mesh = g.surface
            self.tmap = {v: tmap[g.origin[v]] for v in g.surface.vertices}

    def identify(self, a, b, flag: bool, twisted: bool):
        self.step += 1
        want = "boundary" if flag else "interior"
        tmap = dict(self.tmap)
        M, va = self.locate(self.mesh, tmap, a, want)
        M, vb = self.locate(M, tmap, b, want)
        g = identification_to_handle(M, va, vb, self.n, boundary=flag, twisted=twisted,
                                     tag=("h", self.step), kappa=self.kappa)
        self.mesh = g.surface
        self.tmap = {v: tmap[g.origin[v]] for v in g.surface.vertices}

    def run(self, twist_first: bool) -> TriSurface:
        G = self.G
        first = G.pieces[0].name
        self.mesh, self.tmap = self.piece(first)
        built = {first}
        todo = list(G.incidences)
        while todo:
            progress = False
            for inc in list(todo):
                a, b = inc
                if a[0] in built and b[0] not in built:
                    pass
                elif b[0] in built and a[0] not in built:
                    a, b = b, a
                else:
                    continue
                self.wedge(a, b)
                built.add(b[0])
                todo.remove(inc)
                progress = True
            if not progress:
                raise PipelineError("incidences do not form a connected wedge tree")
        for j, s in enumerate(G.history):
            self.identify(s["a"], s["b"], s["boundary_flag"], twist_first and j == 0)
        return self.mesh


def _kappa(G: CactoidGraph) -> float:
    return min(1.0, 0.9 * min(p.surface.min_edge() for p in G.pieces))


def realize_surface(G: CactoidGraph, H=None, cfg: PipelineConfig | None = None, *,
                    c_target: int | None = None, target: TargetModel | None = None):
    """Build ``X_n`` for a 𝒲₀ graph and measure it against the target.

    Returns ``(surface, StepRecord)``.  The measured connectivity must equal
    ``c0 - k0 + 2k``; orientability follows ``cfg.orientability``.
    """
    cfg = cfg or PipelineConfig()
    G = _history_of(G, H)
    if "vertex_targets" not in G.notes:
        raise PipelineError("realize_surface expects the output of inflate_to_surfaces")
    origin = G.notes.get("origin", G)
    if H is not None:
        origin = _history_of(origin, H)
    c0 = connectivity_number(G)
    expected = c0 - G.k0 + 2 * G.k
    c_target = expected if c_target is None else c_target
    main = certify(c_target, origin)
    if not main.verdict:
        raise PipelineError(f"connectivity certificate is false: c0={main.c0} > {main.bound}")
    twist = _orientation_plan(G, cfg.orientability)
    b = _Builder(G, cfg.n, _kappa(G))
    X = b.run(twist)
    inv = invariants(X)
    if inv.connectivity != expected:
        raise PipelineError(f"built connectivity {inv.connectivity}, expected {expected}")
    prop = orientation_propagates(X)
    if cfg.orientability == "orientable" and not prop:
        raise PipelineError("orientable target but the mesh is non-orientable")
    if cfg.orientability == "non_orientable" and prop:
        raise PipelineError("non-orientable target but the mesh is orientable")
    target = target or target_model(origin, cfg.refine)
    record = _measure(X, b.tmap, G, target, cfg, inv, expected, prop, main)
    return X, record


def _stand_in_raw(G: CactoidGraph, target: TargetModel, raw):
    """Raw label standing in for a target vertex removed by truncation or pruning."""
    notes = G.notes
    for _ in range(64):
        kind = raw[0]
        pt = None
        if kind == "v" and raw[1] in notes.get("collapsed", {}):
            pt = notes["collapsed"][raw[1]]
        elif kind in ("n", "t") and raw[1] in notes.get("collapsed", {}):
            pt = notes["collapsed"][raw[1]]
        elif kind == "n" and (raw[1], raw[2]) in notes.get("pruned_nodes", {}):
            pt = notes["pruned_nodes"][(raw[1], raw[2])]
        elif kind == "t" and (raw[1], raw[2], raw[3]) in notes.get("pruned_edges", {}):
            pt = notes["pruned_edges"][(raw[1], raw[2], raw[3])]
        if pt is None:
            return raw
        raw = target.point_raw[pt]
    raise PipelineError("stand-in chain does not terminate")


def _measure(X, tmap, G, target: TargetModel, cfg, inv, expected, prop, main) -> StepRecord:
    XM = geodesic_metric(X, cfg.refine, keep=list(X.vertices)) if cfg.refine else geodesic_metric(X)
    T = target.space
    node_of = target.node
    pairs = set()
    covered: dict = {}
    for v in XM.labels:
        j = T.index(node_of[tmap[v]])
        i = XM.index(v)
        pairs.add((i, j))
        covered.setdefault(j, i)
    for raw, node in node_of.items():
        j = T.index(node)
        if j in covered:
            continue
        sub = node_of[_stand_in_raw(G, target, raw)]
        js = T.index(sub)
        if js not in covered:
            raise PipelineError(f"target point {raw!r} has no counterpart in X_{cfg.n}")
        pairs.add((covered[js], j))
        covered[j] = covered[js]
    bound = float(gh_upper(XM, T, Correspondence(pairs)))
    rX = X.max_edge()
    net_radius = rX + target.radius
    k = cfg.sample_size
    ix, radX = net_sample(XM, min(k, len(XM)))
    iy, radY = net_sample(T, min(k, len(T)))
    try:
        net_gh = float(gh_exact(XM.subspace(ix), T.subspace(iy), size_cap=DEFAULT_GH_CAP, budget=NET_BUDGET))
    except CapExceeded:
        net_gh = None
    return StepRecord(cfg.n, bound, net_radius, bound + net_radius, inv, expected, prop, len(XM),
                      net_gh, (float(radX), float(radY)), main)


# -- pipeline --------------------------------------------------------------------------------

def _one_scale(G: CactoidGraph, cfg: PipelineConfig, c_target, target: TargetModel):
    stage = truncate(G, cfg.max_pieces) if cfg.max_pieces else _copy(G, notes={"origin": G})
    stage = prune_and_finitize(stage, cfg.n)
    stage = inflate_to_surfaces(stage, cfg.n)
    return realize_surface(stage, None, cfg, c_target=c_target, target=target)


def run_pipeline(G: CactoidGraph, H=None, schedule: Sequence[int] = DEFAULT_SCHEDULE,
                 cfg: PipelineConfig | None = None, *, c_target: int | None = None,
                 keep_surfaces: bool = False) -> ConvergenceCertificate:
    """Run every stage for each ``n`` in ``schedule`` (in parallel, capped by
    ``CACTOID_LAB_THREADS``) and assemble the certificate."""
    cfg = cfg or PipelineConfig()
    G = _history_of(G, H)
    _check_input(G)
    c_expected = connectivity_number(G) - G.k0 + 2 * G.k
    c_target = c_expected if c_target is None else c_target
    main = certify(c_target, G)
    if not main.verdict:
        raise PipelineError(f"connectivity certificate is false: c0={main.c0} > {main.bound}")
    _orientation_plan(G, cfg.orientability)
    schedule = sorted(set(int(n) for n in schedule))
    if not schedule or schedule[0] < 1:
        raise PipelineError("schedule must hold positive scale indices")
    target = target_model(G, cfg.refine)
    workers = min(len(schedule), thread_count())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda n: _one_scale(G, cfg.at(n), c_target, target), schedule))
    else:
        results = [_one_scale(G, cfg.at(n), c_target, target) for n in schedule]
    records = {r.n: r for _, r in results}
    surfaces = {r.n: X for X, r in results} if keep_surfaces else {}
    return ConvergenceCertificate(records, main, target.diameter, cfg.orientability, surfaces)
