"""Metric quotients (wedge sums, 2-point identifications) and their mesh-level
surrogates: thin tubes, strips, boundary-arc gluings and cross-caps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .metric_core import (
    FiniteMetricSpace,
    PointMap,
    PseudometricSpace,
    _label_from_json,
    _label_to_json,
    _tol,
    net_sample,
)
from .surfaces import (
    SurfaceError,
    SurfaceInvariants,
    TriSurface,
    _stewart,
    edge_key,
    geodesic_metric,
    icosphere,
    invariants,
    orientation_propagates,
    split_edge,
)

__all__ = [
    "GluingError",
    "GluingStep",
    "GluingHistory",
    "Glued",
    "two_point_identification",
    "wedge_sum",
    "scale_radius",
    "carve",
    "boundary_arc",
    "glue_boundary_arcs",
    "identification_to_handle",
    "tube_wedge",
    "crosscap",
    "standard_surface",
    "disjoint_union_labels",
]


class GluingError(ValueError):
    """A gluing precondition failed."""


# -- metric quotients ----------------------------------------------------------------

def two_point_identification(X: FiniteMetricSpace, a: Hashable, b: Hashable):
    """Quotient of ``X`` by ``a ~ b``; the merged class keeps the label ``a``.

    Adding a zero-length link between a and b, a shortest path uses the
    link at most once, so the all-pairs update is the closed form
    ``min(d(x,y), d(x,a) + d(b,y), d(x,b) + d(a,y))``.
    """
    if a == b:
        raise GluingError("cannot identify a point with itself")
    i, j = X.index(a), X.index(b)
    d = X.dist
    q = np.minimum(d, np.minimum(d[:, [i]] + d[[j], :], d[:, [j]] + d[[i], :]))
    keep = [k for k in range(len(X)) if k != j]
    q = q[np.ix_(keep, keep)]
    labels = [X.labels[k] for k in keep]
    n = len(keep)
    off = q + np.eye(n, dtype=int)
    cls = PseudometricSpace if np.any(off <= _tol(q)) else FiniteMetricSpace
    Q = cls(labels, q, trusted=True)
    proj = PointMap.from_labels(X, Q, {lab: (a if lab == b else lab) for lab in X.labels})
    return Q, proj


def disjoint_union_labels(X: FiniteMetricSpace, Y: FiniteMetricSpace):
    """Label functions for the pieces of a disjoint union (tags only on clashes)."""
    if set(X.labels).isdisjoint(Y.labels):
        return (lambda v: v), (lambda v: v)
    return (lambda v: (0, v)), (lambda v: (1, v))


def wedge_sum(X: FiniteMetricSpace, p: Hashable, Y: FiniteMetricSpace, q: Hashable):
    """Wedge ``X`` and ``Y`` at ``p ~ q``; returns the space and both inclusions.

    The wedge point keeps the (possibly tagged) label of ``p``.
    """
    i, j = X.index(p), Y.index(q)
    fx, fy = disjoint_union_labels(X, Y)
    yk = [k for k in range(len(Y)) if k != j]
    labels = [fx(v) for v in X.labels] + [fy(Y.labels[k]) for k in yk]
    n, m = len(X), len(yk)
    exact = X.exact and Y.exact
    dt = object if exact else float
    D = np.zeros((n + m, n + m), dtype=dt)
    if exact:
        D[:] = 0
    D[:n, :n] = X.dist
    Yd = Y.dist[np.ix_(yk, yk)]
    D[n:, n:] = Yd
    cross = X.dist[:, [i]] + Y.dist[[j], :][:, yk]
    D[:n, n:] = cross
    D[n:, :n] = cross.T
    Z = FiniteMetricSpace(labels, D, trusted=True)
    incX = PointMap.from_labels(X, Z, {v: fx(v) for v in X.labels})
    ymap = {v: fy(v) for v in Y.labels}
    ymap[q] = fx(p)
    incY = PointMap.from_labels(Y, Z, ymap)
    return Z, incX, incY


# -- gluing histories --------------------------------------------------------------------

STEP_KINDS = ("wedge", "two_point", "arc_glue")


@dataclass(frozen=True)
class GluingStep:
    kind: str
    args: dict
    boundary_flag: bool = False

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise GluingError(f"unknown step kind {self.kind!r}")
        if self.boundary_flag and self.kind != "two_point":
            raise GluingError("only two_point steps carry a boundary flag")

    def to_json(self) -> dict:
        args = {}
        for k, v in self.args.items():
            if isinstance(v, FiniteMetricSpace):
                args[k] = {"space": v.to_json()}
            elif k == "boundary":
                args[k] = [_label_to_json(x) for x in v]
            else:
                args[k] = _label_to_json(v)
        return {"kind": self.kind, "args": args, "boundary_flag": self.boundary_flag}

    @classmethod
    def from_json(cls, d: dict) -> "GluingStep":
        args = {}
        for k, v in d["args"].items():
            if isinstance(v, dict) and "space" in v:
                args[k] = FiniteMetricSpace.from_json(v["space"])
            elif k == "boundary":
                args[k] = tuple(_label_from_json(x) for x in v)
            else:
                args[k] = _label_from_json(v)
        return cls(d["kind"], args, bool(d.get("boundary_flag", False)))


@dataclass
class GluingHistory:
    """Ordered gluing steps applied to a base space with a tracked boundary set.

    ``two_point`` steps take ``a`` and ``b``; ``wedge``/``arc_glue`` steps take
    another space ``other``, the attaching points ``p`` (current space) and
    ``q`` (other space), and the boundary set ``boundary`` of the other piece.
    """

    steps: list[GluingStep] = field(default_factory=list)

    @property
    def k(self) -> int:
        return sum(1 for s in self.steps if s.kind == "two_point")

    @property
    def k0(self) -> int:
        return sum(1 for s in self.steps if s.kind == "two_point" and s.boundary_flag)

    def two_point(self, a, b, boundary_flag: bool = False) -> "GluingHistory":
        self.steps.append(GluingStep("two_point", {"a": a, "b": b}, boundary_flag))
        return self

    def wedge(self, p, other: FiniteMetricSpace, q, boundary=(), kind="wedge") -> "GluingHistory":
        self.steps.append(GluingStep(kind, {"p": p, "other": other, "q": q, "boundary": tuple(boundary)}))
        return self

    def replay(self, X: FiniteMetricSpace, boundary: Sequence = ()):
        """Apply every step; returns (space, tracked boundary labels, projection of X).

        Raises when a boundary flag is set although one of the two points is
        outside the image of the tracked boundary.
        """
        tracked = set(boundary)
        cur = X
        proj = {v: v for v in X.labels}
        for n, step in enumerate(self.steps):
            if step.kind == "two_point":
                a, b = step.args["a"], step.args["b"]
                if step.boundary_flag and not (a in tracked and b in tracked):
                    raise GluingError(f"step {n}: boundary flag set but a point is off the boundary image")
                cur, p = two_point_identification(cur, a, b)
                m = {v: p(v) for v in p.source.labels}
                tracked = {m[v] for v in tracked}
                proj = {v: m[w] for v, w in proj.items()}
            else:
                other = step.args["other"]
                Z, ix, iy = wedge_sum(cur, step.args["p"], other, step.args["q"])
                fx = {v: ix(v) for v in cur.labels}
                tracked = {fx[v] for v in tracked} | {iy(v) for v in step.args["boundary"]}
                proj = {v: fx[w] for v, w in proj.items()}
                cur = Z
        return cur, tracked, proj

    def to_json(self) -> dict:
        return {"format_version": 1, "steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, d: dict) -> "GluingHistory":
        return cls([GluingStep.from_json(s) for s in d["steps"]])


# -- mesh surgery --------------------------------------------------------------------------

@dataclass
class Glued:
    """Result of a mesh-level gluing.

    ``origin`` maps every vertex of ``surface`` to the vertex of the input
    surface(s) it stands in for; ``added_faces`` counts faces of the inserted
    tube, strip or cap (the region whose diameter drives the GH error).
    """

    surface: TriSurface
    origin: dict
    added_faces: int = 0
    twisted: bool = False

    @property
    def invariants(self) -> SurfaceInvariants:
        return invariants(self.surface)


def scale_radius(S: TriSurface, n: int, kappa: float | None = None) -> float:
    """Neck scale ``kappa / n``; by default ``kappa = min(1, 0.9 * shortest edge)``.

    Pipelines pass a fixed ``kappa`` so that later surgeries do not shrink
    with the short edges created by earlier ones.
    """
    if n < 1:
        raise GluingError("scale index n must be >= 1")
    if kappa is None:
        kappa = min(1.0, 0.9 * S.min_edge())
    return kappa / n


def _link(S: TriSurface, v) -> tuple[list, bool, list[int]]:
    """Neighbours of ``v`` in link order, whether the link closes, and v's faces."""
    fis = [fi for fi, f in enumerate(S.faces) if v in f]
    adj: dict = {}
    for fi in fis:
        x, y = [u for u in S.faces[fi] if u != v]
        adj.setdefault(x, []).append(y)
        adj.setdefault(y, []).append(x)
    ends = [x for x, ys in adj.items() if len(ys) == 1]
    order = {u: i for i, u in enumerate(S.vertices)}
    start = min(ends, key=order.__getitem__) if ends else min(adj, key=order.__getitem__)
    path = [start]
    prev = None
    while True:
        nxt = [y for y in adj[path[-1]] if y != prev and (y not in path or (y == path[0] and len(path) > 2))]
        if not nxt:
            break
        y = min(nxt, key=order.__getitem__)
        if y == path[0]:
            break
        prev = path[-1]
        path.append(y)
    return path, not ends, fis


def carve(S: TriSurface, v, rho: float, tag) -> tuple[TriSurface, list, dict]:
    """Remove the radius-``rho`` disc (half-disc on the boundary) around ``v``.

    Returns the new surface, the new boundary ring (cyclic for interior
    vertices, a path for boundary vertices) and the origin map of the new
    ring vertices (all pointing at ``v``).
    """
    ring_nb, closed, fis = _link(S, v)
    for x in ring_nb:
        if rho >= S.length(v, x):
            raise GluingError(f"carving radius {rho} reaches the neighbour {x!r} of {v!r}")
    P = {x: (tag, "r", x) for x in ring_nb}
    lengths = {e: w for e, w in S.lengths.items() if v not in e}
    faces = [f for fi, f in enumerate(S.faces) if fi not in set(fis)]
    for x in ring_nb:
        lengths[edge_key(P[x], x)] = S.length(v, x) - rho
    for fi in fis:
        f = S.faces[fi]
        i = f.index(v)
        _, x, y = f[i:] + f[:i]
        vx, vy, xy = S.length(v, x), S.length(v, y), S.length(x, y)
        cos = (vx * vx + vy * vy - xy * xy) / (2 * vx * vy)
        lengths[edge_key(P[x], P[y])] = rho * math.sqrt(max(2 - 2 * cos, 0.0))
        lengths[edge_key(P[x], y)] = _stewart(vy, xy, vx, rho / vx)
        faces += [(P[x], x, y), (P[x], y, P[y])]
    verts = [u for u in S.vertices if u != v] + [P[x] for x in ring_nb]
    out = TriSurface(verts, faces, lengths)
    return out, [P[x] for x in ring_nb], {P[x]: v for x in ring_nb}


def _pad(S: TriSurface, ring: list, k: int, closed: bool, tag, origin: dict):
    """Split the longest ring side until the ring has ``k`` vertices."""
    ring = list(ring)
    j = 0
    while len(ring) < k:
        sides = range(len(ring) if closed else len(ring) - 1)
        i = max(sides, key=lambda i: (S.length(ring[i], ring[(i + 1) % len(ring)]), -i))
        a, b = ring[i], ring[(i + 1) % len(ring)]
        m = (tag, "p", j)
        j += 1
        S = split_edge(S, a, b, 0.5, label=m, check=False)
        origin[m] = origin.get(a, a)
        ring.insert(i + 1, m)
    return S, ring


def _band_faces(A: list, M: list, B: list, closed: bool) -> list:
    n = len(A)
    faces = []
    cols = range(n if closed else n - 1)
    for top, bot in ((A, M), (M, B)):
        for i in cols:
            j = (i + 1) % n
            faces += [(top[i], top[j], bot[j]), (top[i], bot[j], bot[i])]
    return faces


def _attach(S: TriSurface, faces: list, new: list, L: float, origin: dict) -> TriSurface:
    """Add ``faces`` (using new vertices ``new``) with the tube length rule.

    Existing-existing edges must already be boundary edges of ``S``;
    new-old edges get length ``h = max(L/2, 0.6 * longest ring side)`` and
    new-new edges the mean ring side, which keeps every face strictly
    triangular.
    """
    newset = set(new)
    old_sides = []
    for f in faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            if a not in newset and b not in newset:
                e = edge_key(a, b)
                if e not in S.lengths:
                    raise GluingError(f"attaching edge {(a, b)} is not an edge of the surface")
                if len(S.edge_faces[e]) != 1:
                    raise GluingError(f"attaching edge {(a, b)} is not on the boundary")
                old_sides.append(S.lengths[e])
    smax = max(old_sides)
    h = max(L / 2, 0.6 * smax)
    m = float(np.mean(old_sides))
    lengths = dict(S.lengths)
    for f in faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            e = edge_key(a, b)
            if a in newset and b in newset:
                lengths[e] = m
            elif a in newset or b in newset:
                lengths[e] = h
    out = TriSurface(list(S.vertices) + list(new), list(S.faces) + faces, lengths)
    return out


def _choose_twist(builds: list[tuple[bool, TriSurface]], twisted: bool) -> tuple[TriSurface, bool]:
    """Pick the build whose orientability matches the request when possible."""
    orient = [(flag, T, invariants(T).orientable) for flag, T in builds]
    if twisted:
        for flag, T, o in orient:
            if not o:
                return T, flag
    else:
        for flag, T, o in orient:
            if o:
                return T, flag
    flag, T, _ = orient[0]
    return T, flag


def _check_apart(S: TriSurface, a, b) -> None:
    if a == b:
        raise GluingError("the two points must differ")
    if edge_key(a, b) in S.lengths:
        raise GluingError(f"neighbourhoods of {a!r} and {b!r} overlap (adjacent vertices)")
    if any(a in f and b in f for f in S.faces):
        raise GluingError(f"neighbourhoods of {a!r} and {b!r} overlap (shared face)")


def _radius(S: TriSurface, v, n: int, kappa: float | None = None) -> float:
    r = scale_radius(S, n, kappa)
    inc = min(S.length(v, x) for x in S.neighbors()[v])
    return min(r, 0.45 * inc)


def identification_to_handle(
    S: TriSurface,
    a,
    b,
    n: int,
    *,
    boundary: bool | None = None,
    twisted: bool = False,
    tag=None,
    kappa: float | None = None,
) -> Glued:
    """Replace the identification ``a ~ b`` by a thin tube (interior mode) or
    a thin strip along the boundary (boundary mode).

    Interior mode carves discs of radius about ``1/n`` around ``a`` and
    ``b`` and inserts a 3-row tube; boundary mode carves half-discs at two
    boundary vertices and inserts a 3-row strip.  ``twisted`` asks for the
    non-orientable matching (only meaningful when ``S`` is orientable).
    ``boundary=None`` picks boundary mode iff both vertices lie on the
    boundary.
    """
    tag = ("h", a, b) if tag is None else tag
    bverts = S.boundary_vertices()
    on_bd = a in bverts and b in bverts
    mode_b = on_bd if boundary is None else boundary
    if mode_b and not on_bd:
        raise GluingError("boundary mode needs two boundary vertices")
    if not mode_b and (a in bverts or b in bverts):
        raise GluingError("interior mode needs interior vertices (insert a face point first)")
    _check_apart(S, a, b)
    L = scale_radius(S, n, kappa)
    rho = min(_radius(S, a, n, kappa), _radius(S, b, n, kappa))
    T, ringA, origin = carve(S, a, rho, (tag, "A"))
    T, ringB, oB = carve(T, b, rho, (tag, "B"))
    origin.update(oB)
    out, faces = _tube(T, ringA, ringB, not mode_b, tag, L, origin, twisted)
    mid = _middle(tag, out)
    for i, m in enumerate(mid):
        origin[m] = a if i < len(mid) // 2 else b
    full = {v: origin.get(v, v) for v in out.vertices}
    flipped = orientation_propagates(S) and not orientation_propagates(out)
    return Glued(out, full, added_faces=faces, twisted=flipped)


def _middle(tag, S: TriSurface) -> list:
    return [v for v in S.vertices if isinstance(v, tuple) and len(v) == 3 and v[0] == tag and v[1] == "m"]


def _tube(T: TriSurface, ringA: list, ringB: list, closed: bool, tag, L: float, origin: dict, twisted: bool):
    """Pad both rings to a common size and join them by a 3-row band."""
    k = max(8 if closed else 4, len(ringA), len(ringB))
    T, ringA = _pad(T, ringA, k, closed, (tag, "A"), origin)
    T, ringB = _pad(T, ringB, k, closed, (tag, "B"), origin)
    M = [(tag, "m", i) for i in range(k)]
    builds = []
    for flag, B in ((False, ringB), (True, ringB[::-1])):
        faces = _band_faces(ringA, M, B, closed)
        try:
            builds.append((flag, _attach(T, faces, M, L, origin)))
        except SurfaceError:
            continue
    if not builds:
        raise GluingError("no consistent tube matching")
    out, _ = _choose_twist(builds, twisted)
    return out, len(_band_faces(ringA, M, ringB, closed))


def tube_wedge(S1: TriSurface, a, S2: TriSurface, b, n: int, *, tag=None, kappa: float | None = None) -> Glued:
    """Realize the wedge of ``S1`` at ``a`` and ``S2`` at ``b`` (interior
    vertices) as a connected sum through a tube of girth about ``1/n``.

    Vertex labels must be disjoint.  Tube vertices map to ``a`` or ``b``.
    """
    tag = ("w", a, b) if tag is None else tag
    if not set(S1.vertices).isdisjoint(S2.vertices):
        raise GluingError("surfaces must have disjoint vertex labels")
    for S, v in ((S1, a), (S2, b)):
        if v not in S.neighbors():
            raise GluingError(f"{v!r} is not a vertex")
        if v in S.boundary_vertices():
            raise GluingError("tube wedges need interior vertices")
    L = min(scale_radius(S1, n, kappa), scale_radius(S2, n, kappa))
    rho = min(_radius(S1, a, n, kappa), _radius(S2, b, n, kappa))
    T1, ringA, origin = carve(S1, a, rho, (tag, "A"))
    T2, ringB, oB = carve(S2, b, rho, (tag, "B"))
    origin.update(oB)
    U = TriSurface(
        list(T1.vertices) + list(T2.vertices), list(T1.faces) + list(T2.faces), {**T1.lengths, **T2.lengths},
        check=False,
    )
    out, faces = _tube(U, ringA, ringB, True, tag, L, origin, False)
    mid = _middle(tag, out)
    for i, m in enumerate(mid):
        origin[m] = a if i < len(mid) // 2 else b
    return Glued(out, {v: origin.get(v, v) for v in out.vertices}, added_faces=faces)


def crosscap(S: TriSurface, p, n: int, *, tag=None, kappa: float | None = None) -> Glued:
    """Replace a small disc around the interior vertex ``p`` by a Moebius band."""
    tag = ("x", p) if tag is None else tag
    if p in S.boundary_vertices():
        raise GluingError("cross-caps are inserted at interior vertices")
    rho = _radius(S, p, n, kappa)
    T, ring, origin = carve(S, p, rho, tag)
    k = max(8, len(ring) + len(ring) % 2)
    T, ring = _pad(T, ring, k, True, tag, origin)
    half = k // 2
    M = [(tag, "m", i) for i in range(half)]

    def v(r, j):
        if j == half:
            r, j = 2 - r, 0
        return {0: ring[j], 1: M[j], 2: ring[half + j]}[r]

    faces = []
    for r in range(2):
        for j in range(half):
            a, b, c, d = v(r, j), v(r, j + 1), v(r + 1, j + 1), v(r + 1, j)
            faces += [(a, b, c), (a, c, d)]
    out = _attach(T, faces, M, scale_radius(S, n, kappa), origin)
    for m in M:
        origin[m] = p
    return Glued(out, {u: origin.get(u, u) for u in out.vertices}, added_faces=len(faces), twisted=True)


def boundary_arc(S: TriSurface, p, r: float, *, tag=None) -> tuple[TriSurface, list]:
    """Split the two boundary edges at ``p`` at distance ``r``; returns the arc
    ``[q-, p, q+]`` of length ``2r`` with ``p`` as its midpoint.  Interior
    edges joining two arc vertices are split so the arc has no chords."""
    tag = ("arc", p) if tag is None else tag
    bnb = [x for x in S.neighbors()[p] if len(S.edge_faces[edge_key(p, x)]) == 1]
    if len(bnb) != 2:
        raise GluingError(f"{p!r} is not a boundary vertex")
    order = {u: i for i, u in enumerate(S.vertices)}
    x, y = sorted(bnb, key=order.__getitem__)
    if r <= 0:
        raise GluingError("arcs must have positive length")
    if r >= min(S.length(p, x), S.length(p, y)):
        raise GluingError("arc radius exceeds the boundary edges at the point")
    qx, qy = (tag, "-"), (tag, "+")
    S = split_edge(S, p, x, r / S.length(p, x), label=qx, check=False)
    S = split_edge(S, p, y, r / S.length(p, y), label=qy, check=False)
    arc = [qx, p, qy]
    if edge_key(qx, qy) in S.lengths:
        # p had a single face: the chord qx-qy must not survive the gluing
        S = split_edge(S, qx, qy, 0.5, label=(tag, "c"), check=False)
    S.validate()
    return S, arc


def _arc_positions(S: TriSurface, arc: list) -> list[float]:
    pos = [0.0]
    for u, w in zip(arc, arc[1:]):
        pos.append(pos[-1] + S.length(u, w))
    return pos


def glue_boundary_arcs(S1: TriSurface, arc1: list, S2: TriSurface, arc2: list, *, rel_tol: float = 1e-6) -> Glued:
    """Identify boundary arc ``arc1`` of ``S1`` with ``arc2`` of ``S2``
    by an arclength-preserving vertex matching (``arc1[i] ~ arc2[i]``).

    Vertex labels of the two surfaces must be disjoint; merged vertices keep
    the label from ``S1``.
    """
    if not set(S1.vertices).isdisjoint(S2.vertices):
        raise GluingError("surfaces must have disjoint vertex labels")
    for S, arc in ((S1, arc1), (S2, arc2)):
        if len(arc) < 2 or len(set(arc)) != len(arc):
            raise GluingError("an arc needs at least two distinct vertices")
        for u, w in zip(arc, arc[1:]):
            e = edge_key(u, w)
            if e not in S.edge_faces or len(S.edge_faces[e]) != 1:
                raise GluingError(f"arc step {(u, w)} is not a boundary edge")
    p1, p2 = _arc_positions(S1, arc1), _arc_positions(S2, arc2)
    if p1[-1] <= 0 or p2[-1] <= 0:
        raise GluingError("zero-length arc")
    if abs(p1[-1] - p2[-1]) > rel_tol * max(p1[-1], p2[-1]):
        raise GluingError(f"arc lengths differ: {p1[-1]} vs {p2[-1]}")
    # common subdivision by normalized arclength
    t1 = [p / p1[-1] for p in p1]
    t2 = [p / p2[-1] for p in p2]
    arc1, S1 = _refine_arc(S1, arc1, t1, t2, "L")
    arc2, S2 = _refine_arc(S2, arc2, t2, t1, "R")
    for S, arc in ((S1, arc1), (S2, arc2)):
        ix = {u: i for i, u in enumerate(arc)}
        for e, fs in S.edge_faces.items():
            u, w = tuple(e)
            if u in ix and w in ix and abs(ix[u] - ix[w]) != 1:
                raise GluingError(f"arc has a chord {(u, w)}; split it first")
    merge = dict(zip(arc2, arc1))
    ren = lambda v: merge.get(v, v)  # noqa: E731
    faces = list(S1.faces) + [tuple(ren(v) for v in f) for f in S2.faces]
    lengths = dict(S1.lengths)
    arcset = {edge_key(u, w) for u, w in zip(arc1, arc1[1:])}
    for e, w in S2.lengths.items():
        e2 = edge_key(*(ren(v) for v in e))
        if e2 in lengths and e2 not in arcset:
            raise GluingError(f"gluing would merge the non-arc edge {tuple(e2)}")
        if e2 in arcset:
            w = (lengths[e2] + w) / 2
        lengths[e2] = w
    verts = list(S1.vertices) + [v for v in S2.vertices if v not in merge]
    out = TriSurface(verts, faces, lengths)
    origin = {v: v for v in out.vertices}
    return Glued(out, origin)


def _refine_arc(S: TriSurface, arc: list, mine: list[float], other: list[float], side):
    arc = list(arc)
    pos = list(mine)
    extra = [t for t in other if all(abs(t - s) > 1e-12 for s in pos)]
    for j, t in enumerate(sorted(extra)):
        i = max(k for k in range(len(pos)) if pos[k] < t)
        a, b = arc[i], arc[i + 1]
        frac = (t - pos[i]) / (pos[i + 1] - pos[i])
        m = ("arcpt", side, a, b, j)
        S = split_edge(S, a, b, frac, label=m, check=False)
        arc.insert(i + 1, m)
        pos.insert(i + 1, t)
    return arc, S


# -- standard model surfaces ---------------------------------------------------------------

def _spread_points(S: TriSurface, count: int) -> list:
    """``count`` interior vertices, farthest-point spread and pairwise non-adjacent."""
    X = geodesic_metric(S)
    bverts = S.boundary_vertices()
    cand = [i for i, v in enumerate(X.labels) if v not in bverts]
    sub = X.subspace(cand)
    if count > len(cand):
        raise GluingError("mesh too coarse for the requested features")
    idx, _ = net_sample(sub, len(cand))
    chosen = []
    taken = set()
    nb = S.neighbors()
    fa = S.faces_at()
    for i in idx:
        v = sub.labels[i]
        if v in taken:
            continue
        chosen.append(v)
        if len(chosen) == count:
            return chosen
        # block the closed 2-ring so carved neighbourhoods stay apart
        ring1 = {v} | nb[v]
        for u in list(ring1):
            taken |= nb[u] | {u}
        for u in ring1:
            for fi in fa[u]:
                taken |= set(S.faces[fi])
    raise GluingError("mesh too coarse for the requested features")


def standard_surface(inv: SurfaceInvariants, *, diameter: float = 1.0, tag="s") -> TriSurface:
    """A triangulated surface with the given invariants.

    Starts from an icosphere of roughly the requested diameter and adds
    handles (orientable), cross-caps (non-orientable) and holes.
    """
    g = inv.genus
    handles = g if inv.orientable else 0
    caps = 0 if inv.orientable else g
    holes = inv.boundary_count
    feats = 2 * handles + caps + holes
    level = 1
    while 42 * 4 ** (level - 1) < 12 * (feats + 1) and level < 4:
        level += 1
    S = icosphere(level, radius=diameter / 2, label_prefix=tag)
    if feats == 0:
        return S
    pts = _spread_points(S, feats)
    n = 4
    i = 0
    for h in range(handles):
        S = identification_to_handle(S, pts[i], pts[i + 1], n, tag=(tag, "H", h)).surface
        i += 2
    for c in range(caps):
        S = crosscap(S, pts[i], n, tag=(tag, "X", c)).surface
        i += 1
    for b in range(holes):
        rho = _radius(S, pts[i], n)
        S = carve(S, pts[i], rho, (tag, "B", b))[0]
        i += 1
    got = invariants(S)
    if got != inv:
        raise AssertionError(f"standard surface built {got}, wanted {inv}")
    return S
