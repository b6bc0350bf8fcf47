"""Combinatorial generalized cactoids.

A :class:`CactoidGraph` is a finite wedge of surface pieces and metric trees.
Boundary continua are encoded by tokens: boundary circles ``(piece, index)``
and tree edges ``(tree, u, v)``; two tokens touch when they share a wedge
point (a class of glued attachment points).
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .metric_core import _label_from_json, _label_to_json
from .surfaces import SurfaceInvariants, TriSurface, dump_surface, load_surface

__all__ = [
    "CactoidError",
    "Piece",
    "MetricTree",
    "Continuum",
    "VanishingFamily",
    "CactoidGraph",
    "ValidationReport",
    "Pi1Signature",
    "MainTheoremCertificate",
    "BlockDecomposition",
    "validate",
    "connectivity_number",
    "minimal_preboundary",
    "boundary_points",
    "history_flags_valid",
    "boundary_flags",
    "block_decomposition",
    "is_one_cactoid",
    "continuum_graph",
    "pi1_signature",
    "certify",
]


class CactoidError(ValueError):
    """Invalid cactoid input or a cactoid without a pre-boundary."""


@dataclass(frozen=True)
class Piece:
    """A maximal cyclic subset: a compact surface with named points.

    ``points`` maps a point name to the index of the boundary circle it lies
    on, or ``None`` for interior points.  ``anchors`` optionally pins points to
    vertices of ``surface``.
    """

    name: str
    invariants: SurfaceInvariants
    points: dict = field(default_factory=dict)
    surface: TriSurface | None = None
    anchors: dict = field(default_factory=dict)
    diameter: float = 1.0

    def __hash__(self):
        return hash(self.name)


@dataclass(frozen=True)
class MetricTree:
    name: str
    edges: tuple  # (u, v, length)

    def nodes(self) -> list:
        out = []
        for u, v, _ in self.edges:
            for x in (u, v):
                if x not in out:
                    out.append(x)
        return out


@dataclass(frozen=True)
class Continuum:
    name: str
    circles: tuple = ()  # (piece, index)
    tree_edges: tuple = ()  # (tree, u, v)


@dataclass(frozen=True)
class VanishingFamily:
    """Countably many discs or spheres with diameters tending to zero, each
    wedged once to ``host``.  Disc members either touch the host boundary
    circle ``host_circle`` with their own boundary (``on_member_boundary``)
    or hang at distinct points."""

    host: str
    kind: str = "disc"
    host_circle: int | None = None
    on_member_boundary: bool = False


@dataclass
class CactoidGraph:
    name: str = "X"
    pieces: list[Piece] = field(default_factory=list)
    trees: list[MetricTree] = field(default_factory=list)
    incidences: list[tuple] = field(default_factory=list)  # ((comp, point), (comp, point))
    grouping: list[Continuum] | None = None
    families: list[VanishingFamily] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)  # {"a": (comp, pt), "b": ..., "boundary_flag": bool}
    # pipeline bookkeeping (stand-in points, vertex targets); never serialized
    notes: dict = field(default_factory=dict, compare=False, repr=False)

    # -- lookup --------------------------------------------------------------
    def piece(self, name: str) -> Piece:
        for p in self.pieces:
            if p.name == name:
                return p
        raise KeyError(name)

    def component_names(self) -> list[str]:
        return [p.name for p in self.pieces] + [t.name for t in self.trees]

    def all_points(self) -> list[tuple]:
        out = []
        for p in self.pieces:
            out += [(p.name, x) for x in p.points]
        for t in self.trees:
            out += [(t.name, x) for x in t.nodes()]
        return out

    def circles(self) -> list[tuple]:
        return [(p.name, i) for p in self.pieces for i in range(p.invariants.boundary_count)]

    def point_classes(self) -> dict:
        """Union-find over incidences: point -> representative point."""
        parent = {pt: pt for pt in self.all_points()}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.incidences:
            if a not in parent or b not in parent:
                continue
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb, key=repr)] = min(ra, rb, key=repr)
        return {pt: find(pt) for pt in parent}

    def circle_of_point(self, pt) -> tuple | None:
        comp, x = pt
        for p in self.pieces:
            if p.name == comp:
                i = p.points.get(x)
                return None if i is None else (comp, i)
        return None

    def with_history(self, steps: Iterable[tuple]) -> "CactoidGraph":
        out = CactoidGraph(self.name, list(self.pieces), list(self.trees), list(self.incidences),
                           self.grouping, list(self.families), list(self.history), dict(self.notes))
        for a, b, flag in steps:
            out.history.append({"a": a, "b": b, "boundary_flag": bool(flag)})
        return out

    @property
    def k(self) -> int:
        return len(self.history)

    @property
    def k0(self) -> int:
        return sum(1 for s in self.history if s["boundary_flag"])

    # -- serialization ------------------------------------------------------------
    def to_json(self) -> dict:
        def pt(p):
            return [p[0], _label_to_json(p[1])]

        d = {
            "format_version": 1,
            "name": self.name,
            "pieces": [],
            "trees": [
                {"name": t.name, "edges": [[_label_to_json(u), _label_to_json(v), w] for u, v, w in t.edges]}
                for t in self.trees
            ],
            "incidences": [[pt(a), pt(b)] for a, b in self.incidences],
            "families": [
                {"host": f.host, "kind": f.kind, "host_circle": f.host_circle,
                 "on_member_boundary": f.on_member_boundary}
                for f in self.families
            ],
            "history": [
                {"a": pt(s["a"]), "b": pt(s["b"]), "boundary_flag": s["boundary_flag"]} for s in self.history
            ],
        }
        for p in self.pieces:
            e = {
                "name": p.name,
                **p.invariants.to_json(),
                "points": [[_label_to_json(x), c] for x, c in p.points.items()],
                "diameter": p.diameter,
            }
            if p.surface is not None:
                e["surface"] = dump_surface(p.surface)
                e["anchors"] = [[_label_to_json(x), _label_to_json(v)] for x, v in p.anchors.items()]
            d["pieces"].append(e)
        if self.grouping is not None:
            d["grouping"] = [
                {
                    "name": c.name,
                    "circles": [list(x) for x in c.circles],
                    "tree_edges": [[t, _label_to_json(u), _label_to_json(v)] for t, u, v in c.tree_edges],
                }
                for c in self.grouping
            ]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CactoidGraph":
        if d.get("format_version", 1) != 1:
            raise CactoidError(f"unsupported format_version {d.get('format_version')}")

        def pt(p):
            return (p[0], _label_from_json(p[1]))

        pieces = []
        for e in d.get("pieces", []):
            inv = SurfaceInvariants.of(e["orientable"], e["connectivity"], e.get("boundary_count", 0))
            surf = load_surface(e["surface"], f"piece {e['name']}") if e.get("surface") else None
            anchors = {_label_from_json(x): _label_from_json(v) for x, v in e.get("anchors", [])}
            points = {_label_from_json(x): c for x, c in e.get("points", [])}
            pieces.append(Piece(e["name"], inv, points, surf, anchors, float(e.get("diameter", 1.0))))
        trees = [
            MetricTree(t["name"], tuple((_label_from_json(u), _label_from_json(v), float(w)) for u, v, w in t["edges"]))
            for t in d.get("trees", [])
        ]
        grouping = None
        if "grouping" in d and d["grouping"] is not None:
            grouping = [
                Continuum(
                    c["name"],
                    tuple((x[0], int(x[1])) for x in c.get("circles", [])),
                    tuple((t, _label_from_json(u), _label_from_json(v)) for t, u, v in c.get("tree_edges", [])),
                )
                for c in d["grouping"]
            ]
        fams = [VanishingFamily(**f) for f in d.get("families", [])]
        hist = [{"a": pt(s["a"]), "b": pt(s["b"]), "boundary_flag": bool(s.get("boundary_flag", False))}
                for s in d.get("history", [])]
        inc = [(pt(a), pt(b)) for a, b in d.get("incidences", [])]
        return cls(d.get("name", "X"), pieces, trees, inc, grouping, fams, hist)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# -- validation ------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self) -> None:
        if self.violations:
            raise CactoidError("; ".join(self.violations))


def _structure_violations(G: CactoidGraph) -> list[str]:
    out = []
    names = G.component_names()
    if len(set(names)) != len(names):
        out.append("component names are not unique")
    if not names:
        out.append("cactoid has no components")
        return out
    for p in G.pieces:
        for x, c in p.points.items():
            if c is not None and not 0 <= c < p.invariants.boundary_count:
                out.append(f"point {x!r} of piece {p.name} lies on missing circle {c}")
        if p.surface is not None:
            from .surfaces import invariants as _inv

            if _inv(p.surface) != p.invariants:
                out.append(f"piece {p.name}: surface invariants differ from the declared class")
            for x in p.points:
                if x not in p.anchors:
                    out.append(f"piece {p.name}: point {x!r} has no anchor vertex")
    for t in G.trees:
        nodes = t.nodes()
        if any(w <= 0 for _, _, w in t.edges):
            out.append(f"tree {t.name} has a non-positive edge length")
        if len(t.edges) != len(nodes) - 1 or not t.edges:
            out.append(f"tree {t.name} is not a tree")
        else:
            adj = defaultdict(set)
            for u, v, _ in t.edges:
                adj[u].add(v)
                adj[v].add(u)
            seen, todo = {nodes[0]}, [nodes[0]]
            while todo:
                x = todo.pop()
                for y in adj[x] - seen:
                    seen.add(y)
                    todo.append(y)
            if len(seen) != len(nodes):
                out.append(f"tree {t.name} is disconnected")
    pts = set(G.all_points())
    for a, b in G.incidences:
        for x in (a, b):
            if x not in pts:
                out.append(f"incidence refers to unknown point {x!r}")
        if a[0] == b[0]:
            out.append(f"incidence {a!r} ~ {b!r} glues a component to itself")
    if any(o.startswith("incidence refers") for o in out):
        return out
    cls = G.point_classes()
    members = defaultdict(list)
    for pt, r in cls.items():
        members[r].append(pt)
    for r, ms in members.items():
        comps = [m[0] for m in ms]
        if len(set(comps)) != len(comps):
            out.append(f"wedge point {r!r} meets a component twice")
    # bipartite incidence graph (components - wedge points) must be a tree
    nodes = {("c", n) for n in names} | {("w", r) for r, ms in members.items() if len(ms) > 1}
    edges = {(("c", m[0]), ("w", r)) for r, ms in members.items() if len(ms) > 1 for m in ms}
    if len(edges) != len(nodes) - 1:
        out.append("components are not glued in a tree pattern (a cycle of wedges or a disconnected part)")
    else:
        adj = defaultdict(set)
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        start = next(iter(sorted(nodes, key=repr)))
        seen, todo = {start}, [start]
        while todo:
            x = todo.pop()
            for y in adj[x] - seen:
                seen.add(y)
                todo.append(y)
        if len(seen) != len(nodes):
            out.append("cactoid is disconnected")
    for f in G.families:
        if f.host not in [p.name for p in G.pieces]:
            out.append(f"family attached to unknown piece {f.host}")
        if f.kind not in ("disc", "sphere"):
            out.append(f"family kind {f.kind!r} must be disc or sphere")
    return out


def _tokens(G: CactoidGraph):
    """Carriers (circles, tree edges) and the wedge points each one touches."""
    cls = G.point_classes()
    touch = {}
    for c in G.circles():
        touch[("circle", c)] = {cls[(c[0], x)] for x, i in G.piece(c[0]).points.items() if i == c[1]}
    for t in G.trees:
        for u, v, _ in t.edges:
            touch[("edge", (t.name, u, v))] = {cls[(t.name, u)], cls[(t.name, v)]}
    return touch, cls


def _continuum_points(G: CactoidGraph, tokens: Iterable, touch: dict, cls: dict) -> set:
    pts = set()
    for tk in tokens:
        pts |= touch[tk]
    return pts


def _admissible(G: CactoidGraph, tokens: frozenset, touch: dict, cls: dict) -> bool:
    """C meets every piece in one boundary circle or in at most one point."""
    wpts = _continuum_points(G, tokens, touch, cls)
    members = defaultdict(set)
    for pt, r in cls.items():
        if r in wpts:
            members[pt[0]].add(pt)
    for p in G.pieces:
        circles = [tk for tk in tokens if tk[0] == "circle" and tk[1][0] == p.name]
        hit = members.get(p.name, set())
        if len(circles) > 1:
            return False
        if circles:
            idx = circles[0][1][1]
            if any(p.points[x] != idx for _, x in hit):
                return False
        elif len(hit) > 1:
            return False
    return True


def _connected(tokens: Iterable, touch: dict) -> bool:
    tokens = list(tokens)
    if not tokens:
        return False
    seen = {tokens[0]}
    todo = [tokens[0]]
    while todo:
        t = todo.pop()
        for u in tokens:
            if u not in seen and touch[t] & touch[u]:
                seen.add(u)
                todo.append(u)
    return len(seen) == len(tokens)


def _grouping_tokens(c: Continuum) -> frozenset:
    return frozenset([("circle", tuple(x)) for x in c.circles] + [("edge", tuple(e)) for e in c.tree_edges])


def _family_violation(G: CactoidGraph) -> str | None:
    for f in G.families:
        if f.kind == "disc" and not (f.host_circle is not None and f.on_member_boundary):
            return (
                f"no pre-boundary: infinitely many discs hang off {f.host} without meeting "
                "a boundary circle of the host, so their circles need infinitely many continua"
            )
    return None


def validate(G: CactoidGraph) -> ValidationReport:
    out = _structure_violations(G)
    if out:
        return ValidationReport(out)
    fam = _family_violation(G)
    if fam:
        out.append(fam)
    touch, cls = _tokens(G)
    grouping = G.grouping or []
    used_tokens: dict = {}
    used_points: dict = {}
    for c in grouping:
        toks = _grouping_tokens(c)
        unknown = [t for t in toks if t not in touch]
        if unknown:
            out.append(f"continuum {c.name} names unknown parts {unknown}")
            continue
        if not any(t[0] == "circle" for t in toks):
            out.append(f"continuum {c.name} contains no boundary circle")
        if not _connected(toks, touch):
            out.append(f"continuum {c.name} is not connected")
        if not _admissible(G, toks, touch, cls):
            out.append(f"continuum {c.name} is not admissible (meets a piece in more than a point or one circle)")
        for t in toks:
            if t in used_tokens:
                out.append(f"continua {used_tokens[t]} and {c.name} share {t[1]}")
            used_tokens[t] = c.name
        for w in _continuum_points(G, toks, touch, cls):
            if w in used_points and used_points[w] != c.name:
                out.append(f"continua {used_points[w]} and {c.name} meet at {w!r}")
            used_points[w] = c.name
    for circ in G.circles():
        if ("circle", circ) not in used_tokens:
            out.append(f"boundary circle {circ} of piece {circ[0]} is not covered")
    return ValidationReport(out)


# -- boundary -----------------------------------------------------------------------

def minimal_preboundary(G: CactoidGraph) -> list[Continuum]:
    """Canonical boundary: minimal number of continua, maximal union.

    Start from the circles (one continuum per circle is a pre-boundary) and
    repeatedly adjoin every carrier that meets the current family; carriers
    meeting two continua merge them.  For a tree-shaped wedge every connected
    carrier set is admissible, so the fixpoint is the union of the carrier
    components that contain a circle.
    """
    bad = _structure_violations(G)
    if bad:
        raise CactoidError("; ".join(bad))
    fam = _family_violation(G)
    if fam:
        raise CactoidError(fam)
    touch, cls = _tokens(G)
    carriers = list(touch)
    groups = [{("circle", c)} for c in G.circles()]
    changed = True
    while changed:
        changed = False
        for tk in carriers:
            hits = [g for g in groups if any(touch[tk] & touch[u] for u in g) or tk in g]
            if not hits:
                continue
            if len(hits) == 1 and tk in hits[0]:
                continue
            merged = set().union(*hits) | {tk}
            groups = [g for g in groups if not any(g is h for h in hits)] + [merged]
            changed = True
    out = []
    for g in groups:
        toks = frozenset(g)
        if not _admissible(G, toks, touch, cls):
            raise CactoidError("no admissible pre-boundary (a carrier component meets a piece twice)")
        circles = tuple(sorted((t[1] for t in toks if t[0] == "circle"), key=repr))
        edges = tuple(sorted((t[1] for t in toks if t[0] == "edge"), key=repr))
        out.append((circles, edges))
    out.sort(key=repr)
    return [Continuum(f"C{i}", c, e) for i, (c, e) in enumerate(out)]


def boundary_points(G: CactoidGraph, grouping: list[Continuum] | None = None) -> set:
    """Wedge-point classes (representatives) lying on the boundary."""
    grouping = minimal_preboundary(G) if grouping is None else grouping
    touch, cls = _tokens(G)
    out = set()
    for c in grouping:
        out |= _continuum_points(G, _grouping_tokens(c), touch, cls)
    return out


def on_boundary(G: CactoidGraph, pt, grouping=None) -> bool:
    grouping = minimal_preboundary(G) if grouping is None else grouping
    circ = G.circle_of_point(pt)
    if circ is not None and any(circ in c.circles for c in grouping):
        return True
    cls = G.point_classes()
    return cls[pt] in boundary_points(G, grouping)


def _walk_identifications(G: CactoidGraph, pairs: list[tuple]):
    """Yield, per identification, None for a bad step or whether both points
    lie on the tracked boundary image (earlier merges included)."""
    grouping = minimal_preboundary(G)
    cls = G.point_classes()
    parent = dict(cls)
    for r in set(cls.values()):
        parent[r] = r

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    tracked = {find(p) for p in cls if on_boundary(G, p, grouping)}
    for a, b in pairs:
        if a not in cls or b not in cls:
            yield "unknown"
            continue
        ra, rb = find(a), find(b)
        if ra == rb:
            yield "same"
            continue
        yield ra in tracked and rb in tracked
        parent[rb] = ra
        if rb in tracked:
            tracked.add(ra)


def history_flags_valid(G: CactoidGraph) -> list[str]:
    """Check that ``boundary_flag`` marks exactly the steps identifying two
    points of the tracked boundary image."""
    pairs = [(s["a"], s["b"]) for s in G.history]
    out = []
    for n, (s, both) in enumerate(zip(G.history, _walk_identifications(G, pairs))):
        if both == "unknown":
            out.append(f"history step {n} refers to an unknown point")
        elif both == "same":
            out.append(f"history step {n} identifies a point with itself")
        elif s["boundary_flag"] and not both:
            out.append(f"history step {n}: boundary flag set but a point is off the boundary image")
        elif both and not s["boundary_flag"]:
            out.append(f"history step {n}: both points lie on the boundary image but the flag is unset")
    return out


def boundary_flags(G: CactoidGraph, pairs: Iterable[tuple]) -> list[bool]:
    """The boundary flag each identification in ``pairs`` must carry."""
    out = []
    for both in _walk_identifications(G, list(pairs)):
        if not isinstance(both, bool):
            raise CactoidError(f"invalid identification ({both} point)")
        out.append(both)
    return out


def connectivity_number(G: CactoidGraph) -> int:
    """Sum of reduced connectivities of the pieces plus the number of boundary components."""
    bd = minimal_preboundary(G)
    return sum(p.invariants.reduced_connectivity for p in G.pieces) + len(bd)


# -- blocks ----------------------------------------------------------------------------

@dataclass
class BlockDecomposition:
    blocks: list[frozenset]  # vertex sets, bridges included
    block_edges: list[frozenset]
    cut_vertices: set

    @property
    def cyclic_blocks(self) -> list[frozenset]:
        return [b for b, e in zip(self.blocks, self.block_edges) if len(e) > 1]


def _normalize_graph(graph, nodes=None):
    if isinstance(graph, dict):
        edges = {frozenset((u, v)) for u, vs in graph.items() for v in vs}
        nodes = list(graph) if nodes is None else list(nodes)
    else:
        edges = set()
        for e in graph:
            u, v = e[0], e[1]
            if u == v:
                raise CactoidError(f"self-loop at {u!r}")
            edges.add(frozenset((u, v)))
        if nodes is None:
            nodes = []
            for e in graph:
                for x in e[:2]:
                    if x not in nodes:
                        nodes.append(x)
    adj = {v: [] for v in nodes}
    for e in edges:
        u, v = tuple(e)
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for v in adj:
        adj[v].sort(key=repr)
    return adj


def block_decomposition(graph, nodes=None) -> BlockDecomposition:
    """Biconnected components and cut vertices (iterative Hopcroft-Tarjan).

    ``graph`` is an edge iterable ``(u, v[, w])`` or an adjacency dict.
    """
    adj = _normalize_graph(graph, nodes)
    verts = list(adj)
    if not verts:
        raise CactoidError("empty graph")
    order = {}
    low = {}
    blocks, bedges = [], []
    cuts = set()
    root = min(verts, key=repr)
    order[root] = low[root] = 0
    counter = 1
    stack = [(root, None, iter(adj[root]))]
    estack = []
    root_children = 0
    while stack:
        v, parent, it = stack[-1]
        advanced = False
        for w in it:
            if w == parent:
                continue
            if w not in order:
                order[w] = low[w] = counter
                counter += 1
                estack.append((v, w))
                stack.append((w, v, iter(adj[w])))
                if v == root:
                    root_children += 1
                advanced = True
                break
            if order[w] < order[v]:
                estack.append((v, w))
                low[v] = min(low[v], order[w])
        if advanced:
            continue
        stack.pop()
        if parent is not None:
            low[parent] = min(low[parent], low[v])
            if low[v] >= order[parent]:
                if parent != root:
                    cuts.add(parent)
                es = set()
                while True:
                    e = estack.pop()
                    es.add(frozenset(e))
                    if e == (parent, v):
                        break
                vs = frozenset(x for e in es for x in e)
                blocks.append(vs)
                bedges.append(frozenset(es))
    if len(order) != len(verts):
        raise CactoidError("graph is disconnected")
    if root_children > 1:
        cuts.add(root)
    if not blocks:
        blocks.append(frozenset([root]))
        bedges.append(frozenset())
    return BlockDecomposition(blocks, bedges, cuts)


def is_one_cactoid(graph, nodes=None) -> bool:
    """True iff every non-degenerate block is a simple cycle."""
    bd = block_decomposition(graph, nodes)
    return all(len(e) == len(b) for b, e in zip(bd.blocks, bd.block_edges) if len(e) > 1)


def continuum_graph(G: CactoidGraph, c: Continuum) -> list[tuple]:
    """Graph realization of a boundary continuum: circles become polygons on
    their attachment points (padded to at least three vertices)."""
    cls = G.point_classes()
    edges = []
    for pname, idx in c.circles:
        p = G.piece(pname)
        ring = [cls[(pname, x)] for x, i in sorted(p.points.items(), key=lambda t: repr(t[0])) if i == idx]
        j = 0
        while len(ring) < 3:
            ring.append(("pad", pname, idx, j))
            j += 1
        edges += [(ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring))]
    for t, u, v in c.tree_edges:
        edges.append((cls[(t, u)], cls[(t, v)]))
    return edges


# -- fundamental group and certificates -------------------------------------------------

@dataclass(frozen=True)
class Pi1Signature:
    surface_factors: tuple  # sorted SurfaceInvariants
    free_rank: int

    def describe(self) -> str:
        parts = [f"pi1({s.name()})" for s in self.surface_factors]
        if self.free_rank:
            parts.append(f"F_{self.free_rank}")
        return " * ".join(parts) if parts else "trivial"

    def to_json(self) -> dict:
        return {"surface_factors": [s.to_json() for s in self.surface_factors], "free_rank": self.free_rank}


def pi1_signature(G: CactoidGraph, history=None) -> Pi1Signature:
    """Free product of the non-simply-connected pieces and one Z per identification."""
    bad = _structure_violations(G)
    if bad:
        raise CactoidError("; ".join(bad))
    factors = [p.invariants for p in G.pieces if not p.invariants.is_sphere_or_disc()]
    factors.sort(key=lambda s: (not s.orientable, s.connectivity, s.boundary_count))
    k = G.k if history is None else history.k
    return Pi1Signature(tuple(factors), k)


@dataclass(frozen=True)
class MainTheoremCertificate:
    c_target: int
    c0: int
    k: int
    k0: int

    @property
    def bound(self) -> int:
        return self.c_target + self.k0 - 2 * self.k

    @property
    def verdict(self) -> bool:
        return self.c0 <= self.bound

    def to_json(self) -> dict:
        return {"c_target": self.c_target, "c0": self.c0, "k": self.k, "k0": self.k0,
                "bound": self.bound, "verdict": self.verdict}


def certify(c_target: int, G: CactoidGraph, history=None) -> MainTheoremCertificate:
    c0 = connectivity_number(G)
    if history is None:
        k, k0 = G.k, G.k0
    else:
        k, k0 = history.k, history.k0
    return MainTheoremCertificate(c_target, c0, k, k0)
