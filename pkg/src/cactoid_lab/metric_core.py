"""Finite metric spaces, correspondences and Gromov-Hausdorff distances.

Distances are kept as exact :class:`fractions.Fraction` values whenever every
input entry is rational (ints, Fractions or decimal strings).  As soon as a
single float enters, the whole matrix is stored as ``float64`` and comparisons
use the absolute tolerance :data:`FLOAT_TOL`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from numbers import Rational
from typing import Hashable, Iterable, Sequence

import numpy as np

__all__ = [
    "FLOAT_TOL",
    "DEFAULT_GH_CAP",
    "MetricError",
    "CapExceeded",
    "FiniteMetricSpace",
    "PseudometricSpace",
    "Correspondence",
    "PointMap",
    "check_metric",
    "distortion",
    "is_eps_isometry",
    "gh_upper",
    "gh_exact",
    "gh_lower",
    "hausdorff_in",
    "net_sample",
    "label_order",
]

FLOAT_TOL = 1e-9
DEFAULT_GH_CAP = 8


class MetricError(ValueError):
    """Raised when a distance matrix violates a metric axiom."""


class CapExceeded(ValueError):
    """Raised by :func:`gh_exact` when an input is larger than the size cap."""


def _coerce(value):
    if isinstance(value, bool):
        raise TypeError("booleans are not distances")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.integer):
        return Fraction(int(value))
    raise TypeError(f"unsupported distance value {value!r}")


def _as_matrix(dist) -> np.ndarray:
    if isinstance(dist, np.ndarray) and dist.dtype.kind == "f":
        return np.array(dist, dtype=float)
    rows = [list(r) for r in dist]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise MetricError("distance matrix is not square")
    vals = [[_coerce(v) for v in r] for r in rows]
    if any(isinstance(v, float) for r in vals for v in r):
        return np.array([[float(v) for v in r] for r in vals], dtype=float).reshape(n, n)
    out = np.empty((n, n), dtype=object)
    for i, r in enumerate(vals):
        for j, v in enumerate(r):
            out[i, j] = v
    return out


def _is_exact(m: np.ndarray) -> bool:
    return m.dtype == object


def _tol(m: np.ndarray):
    return 0 if _is_exact(m) else FLOAT_TOL


def label_order(labels: Sequence[Hashable]) -> list[int]:
    """Indices of ``labels`` in lexicographic label order (repr fallback)."""
    idx = range(len(labels))
    try:
        return sorted(idx, key=lambda i: labels[i])
    except TypeError:
        return sorted(idx, key=lambda i: repr(labels[i]))


def _triangle_violation(d: np.ndarray):
    tol = _tol(d)
    n = d.shape[0]
    for k in range(n):
        via = d[:, k : k + 1] + d[k : k + 1, :]
        bad = np.argwhere(d > via + tol)
        if len(bad):
            i, j = bad[0]
            return int(i), int(j), k
    return None


class FiniteMetricSpace:
    """Labeled finite metric space with a validated symmetric distance matrix.

    ``trusted=True`` skips the O(n^3) triangle check; it is reserved for
    matrices produced by an all-pairs shortest-path computation, which satisfy
    the triangle inequality by construction.
    """

    allow_zero = False

    def __init__(self, labels: Iterable[Hashable], dist, *, trusted: bool = False):
        self.labels = tuple(labels)
        d = _as_matrix(dist)
        if d.shape != (len(self.labels), len(self.labels)):
            raise MetricError(
                f"{len(self.labels)} labels but distance matrix of shape {d.shape}"
            )
        if len(set(self.labels)) != len(self.labels):
            raise MetricError("labels are not unique")
        d.setflags(write=False)
        self.dist = d
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self._validate(trusted)

    def _validate(self, trusted: bool) -> None:
        d, tol = self.dist, _tol(self.dist)
        n = len(self)
        for i in range(n):
            if d[i, i] != 0:
                raise MetricError(f"dist[{i}][{i}] = {d[i, i]} is not zero")
        if n == 0:
            return
        asym = np.argwhere(abs(d - d.T) > tol)
        if len(asym):
            i, j = asym[0]
            raise MetricError(f"dist[{i}][{j}] != dist[{j}][{i}]")
        neg = np.argwhere(d < 0)
        if len(neg):
            i, j = neg[0]
            raise MetricError(f"dist[{i}][{j}] is negative")
        if not self.allow_zero:
            off = d + np.eye(n, dtype=int)
            zero = np.argwhere(off <= tol)
            if len(zero):
                i, j = zero[0]
                raise MetricError(
                    f"distinct points {self.labels[i]!r} and {self.labels[j]!r} at distance 0"
                )
        if not trusted:
            bad = _triangle_violation(d)
            if bad is not None:
                i, j, k = bad
                raise MetricError(
                    f"triangle inequality fails: d[{i}][{j}] > d[{i}][{k}] + d[{k}][{j}]"
                )

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        return f"{type(self).__name__}(n={len(self)}, {kind})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return (
            type(self) is type(other)
            and self.labels == other.labels
            and self.dist.dtype == other.dist.dtype
            and bool(np.all(self.dist == other.dist))
        )

    __hash__ = None

    @property
    def exact(self) -> bool:
        return _is_exact(self.dist)

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown point {label!r}") from None

    def d(self, a: Hashable, b: Hashable):
        return self.dist[self.index(a), self.index(b)]

    def diameter(self):
        if len(self) == 0:
            return 0
        return self.dist.max()

    def eccentricities(self) -> np.ndarray:
        return self.dist.max(axis=1)

    def subspace(self, indices: Sequence[int]) -> "FiniteMetricSpace":
        idx = list(indices)
        return type(self)(
            [self.labels[i] for i in idx], self.dist[np.ix_(idx, idx)], trusted=True
        )

    def as_float(self) -> np.ndarray:
        return np.asarray(self.dist, dtype=float)

    @classmethod
    def point(cls, label: Hashable = 0) -> "FiniteMetricSpace":
        return cls([label], [[0]])

    @classmethod
    def two_point(cls, D, labels=(0, 1)) -> "FiniteMetricSpace":
        return cls(labels, [[0, D], [D, 0]])

    # -- JSON ----------------------------------------------------------------
    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, Fraction):
                if v.denominator == 1:
                    return str(v.numerator)
                dec = _fraction_to_decimal(v)
                return dec if dec is not None else f"{v.numerator}/{v.denominator}"
            return float(v)

        return {
            "format_version": 1,
            "labels": [_label_to_json(lab) for lab in self.labels],
            "dist": [[enc(v) for v in row] for row in self.dist],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "FiniteMetricSpace":
        if "labels" not in payload or "dist" not in payload:
            raise MetricError("metric-space object needs 'labels' and 'dist'")
        labels = [_label_from_json(lab) for lab in payload["labels"]]
        return cls(labels, payload["dist"])


class PseudometricSpace(FiniteMetricSpace):
    """Finite pseudometric space; distinct points may sit at distance zero."""

    allow_zero = True

    def zero_classes(self) -> list[tuple[Hashable, ...]]:
        """Groups (size >= 2) of labels at mutual distance zero, in label order."""
        tol = _tol(self.dist)
        n = len(self)
        seen: set[int] = set()
        out = []
        for i in label_order(self.labels):
            if i in seen:
                continue
            cls_ = [j for j in range(n) if self.dist[i, j] <= tol]
            seen.update(cls_)
            if len(cls_) > 1:
                out.append(tuple(self.labels[j] for j in sorted(cls_)))
        return out


def _fraction_to_decimal(v: Fraction) -> str | None:
    den = v.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return None
    places = max(twos, fives)
    scaled = v * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _label_to_json(lab):
    if isinstance(lab, tuple):
        return [_label_to_json(x) for x in lab]
    return lab


def _label_from_json(lab):
    if isinstance(lab, list):
        return tuple(_label_from_json(x) for x in lab)
    return lab


def check_metric(space: FiniteMetricSpace) -> None:
    """Run the full triangle-inequality check on ``space`` (raises MetricError)."""
    bad = _triangle_violation(space.dist)
    if bad is not None:
        i, j, k = bad
        raise MetricError(f"triangle inequality fails at ({i}, {j}) via {k}")


@dataclass(frozen=True)
class Correspondence:
    """Relation between point indices of two spaces; must cover both sides."""

    pairs: frozenset

    def __init__(self, pairs: Iterable[tuple[int, int]]):
        object.__setattr__(self, "pairs", frozenset((int(i), int(j)) for i, j in pairs))

    def covers(self, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> bool:
        xs = {i for i, _ in self.pairs}
        ys = {j for _, j in self.pairs}
        return xs == set(range(len(X))) and ys == set(range(len(Y)))

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)

    @classmethod
    def full(cls, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> "Correspondence":
        return cls((i, j) for i in range(len(X)) for j in range(len(Y)))

    @classmethod
    def diagonal(cls, X: FiniteMetricSpace) -> "Correspondence":
        return cls((i, i) for i in range(len(X)))


@dataclass(frozen=True)
class PointMap:
    """A total map from the points of ``source`` to the points of ``target``."""

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    assignment: tuple

    def __init__(self, source, target, assignment):
        assignment = tuple(int(a) for a in assignment)
        if len(assignment) != len(source):
            raise ValueError("assignment must be defined on every source index")
        if any(a < 0 or a >= len(target) for a in assignment):
            raise ValueError("assignment points outside the target")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "assignment", assignment)

    @classmethod
    def from_labels(cls, source, target, mapping: dict) -> "PointMap":
        return cls(source, target, [target.index(mapping[lab]) for lab in source.labels])

    @classmethod
    def identity(cls, X: FiniteMetricSpace) -> "PointMap":
        return cls(X, X, range(len(X)))

    def __call__(self, label):
        return self.target.labels[self.assignment[self.source.index(label)]]

    def image(self) -> set[int]:
        return set(self.assignment)


def _common(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if _is_exact(a) and _is_exact(b):
        return a, b
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def _half(v):
    return v * Fraction(1, 2) if isinstance(v, Fraction) else v / 2


def _pairs_distortion(dx: np.ndarray, dy: np.ndarray, I, J):
    dx, dy = _common(dx, dy)
    if len(I) == 0:
        return 0
    sub = abs(dx[np.ix_(I, I)] - dy[np.ix_(J, J)])
    return sub.max()


def distortion(f: PointMap, *, source=None, target=None):
    """Largest change of a pairwise distance under ``f``."""
    if source is not None and source is not f.source:
        raise ValueError("point map is defined on a different source space")
    if target is not None and target is not f.target:
        raise ValueError("point map is defined on a different target space")
    I = list(range(len(f.source)))
    return _pairs_distortion(f.source.dist, f.target.dist, I, list(f.assignment))


def is_eps_isometry(f: PointMap, eps) -> bool:
    eps = _coerce(eps)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    tol = 0 if (f.source.exact and f.target.exact and isinstance(eps, Fraction)) else FLOAT_TOL
    if distortion(f) > eps + tol:
        return False
    img = sorted(f.image())
    gaps = f.target.dist[:, img].min(axis=1)
    return bool(np.all(gaps <= eps + tol))


def gh_upper(X: FiniteMetricSpace, Y: FiniteMetricSpace, R: Correspondence):
    """Half the distortion of the correspondence ``R``; bounds d_GH(X, Y) above."""
    if not R.covers(X, Y):
        raise ValueError("correspondence does not cover both spaces")
    pairs = R.sorted_pairs()
    I = [i for i, _ in pairs]
    J = [j for _, j in pairs]
    return _half(_pairs_distortion(X.dist, Y.dist, I, J))


def _value_set_hausdorff(a: np.ndarray, b: np.ndarray):
    a = np.sort(np.unique(a))
    b = np.sort(np.unique(b))

    def one_side(p, q):
        pos = np.searchsorted(q, p)
        best = None
        for v, k in zip(p, pos):
            cands = []
            if k < len(q):
                cands.append(abs(q[k] - v))
            if k > 0:
                cands.append(abs(v - q[k - 1]))
            m = min(cands)
            best = m if best is None or m > best else best
        return best

    return max(one_side(a, b), one_side(b, a))


def gh_lower(X: FiniteMetricSpace, Y: FiniteMetricSpace):
    """Cheap lower bound on d_GH(X, Y).

    Maximum of half the diameter gap, half the Hausdorff distance between the
    eccentricity value sets and half the Hausdorff distance between the sets
    of pairwise distance values.
    """
    dx, dy = _common(X.dist, Y.dist)
    diam = abs(dx.max() - dy.max())
    ecc = _value_set_hausdorff(dx.max(axis=1), dy.max(axis=1))
    vals = _value_set_hausdorff(dx.ravel(), dy.ravel())
    return _half(max(diam, ecc, vals))


def _search_arrays(X: FiniteMetricSpace, Y: FiniteMetricSpace):
    """Distance matrices in a fast exact representation plus a decoder."""
    if X.exact and Y.exact:
        den = 1
        for v in list(X.dist.ravel()) + list(Y.dist.ravel()):
            den = den * v.denominator // gcd(den, v.denominator)
        ints = [int(v * den) for v in list(X.dist.ravel()) + list(Y.dist.ravel())]
        if max(ints, default=0) < 2**52:
            dx = np.array(ints[: X.dist.size], dtype=np.int64).reshape(X.dist.shape)
            dy = np.array(ints[X.dist.size :], dtype=np.int64).reshape(Y.dist.shape)
            return dx, dy, lambda v: Fraction(int(v), den)
        return X.dist, Y.dist, lambda v: v
    return X.as_float(), Y.as_float(), float


def gh_exact(X: FiniteMetricSpace, Y: FiniteMetricSpace, size_cap: int = DEFAULT_GH_CAP,
             budget: int | None = None):
    """Exact d_GH(X, Y) by branch and bound over correspondences.

    Every covering relation contains one of the form ``graph(f) + graph(g)^T``
    with ``f: X -> Y`` total and ``g`` defined only on the points of ``Y``
    missed by ``f``; the search enumerates these.  ``cost[x, y]`` holds the
    distortion that pair ``(x, y)`` would add to the pairs chosen so far, which
    gives forward checking: a branch dies as soon as some point still needing a
    partner has no pair cheaper than the incumbent.  Branching picks the most
    constrained point (ties: larger eccentricity, then label order) and tries
    partners by increasing added distortion, then label order.  Pruning only
    discards branches that cannot beat the incumbent, so the optimum does not
    depend on this order.

    ``budget`` caps the number of search nodes; exhausting it raises
    :class:`CapExceeded` rather than returning a non-optimal value.
    """
    if len(X) > size_cap or len(Y) > size_cap:
        raise CapExceeded(
            f"gh_exact limited to {size_cap} points (got {len(X)} and {len(Y)}); use bounds"
        )
    if len(X) == 0 or len(Y) == 0:
        raise ValueError("spaces must be non-empty")
    dx, dy, decode = _search_arrays(X, Y)
    n, m = len(X), len(Y)
    xrank = np.empty(n, dtype=int)
    xrank[label_order(X.labels)] = np.arange(n)
    yrank = np.empty(m, dtype=int)
    yrank[label_order(Y.labels)] = np.arange(m)
    ecc_x, ecc_y = dx.max(axis=1), dy.max(axis=1)
    x_key = {i: (-ecc_x[i], xrank[i]) for i in range(n)}
    y_key = {j: (-ecc_y[j], yrank[j]) for j in range(m)}

    best = [None]  # the first greedy dive supplies the incumbent
    lower = 2 * gh_lower(X, Y)

    def pair_cost(cost, i, j):
        return np.maximum(cost, np.abs(dx[:, [i]] - dy[[j], :]))

    nodes = [0]

    def rec(cost, cur, x_left: frozenset, covered: frozenset):
        nodes[0] += 1
        if budget is not None and nodes[0] > budget:
            raise CapExceeded(f"gh_exact search budget of {budget} nodes exhausted")
        b = best[0]
        if b is not None and b <= lower:
            return
        y_left = [j for j in range(m) if j not in covered]
        if not x_left and not y_left:
            if b is None or cur < b:
                best[0] = cur
            return
        # forward check: every open point needs some pair below the incumbent
        if b is not None:
            if x_left and any(cost[i].min() >= b for i in x_left):
                return
            if y_left and any(cost[:, j].min() >= b for j in y_left):
                return
        if x_left:
            def viable(i):
                row = cost[i]
                return int(np.sum(row < b)) if b is not None else m
            i = min(x_left, key=lambda i: (viable(i),) + x_key[i])
            opts = sorted(range(m), key=lambda j: (max(cost[i, j], cur), yrank[j]))
            for j in opts:
                val = max(cost[i, j], cur)
                if best[0] is not None and val >= best[0]:
                    break
                rec(pair_cost(cost, i, j), val, x_left - {i}, covered | {j})
            return
        j = min(y_left, key=lambda j: y_key[j])
        opts = sorted(range(n), key=lambda i: (max(cost[i, j], cur), xrank[i]))
        for i in opts:
            val = max(cost[i, j], cur)
            if best[0] is not None and val >= best[0]:
                break
            rec(pair_cost(cost, i, j), val, x_left, covered | {j})

    if dx.dtype.kind == "i":
        lower = lower / decode(1)  # into the integer units of the search
    zero = Fraction(0) if dx.dtype == object else dx.dtype.type(0)
    cost0 = np.full((n, m), zero, dtype=dx.dtype)
    rec(cost0, zero, frozenset(range(n)), frozenset())
    return _half(decode(best[0]))


def hausdorff_in(Z: FiniteMetricSpace, A: Iterable[int], B: Iterable[int]):
    """Two-sided Hausdorff distance between index sets ``A`` and ``B`` of ``Z``."""
    A, B = sorted(set(A)), sorted(set(B))
    if not A or not B:
        raise ValueError("Hausdorff distance needs non-empty subsets")
    sub = Z.dist[np.ix_(A, B)]
    return max(sub.min(axis=1).max(), sub.min(axis=0).max())


def net_sample(X: FiniteMetricSpace, k: int) -> tuple[list[int], object]:
    """Greedy farthest-point sample of ``k`` indices and its covering radius.

    Starts at the first label in label order; ties go to the earlier label.
    """
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    order = label_order(X.labels)
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    d = X.dist
    chosen = [order[0]]
    gap = d[order[0]].copy()
    for _ in range(k - 1):
        top = gap.max()
        cands = [i for i in range(n) if gap[i] == top]
        nxt = min(cands, key=lambda i: rank[i])
        chosen.append(nxt)
        gap = np.minimum(gap, d[nxt])
    return chosen, gap.max()

