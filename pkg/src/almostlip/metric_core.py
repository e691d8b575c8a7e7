"""Finite metric spaces, point sets, the symmetric logarithm and the
Kuratowski / difference-set constructions that everything else builds on.

All lengths are dimensionless doubles. Metric validation uses a relative
tolerance of ``1e-9 * diam``; point deduplication at load time uses
``1e-12 * diam``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist

METRIC_RTOL = 1e-9
DEDUP_RTOL = 1e-12

# p4 constant of the slog calculus
SIGMA = 1.0 / (4.0 * math.log(2.0))

NORM_KINDS = ("euclidean", "sup")


class MetricError(ValueError):
    """Raised when a distance matrix is not a valid finite metric."""


def _check_distance_matrix(dist: NDArray, check_triangle: bool) -> NDArray:
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise MetricError(f"distance matrix must be square, got shape {dist.shape}")
    if not np.all(np.isfinite(dist)):
        raise MetricError("distance matrix contains non-finite entries")
    n = dist.shape[0]
    if n == 0:
        raise MetricError("empty metric space")
    if np.any(dist < 0):
        raise MetricError("negative distance")
    if np.any(np.diag(dist) != 0):
        raise MetricError("nonzero diagonal")
    diam = float(dist.max())
    tol = METRIC_RTOL * diam
    asym = np.abs(dist - dist.T)
    if np.any(asym > tol):
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        raise MetricError(f"asymmetric distances at ({i}, {j})")
    dist = 0.5 * (dist + dist.T)
    if n >= 2:
        off = dist[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            raise MetricError("distinct points at zero distance (merge duplicates first)")
    if check_triangle and n >= 3:
        for k in range(n):
            slack = dist[:, k : k + 1] + dist[k : k + 1, :] + tol - dist
            if np.any(slack < 0):
                i, j = np.unravel_index(int(np.argmin(slack)), slack.shape)
                raise MetricError(f"triangle inequality fails for ({i}, {k}, {j})")
    return dist


@dataclass(frozen=True)
class FiniteMetricSpace:
    """A finite metric space given by its full distance matrix.

    The matrix is validated on construction (symmetry, zero diagonal,
    positive off-diagonal, triangle inequality to ``1e-9 * diam``) and
    stored read-only.
    """

    dist: NDArray[np.float64]
    labels: tuple[str, ...] | None = None
    check_triangle: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self) -> None:
        d = np.array(self.dist, dtype=np.float64, copy=True)
        d = _check_distance_matrix(d, self.check_triangle)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != d.shape[0]:
                raise MetricError("labels length does not match point count")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diam(self) -> float:
        return float(self.dist.max())

    @property
    def sep_min(self) -> float:
        if self.n < 2:
            return 0.0
        return float(self.dist[~np.eye(self.n, dtype=bool)].min())

    def pair_indices(self) -> tuple[NDArray, NDArray]:
        """Index arrays ``(i, j)`` over all unordered pairs ``i < j``."""
        return np.triu_indices(self.n, k=1)

    def pair_distances(self) -> NDArray:
        i, j = self.pair_indices()
        return self.dist[i, j]

    def rescaled(self, factor: float) -> "FiniteMetricSpace":
        if factor <= 0:
            raise ValueError("rescaling factor must be positive")
        return FiniteMetricSpace(self.dist * factor, self.labels, check_triangle=False)

    def subspace(self, indices: Sequence[int]) -> "FiniteMetricSpace":
        idx = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], labels, check_triangle=False)


def pairwise_distances(coords: NDArray, norm_kind: str = "euclidean") -> NDArray:
    """Full pairwise distance matrix of the rows of ``coords``."""
    if norm_kind == "euclidean":
        return cdist(coords, coords, metric="euclidean")
    if norm_kind == "sup":
        return cdist(coords, coords, metric="chebyshev")
    raise ValueError(f"unknown norm kind {norm_kind!r}")


def vector_norms(coords: NDArray, norm_kind: str = "euclidean") -> NDArray:
    if norm_kind == "euclidean":
        return np.linalg.norm(coords, axis=-1)
    if norm_kind == "sup":
        return np.abs(coords).max(axis=-1) if coords.shape[-1] else np.zeros(coords.shape[:-1])
    raise ValueError(f"unknown norm kind {norm_kind!r}")


@dataclass(frozen=True)
class PointSet:
    """Points in coordinates, measured with the Euclidean or the sup norm."""

    coords: NDArray[np.float64]
    norm_kind: str = "euclidean"

    def __post_init__(self) -> None:
        c = np.array(self.coords, dtype=np.float64, copy=True)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] == 0:
            raise MetricError(f"coordinates must be a nonempty 2-d array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise MetricError("coordinates contain non-finite entries")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"norm_kind must be one of {NORM_KINDS}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def distances(self) -> NDArray:
        return pairwise_distances(self.coords, self.norm_kind)

    def norms(self) -> NDArray:
        return vector_norms(self.coords, self.norm_kind)

    def metric(self) -> FiniteMetricSpace:
        """The induced metric space; distinct points are required."""
        return FiniteMetricSpace(self.distances(), check_triangle=False)


def merge_duplicate_points(dist: NDArray) -> NDArray:
    """Indices of a representative subset with near-duplicates removed.

    Two points closer than ``1e-12 * diam`` are merged into the one with
    the lower index. A warning is emitted when anything is dropped.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    tol = DEDUP_RTOL * float(dist.max()) if n else 0.0
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if keep[i]:
            dup = dist[i] <= tol
            dup[: i + 1] = False
            keep &= ~dup
    kept = np.flatnonzero(keep)
    if len(kept) < n:
        warnings.warn(f"merged {n - len(kept)} duplicate point(s)", stacklevel=2)
    return kept


def metric_from_matrix(dist: ArrayLike, labels: Sequence[str] | None = None) -> FiniteMetricSpace:
    """Build a validated space from raw distances, merging duplicate points."""
    d = np.asarray(dist, dtype=float)
    kept = merge_duplicate_points(d)
    if labels is not None:
        labels = [labels[i] for i in kept]
    return FiniteMetricSpace(d[np.ix_(kept, kept)], labels)


def pointset_from_coords(coords: ArrayLike, norm_kind: str = "euclidean") -> PointSet:
    """Build a point set from raw coordinates, merging duplicate points."""
    c = np.asarray(coords, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    kept = merge_duplicate_points(pairwise_distances(c, norm_kind))
    return PointSet(c[kept], norm_kind)


# ---------------------------------------------------------------------------
# slog calculus
# ---------------------------------------------------------------------------


def slog(x: ArrayLike) -> NDArray | float:
    """Symmetric logarithm ``log(x + 1/x)`` for ``x > 0``.

    Evaluated as ``|log x| + log1p(min(x, 1/x)**2)`` so that it stays
    accurate at both ends of the double range.
    """
    a = np.asarray(x, dtype=float)
    if np.any(~(a > 0)):
        raise ValueError("slog is defined only for positive arguments")
    la = np.abs(np.log(a))
    small = np.minimum(a, 1.0 / a)
    out = la + np.log1p(small * small)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SlogConstants:
    """Constants of the slog calculus.

    ``sigma`` is fixed; the pairs ``(A_L, B_L)`` and ``(a_gamma, b_gamma)``
    have no closed form and are filled in from grid audits when requested.
    """

    gamma: float = 0.0
    sigma: float = SIGMA
    A_L: float | None = None
    B_L: float | None = None
    a_gamma: float | None = None
    b_gamma: float | None = None

    @classmethod
    def empirical(cls, L: float, gamma: float, grid: ArrayLike | None = None) -> "SlogConstants":
        if grid is None:
            grid = np.logspace(-12, 12, 4001)
        p2 = slog_property_audit("p2", {"L": L}, grid)
        p3 = slog_property_audit("p3", {"gamma": gamma}, grid)
        return cls(gamma, SIGMA, p2.quotient_min, p2.quotient_max, p3.quotient_min, p3.quotient_max)


@dataclass(frozen=True)
class SlogAudit:
    property: str
    params: dict
    n_points: int
    quotient_min: float
    quotient_max: float
    worst_x: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "params": dict(self.params),
            "n_points": self.n_points,
            "quotient_min": self.quotient_min,
            "quotient_max": self.quotient_max,
            "worst_x": self.worst_x,
            "violations": self.violations,
            "passed": self.passed,
        }


def slog_property_audit(prop: str, params: dict | None, sample_grid: ArrayLike) -> SlogAudit:
    """Check one of the four slog properties at every grid point.

    p1
        ``|log x| <= slog(x) <= log 2 + |log x|``; the quotient is
        ``slog(x) - |log x|`` and must lie in ``[0, log 2]``.
    p2
        quotient ``slog(L x) / slog(x)`` for ``params["L"]``; its range over
        the grid gives empirical ``A_L, B_L``, and it must lie in
        ``[log 2 / (log 2 + slog L), 1 + slog(L) / log 2]``.
    p3
        quotient ``slog(x slog(x)**gamma) / slog(x)``; range gives
        ``a_gamma, b_gamma``. With ``t = slog(slog(x)**gamma)`` it must lie
        in ``[1 / (1 + t / log 2), 1 + t / slog(x)]``.
    p4
        quotient ``slog(x) / slog(2**-k)`` where ``2**-(k+1) <= x <= 2**-k``;
        must be at least ``sigma = 1 / (4 log 2)``.
    """
    params = dict(params or {})
    x = np.asarray(sample_grid, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("sample grid is empty")
    if np.any(~(x > 0)):
        raise ValueError("sample grid must be positive")
    s = slog(x)
    s = np.atleast_1d(s)
    if prop == "p1":
        q = s - np.abs(np.log(x))
        lo, hi = 0.0, math.log(2.0)
        # one ulp of slack on each side: both sides are computed in floating point
        eps = 4 * np.finfo(float).eps * np.maximum(s, 1.0)
        bad = (q < lo - eps) | (q > hi + eps)
        worst = int(np.argmax(np.maximum(lo - q, q - hi)))
    elif prop == "p2":
        L = float(params["L"])
        if L <= 0:
            raise ValueError("p2 needs L > 0")
        q = np.atleast_1d(slog(L * x)) / s
        # slog(ab) <= slog(a) + slog(b) and slog >= log 2 give both bounds
        sl = float(slog(L))
        lo, hi = math.log(2.0) / (math.log(2.0) + sl), 1.0 + sl / math.log(2.0)
        bad = ~np.isfinite(q) | (q < lo * (1 - 1e-12)) | (q > hi * (1 + 1e-12))
        worst = int(np.argmax(np.abs(np.log(q))))
    elif prop == "p3":
        g = float(params["gamma"])
        if g < 0:
            raise ValueError("p3 needs gamma >= 0")
        q = np.atleast_1d(slog(x * s**g)) / s
        # same subadditivity with b = slog(x)**gamma, checked pointwise
        t = np.atleast_1d(slog(s**g)) if g > 0 else np.zeros_like(s)
        lo, hi = 1.0 / (1.0 + t / math.log(2.0)), 1.0 + t / s
        bad = ~np.isfinite(q) | (q < lo * (1 - 1e-12)) | (q > hi * (1 + 1e-12))
        worst = int(np.argmax(np.abs(np.log(q))))
    elif prop == "p4":
        k = np.floor(-np.log2(x))
        # guard the floor against log2 rounding at exact powers of two
        k = np.where(2.0 ** (-k) < x, k - 1, k)
        k = np.where(2.0 ** (-(k + 1)) > x, k + 1, k)
        q = s / np.atleast_1d(slog(2.0 ** (-k)))
        bad = q < SIGMA
        worst = int(np.argmin(q))
    else:
        raise ValueError(f"unknown slog property {prop!r}")
    return SlogAudit(
        property=prop,
        params=params,
        n_points=int(x.size),
        quotient_min=float(q.min()),
        quotient_max=float(q.max()),
        worst_x=float(x[worst]),
        violations=int(np.count_nonzero(bad)),
    )


# ---------------------------------------------------------------------------
# Kuratowski embedding and difference sets
# ---------------------------------------------------------------------------


def kuratowski_embed(X: FiniteMetricSpace, base_idx: int = 0) -> PointSet:
    """Row ``i`` is ``y -> d(x_i, y) - d(x_base, y)`` sampled on all of X.

    The sup distance between rows ``i`` and ``j`` is attained at ``y = x_j``
    and equals ``d(x_i, x_j)``.
    """
    if not 0 <= base_idx < X.n:
        raise IndexError(f"base index {base_idx} out of range for {X.n} points")
    coords = X.dist - X.dist[base_idx][None, :]
    return PointSet(coords, norm_kind="sup")


def difference_set(X: PointSet) -> PointSet:
    """All differences ``x_i - x_j`` with near-duplicates merged.

    Differences are bucketed on a grid of step ``1e-12 * diam`` per
    coordinate and one representative is kept per bucket, so the zero
    vector appears exactly once.
    """
    c = X.coords
    n, dim = c.shape
    diffs = (c[:, None, :] - c[None, :, :]).reshape(n * n, dim)
    norms = vector_norms(diffs, X.norm_kind)
    diam = float(norms.max())
    if diam == 0.0:
        return PointSet(np.zeros((1, dim)), X.norm_kind)
    step = DEDUP_RTOL * diam
    keys = np.round(diffs / step).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    first.sort()
    out = diffs[first]
    # the bucket representative of zero might carry rounding noise
    zero_rows = np.all(keys[first] == 0, axis=1)
    out[zero_rows] = 0.0
    return PointSet(out, X.norm_kind)


def as_distance_matrix(X: "FiniteMetricSpace | PointSet | ArrayLike") -> NDArray:
    """Distance matrix of a metric space, a point set or a raw square array."""
    if isinstance(X, FiniteMetricSpace):
        return X.dist
    if isinstance(X, PointSet):
        return X.distances()
    d = np.asarray(X, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MetricError("expected a square distance matrix")
    return d


def random_metric_space(n: int, seed: int = 0, low: float = 1.0, high: float = 2.0) -> FiniteMetricSpace:
    """Shortest-path metric of a complete graph with uniform random edge weights.

    Draws come from a Philox stream, so the space depends only on ``seed``.
    """
    from scipy.sparse.csgraph import shortest_path

    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    W = rng.uniform(low, high, size=(n, n))
    W = np.triu(W, 1)
    W = W + W.T
    D = shortest_path(W, method="FW", directed=False)
    return FiniteMetricSpace(D)
