"""Greedy nets, covering/packing intervals and dimension estimators.

Covering numbers are never computed exactly. For a ball ``B(x, r)`` the
greedy ``rho``-net of the ball is an upper bound on the number of
``rho``-balls needed, and a greedy ``2 rho``-separated packing is a lower
bound (each ``rho``-ball holds at most one of its points). Dimension fits
use the upper count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .metric_core import as_distance_matrix, slog


@dataclass(frozen=True)
class ScaleGrid:
    """Dyadic scales ``r_j = 2**-j`` for ``j_min <= j <= j_max``."""

    j_min: int
    j_max: int

    def __post_init__(self) -> None:
        if self.j_min > self.j_max:
            raise ValueError(f"empty scale grid [{self.j_min}, {self.j_max}]")

    @property
    def scales(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def radii(self) -> NDArray:
        return 2.0 ** -np.arange(self.j_min, self.j_max + 1, dtype=float)

    def __len__(self) -> int:
        return self.j_max - self.j_min + 1

    def __contains__(self, j: object) -> bool:
        return isinstance(j, (int, np.integer)) and self.j_min <= j <= self.j_max

    @classmethod
    def for_space(cls, X) -> "ScaleGrid":
        """Coarsest scale at least ``diam / 2``, finest at most ``sep_min``."""
        D = as_distance_matrix(X)
        n = D.shape[0]
        if n < 2:
            return cls(0, 8)
        off = D[~np.eye(n, dtype=bool)]
        diam, sep = float(off.max()), float(off.min())
        j_min = math.floor(1.0 - math.log2(diam))
        j_max = math.ceil(-math.log2(sep))
        return cls(j_min, max(j_max, j_min))


@dataclass(frozen=True)
class Net:
    """Centers of a maximal ``radius``-net, in selection order."""

    center_indices: tuple[int, ...]
    radius: float
    scale: int | None = None

    @property
    def size(self) -> int:
        return len(self.center_indices)


@dataclass(frozen=True)
class CoveringProfile:
    """Rows ``(r, rho, N_upper, N_lower)``, worst ball over all data centers."""

    rows: tuple[tuple[float, float, int, int], ...]

    def to_dict(self) -> dict:
        return {"rows": [{"r": r, "rho": p, "N_upper": u, "N_lower": lo} for r, p, u, lo in self.rows]}


@dataclass(frozen=True)
class HomogeneityFit:
    """Least-squares fit of ``log N`` against the almost-homogeneity form."""

    alpha: float
    beta: float
    s_hat: float
    logM_hat: float
    residual_rms: float
    scale_pairs_used: int
    local_cutoff: float | None = None
    profile: CoveringProfile = field(default_factory=lambda: CoveringProfile(()), repr=False)

    def required_M(self, s: float | None = None) -> float:
        """Smallest ``M`` making the bound hold on every fitted pair at exponent ``s``."""
        s = self.s_hat if s is None else s
        worst = 0.0
        for r, rho, n_up, _ in self.profile.rows:
            val = math.log(n_up) - s * math.log(r / rho)
            val -= self.beta * math.log(slog(r)) + self.alpha * math.log(slog(rho))
            worst = max(worst, val)
        return math.exp(worst)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "s_hat": self.s_hat,
            "logM_hat": self.logM_hat,
            "residual_rms": self.residual_rms,
            "scale_pairs_used": self.scale_pairs_used,
            "local_cutoff": self.local_cutoff,
            "required_M": self.required_M(),
            "estimator": "ols-dyadic-pairs",
            "profile": self.profile.to_dict()["rows"],
        }


# ---------------------------------------------------------------------------
# greedy nets
# ---------------------------------------------------------------------------


def _fps_matrix(D: NDArray, eps: float, start: int = 0) -> list[int]:
    mind = D[start].copy()
    centers = [start]
    while True:
        i = int(np.argmax(mind))
        if mind[i] <= eps:
            return centers
        centers.append(i)
        np.minimum(mind, D[i], out=mind)


def _row_distances(coords: NDArray, i: int, norm_kind: str) -> NDArray:
    diff = coords - coords[i]
    if norm_kind == "sup":
        return np.abs(diff).max(axis=1)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def fps_points(coords: NDArray, eps: float, norm_kind: str = "euclidean", start: int = 0, return_gaps: bool = False):
    """Greedy farthest-point net computed from coordinates, without a distance matrix.

    With ``return_gaps`` the distance of every point to its nearest center
    is returned as well.
    """
    mind = _row_distances(coords, start, norm_kind)
    centers = [start]
    while True:
        i = int(np.argmax(mind))
        if mind[i] <= eps:
            return (centers, mind) if return_gaps else centers
        centers.append(i)
        np.minimum(mind, _row_distances(coords, i, norm_kind), out=mind)


def farthest_point_net(X, epsilon: float, scale: int | None = None) -> Net:
    """Maximal ``epsilon``-net by farthest-point traversal from index 0.

    Each new center is the point farthest from the current centers (lowest
    index on ties), so centers are pairwise more than ``epsilon`` apart and
    the loop stops exactly when every point is within ``epsilon``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    D = as_distance_matrix(X)
    return Net(tuple(_fps_matrix(D, epsilon)), float(epsilon), scale)


def verify_net(X, net: Net) -> None:
    """Exhaustive separation and covering check; raises on failure."""
    D = as_distance_matrix(X)
    c = np.asarray(net.center_indices, dtype=int)
    sub = D[np.ix_(c, c)]
    off = sub[~np.eye(len(c), dtype=bool)]
    if off.size and off.min() <= net.radius:
        raise AssertionError("net centers closer than the net radius")
    if D[:, c].min(axis=1).max() > net.radius:
        raise AssertionError("net does not cover the space")


def _greedy_ball_count_table(D: NDArray, r: float, eps: NDArray) -> NDArray:
    """Greedy net sizes inside ``B(x, r)`` for every center ``x`` and every ``eps``.

    All balls run one farthest-point traversal in lockstep: row ``x`` holds
    the current distance to the chosen centers, with points outside the
    ball parked at ``-inf``. The greedy ``eps``-net is the prefix of the
    traversal whose insertion distances exceed ``eps``, so one traversal
    down to ``min(eps)`` serves every threshold.

    Returns
    -------
    ndarray, shape (len(eps), n)
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    floor = float(eps.min())
    n = D.shape[0]
    inside = D <= r
    mind = np.where(inside, D, -np.inf)
    counts = np.ones((len(eps), n), dtype=np.int64)
    rows = np.arange(n)
    gap = mind.max(axis=1)
    active = gap > floor
    while active.any():
        act = rows[active]
        sub = mind[act]
        pick = np.argmax(sub, axis=1)
        counts[:, act] += gap[act][None, :] > eps[:, None]
        sub = np.minimum(sub, D[pick])
        mind[act] = sub
        gap[act] = sub.max(axis=1)
        active[act] = gap[act] > floor
    return counts


def _greedy_ball_counts(D: NDArray, r: float, eps: float) -> NDArray:
    """Greedy ``eps``-net size inside ``B(x, r)`` for every center ``x``."""
    return _greedy_ball_count_table(D, r, np.array([eps]))[0]


def covering_number_bounds(X, r: float, rho: float) -> tuple[int, int]:
    """Interval ``(N_lower, N_upper)`` for the worst ``r``-ball by ``rho``-balls.

    ``N_upper`` is the largest greedy ``rho``-net over balls centred at data
    points and ``N_lower`` the largest greedy ``2 rho``-separated subset.
    """
    if not 0 < rho < r:
        raise ValueError("covering bounds need 0 < rho < r")
    D = as_distance_matrix(X)
    upper = int(_greedy_ball_counts(D, r, rho).max())
    lower = int(_greedy_ball_counts(D, r, 2.0 * rho).max())
    return lower, upper


def packing_count(X, center: int, r: float, separation: float) -> int:
    """Size of a greedy subset of ``B(center, r)`` that is ``separation``-separated."""
    D = as_distance_matrix(X)
    ball = np.flatnonzero(D[center] <= r)
    ball = np.concatenate(([center], ball[ball != center]))
    sub = D[np.ix_(ball, ball)]
    return len(_fps_matrix(sub, separation))


def covering_profile(X, pairs) -> CoveringProfile:
    D = as_distance_matrix(X)
    by_r: dict[float, set[float]] = {}
    for r, rho in pairs:
        by_r.setdefault(float(r), set()).update((float(rho), 2.0 * float(rho)))
    cache: dict[tuple[float, float], int] = {}
    for r, eps_set in by_r.items():
        eps = np.array(sorted(eps_set))
        table = _greedy_ball_count_table(D, r, eps).max(axis=1)
        cache.update({(r, float(e)): int(c) for e, c in zip(eps, table)})
    rows = [(float(r), float(rho), cache[(float(r), float(rho))], cache[(float(r), 2.0 * float(rho))]) for r, rho in pairs]
    return CoveringProfile(tuple(rows))


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


def _ols(x: NDArray, y: NDArray) -> tuple[float, float, float]:
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res**2)))


def dyadic_pairs(grid: ScaleGrid, local_cutoff: float | None = None) -> list[tuple[float, float]]:
    """Pairs ``(2**-i, 2**-j)`` from the grid with ``j >= i + 2``."""
    pairs = []
    for i in grid.scales:
        r = 2.0**-i
        if local_cutoff is not None and not r < local_cutoff:
            continue
        for j in range(i + 2, grid.j_max + 1):
            pairs.append((r, 2.0**-j))
    return pairs


def homogeneity_fit(
    X,
    grid: ScaleGrid | None = None,
    alpha: float = 0.0,
    beta: float = 0.0,
    local_cutoff: float | None = None,
) -> HomogeneityFit:
    """Fit ``log N(r, rho) = log M + s log(r/rho) + beta log slog r + alpha log slog rho``.

    Parameters
    ----------
    X : FiniteMetricSpace, PointSet or distance matrix
    grid : ScaleGrid, optional
        Defaults to ``ScaleGrid.for_space(X)``.
    alpha, beta : float
        Fixed correction exponents; the slog terms are moved to the left
        side before the regression.
    local_cutoff : float, optional
        Keep only pairs with ``r < local_cutoff`` (the local variant).

    Returns
    -------
    HomogeneityFit
        ``s_hat`` is the slope; the covering profile is attached.
    """
    if grid is None:
        grid = ScaleGrid.for_space(X)
    pairs = dyadic_pairs(grid, local_cutoff)
    if len(pairs) < 6:
        raise ValueError(f"homogeneity fit needs at least 6 scale pairs, grid gives {len(pairs)}")
    profile = covering_profile(X, pairs)
    r = np.array([row[0] for row in profile.rows])
    rho = np.array([row[1] for row in profile.rows])
    n_up = np.array([row[2] for row in profile.rows], dtype=float)
    y = np.log(n_up) - beta * np.log(slog(r)) - alpha * np.log(slog(rho))
    s_hat, logM, rms = _ols(np.log(r / rho), y)
    return HomogeneityFit(float(alpha), float(beta), s_hat, logM, rms, len(pairs), local_cutoff, profile)


@dataclass(frozen=True)
class BoxDimension:
    estimate: float
    residual_rms: float
    scales: tuple[int, ...]
    counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "residual_rms": self.residual_rms,
            "scales": list(self.scales),
            "counts": list(self.counts),
        }


def box_dimension_estimate(X, grid: ScaleGrid | None = None) -> BoxDimension:
    """Slope of ``log N(X, 2**-j)`` against ``j log 2`` over the middle half of the grid."""
    D = as_distance_matrix(X)
    n = D.shape[0]
    if n == 1:
        return BoxDimension(0.0, 0.0, (), ())
    if n < 8:
        raise ValueError("box dimension estimate needs at least 8 points")
    if grid is None:
        grid = ScaleGrid.for_space(D)
    js = list(grid.scales)
    L = len(js)
    lo, hi = L // 4, L - L // 4
    mid = js[lo:hi]
    if len(mid) < 3:
        raise ValueError("scale range too narrow for a box dimension slope")
    counts = [len(_fps_matrix(D, 2.0**-j)) for j in mid]
    x = np.array(mid, dtype=float) * math.log(2.0)
    slope, _, rms = _ols(x, np.log(np.array(counts, dtype=float)))
    return BoxDimension(slope, rms, tuple(mid), tuple(counts))


@dataclass(frozen=True)
class ImageHomogeneityReport:
    source_fit: HomogeneityFit
    image_fit: HomogeneityFit
    gamma: float
    slack: float
    ordering_source: bool
    ordering_image: bool

    @property
    def difference(self) -> float:
        return self.image_fit.s_hat - self.source_fit.s_hat

    @property
    def passed(self) -> bool:
        return self.difference <= self.slack

    def to_dict(self) -> dict:
        return {
            "source": self.source_fit.to_dict(),
            "image": self.image_fit.to_dict(),
            "gamma": self.gamma,
            "slack": self.slack,
            "difference": self.difference,
            "passed": self.passed,
            "ordering_source": self.ordering_source,
            "ordering_image": self.ordering_image,
        }


def image_homogeneity_audit(
    X,
    mapped,
    alpha: float = 0.0,
    beta: float = 0.0,
    gamma: float = 0.0,
    slack: float = 0.25,
    bump: float = 0.5,
) -> ImageHomogeneityReport:
    """Compare the fitted exponent of an image with that of its source.

    The source is fitted with ``(alpha, beta)`` and the image with
    ``(alpha, beta + gamma)``. The ordering flags record whether refitting
    with both exponents raised by ``bump`` does not increase ``s_hat``;
    the regression is not guaranteed to respect that ordering, so the flags
    are diagnostics and do not enter ``passed``.
    """
    Dx = as_distance_matrix(X)
    Dy = as_distance_matrix(mapped)
    if Dx.shape != Dy.shape:
        raise ValueError("source and image must have the same number of points")
    src = homogeneity_fit(Dx, ScaleGrid.for_space(Dx), alpha, beta)
    img = homogeneity_fit(Dy, ScaleGrid.for_space(Dy), alpha, beta + gamma)
    src_b = homogeneity_fit(Dx, ScaleGrid.for_space(Dx), alpha + bump, beta + bump)
    img_b = homogeneity_fit(Dy, ScaleGrid.for_space(Dy), alpha + bump, beta + gamma + bump)
    return ImageHomogeneityReport(
        src,
        img,
        float(gamma),
        float(slack),
        src_b.s_hat <= src.s_hat + 1e-12,
        img_b.s_hat <= img.s_hat + 1e-12,
    )


__all__ = [
    "ScaleGrid",
    "Net",
    "CoveringProfile",
    "HomogeneityFit",
    "BoxDimension",
    "ImageHomogeneityReport",
    "farthest_point_net",
    "fps_points",
    "verify_net",
    "covering_number_bounds",
    "packing_count",
    "covering_profile",
    "dyadic_pairs",
    "homogeneity_fit",
    "box_dimension_estimate",
    "image_homogeneity_audit",
]
