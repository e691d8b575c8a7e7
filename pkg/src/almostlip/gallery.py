"""Explicit example sets with the covering and embedding behaviour they are known for.

Every generator returns a ``PointSet`` with exact coordinates. Claims are
checked with rigorous packing lower bounds where a lower bound is needed,
and with the regression fits of ``covering`` where a dimension is compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .covering import ScaleGrid, _fps_matrix, covering_number_bounds, homogeneity_fit, packing_count
from .metric_core import PointSet, difference_set, slog

KINDS = (
    "orthogonal_sequence",
    "xstar",
    "rho_sequence",
    "product_example",
    "cantor",
    "interval",
    "nasty_curve",
)
MAX_COORDS = 256
MIN_MAGNITUDE = 1e-300
XSTAR_MAX_BLOCK = 256


@dataclass(frozen=True)
class GallerySpec:
    """Parameters of a gallery set.

    ``n`` is the number of sequence terms (or sample points for ``interval``
    and ``nasty_curve``), ``depth`` the level count for ``xstar``,
    ``cantor`` and ``nasty_curve``. ``decay`` selects ``geometric``
    (``b_m = 2**-m``) or ``algebraic`` (``b_m = eps * m**-gamma``) for the
    orthogonal sequence.
    """

    kind: str
    n: int = 14
    decay: str = "geometric"
    depth: int = 3
    R: float = 0.1
    seed: int | None = None
    include_origin: bool = False
    gamma: float = 3.0
    eps: float = 1.0
    test_ns: tuple[int, ...] = (8, 16, 24)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown gallery kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["test_ns"] = list(self.test_ns)
        return d


def _check_magnitudes(values: NDArray) -> None:
    v = np.abs(values[values != 0])
    if v.size and v.min() < MIN_MAGNITUDE:
        raise ValueError(f"coordinate magnitude {v.min():.3e} below {MIN_MAGNITUDE:g}")


def _check_coords(k: int) -> None:
    if k > MAX_COORDS:
        raise ValueError(f"{k} coordinates exceed the cap of {MAX_COORDS}")


def orthogonal_sequence(n: int, decay: str = "geometric", eps: float = 1.0, gamma: float = 3.0, include_origin: bool = False) -> PointSet:
    """Points ``b_m e_m`` for ``m = 1..n``, optionally with the origin appended."""
    _check_coords(n)
    m = np.arange(1, n + 1, dtype=float)
    if decay == "geometric":
        b = 2.0**-m
    elif decay == "algebraic":
        b = eps * m**-gamma
    else:
        raise ValueError(f"unknown decay {decay!r}")
    _check_magnitudes(b)
    coords = np.diag(b)
    if include_origin:
        coords = np.vstack([coords, np.zeros(n)])
    return PointSet(coords)


def xstar_values(depth: int) -> NDArray:
    """``a_n = 4**-(2**j)`` repeated over ``n = 2**(j-1) .. 2**j - 1`` for ``j = 1..depth``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if 2**depth > XSTAR_MAX_BLOCK:
        raise ValueError(f"xstar depth {depth} exceeds 2**j <= {XSTAR_MAX_BLOCK}")
    vals = np.concatenate([np.full(2 ** (j - 1), 4.0 ** -(2**j)) for j in range(1, depth + 1)])
    _check_magnitudes(vals)
    return vals


def xstar(depth: int) -> PointSet:
    a = xstar_values(depth)
    _check_coords(len(a))
    return PointSet(np.diag(a))


def rho_sequence(n: int) -> PointSet:
    """Points ``(1 - 1/m) e_m`` for ``m = 1..n``; the first is the origin."""
    _check_coords(n)
    m = np.arange(1, n + 1, dtype=float)
    return PointSet(np.diag(1.0 - 1.0 / m))


def product_example(n: int) -> PointSet:
    """``(4**-m e_m, a_m e_m)`` and ``(4**-m e_m, 0)`` for ``m = 1..n`` in ``R**n x R**n``.

    ``a_m`` are the xstar values, so ``X - X`` contains a copy of the first
    ``n`` xstar points.
    """
    _check_coords(2 * n)
    depth = max(1, math.ceil(math.log2(n + 1)))
    a = xstar_values(depth)[:n]
    m = np.arange(1, n + 1, dtype=float)
    first = np.diag(4.0**-m)
    upper = np.hstack([first, np.diag(a)])
    lower = np.hstack([first, np.zeros((n, n))])
    coords = np.empty((2 * n, 2 * n))
    coords[0::2] = upper
    coords[1::2] = lower
    _check_magnitudes(coords)
    return PointSet(coords)


def cantor(depth: int) -> PointSet:
    """Left endpoints of the ``2**depth`` intervals of the middle-third construction."""
    pts = np.array([0.0])
    for d in range(1, depth + 1):
        pts = np.concatenate([pts, pts + 2.0 * 3.0**-d])
    return PointSet(np.sort(pts)[:, None])


def interval(n: int) -> PointSet:
    """``n`` equispaced points of ``[0, 1]``."""
    return PointSet(np.linspace(0.0, 1.0, n)[:, None])


# ---------------------------------------------------------------------------
# rotation maps and the perturbation of a curve
# ---------------------------------------------------------------------------


def smoothstep(t: NDArray) -> NDArray:
    """Quintic ramp ``6 t**5 - 15 t**4 + 10 t**3`` clipped to ``[0, 1]``."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


PSI_SLOPE = 7.5  # max |psi'|: 4 * 15/8 on the rising ramp


def psi(r: NDArray) -> NDArray:
    """0 for ``r <= 3/4`` or ``r >= 2``, 1 at ``r = 1``, quintic ramps in between."""
    r = np.asarray(r, dtype=float)
    up = smoothstep(4.0 * (r - 0.75))
    down = smoothstep(2.0 - r)
    return np.where(r <= 1.0, up, down)


@dataclass(frozen=True)
class RotationMap:
    """``x -> x / eta`` rotated in the plane ``(e1, e2)`` by ``alpha psi(eta |x|)``.

    The map fixes every point with ``|x| <= 3/(4 eta)`` or ``|x| >= 2/eta``
    and sends ``v / eta`` to ``w / eta``; in particular ``v`` goes to ``w``
    when ``eta = 1``.
    """

    v: NDArray
    w: NDArray
    eta: float
    e1: NDArray
    e2: NDArray
    alpha: float

    def apply(self, X: NDArray) -> NDArray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.alpha == 0.0:
            return X.copy()
        r = np.linalg.norm(X, axis=1) * self.eta
        active = (r > 0.75) & (r < 2.0)
        out = X.copy()
        if not active.any():
            return out
        Xa = X[active]
        theta = self.alpha * psi(r[active])
        c1 = Xa @ self.e1
        c2 = Xa @ self.e2
        n1 = np.cos(theta) * c1 + np.sin(theta) * c2
        n2 = -np.sin(theta) * c1 + np.cos(theta) * c2
        out[active] = Xa + np.outer(n1 - c1, self.e1) + np.outer(n2 - c2, self.e2)
        return out

    def __call__(self, X: NDArray) -> NDArray:
        return self.apply(X)

    @property
    def lipschitz_bound(self) -> float:
        """``1 + 2 alpha max|psi'|``, the same for every ``eta`` and for the inverse."""
        return 1.0 + 2.0 * self.alpha * PSI_SLOPE


def rotation_map(v: NDArray, w: NDArray, eta: float = 1.0) -> RotationMap:
    v = np.asarray(v, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if v.shape != w.shape:
        raise ValueError("v and w must have the same dimension")
    if v.size < 2:
        raise ValueError("ambient dimension must be at least 2")
    nv, nw = np.linalg.norm(v), np.linalg.norm(w)
    if nv == 0 or nw == 0:
        raise ValueError("v and w must be nonzero")
    if abs(nv - 1) > 1e-9 or abs(nw - 1) > 1e-9:
        raise ValueError("v and w must be unit vectors")
    v, w = v / nv, w / nw
    if not eta > 0:
        raise ValueError("eta must be positive")
    c = float(np.clip(v @ w, -1.0, 1.0))
    alpha = math.acos(c)
    e1 = v.copy()
    if alpha == 0.0:
        e2 = np.zeros_like(v)
    elif math.sin(alpha) > 1e-12:
        e2 = (e1 * c - w) / math.sin(alpha)
        e2 /= np.linalg.norm(e2)
    else:
        # w = -v: any direction orthogonal to v will do
        k = int(np.argmin(np.abs(v)))
        e2 = np.zeros_like(v)
        e2[k] = 1.0
        e2 -= (e2 @ e1) * e1
        e2 /= np.linalg.norm(e2)
    return RotationMap(v, w, float(eta), e1, e2, alpha)


@dataclass(frozen=True)
class NastyResult:
    image: PointSet
    source: PointSet
    depth: int
    R: float
    centers: tuple[NDArray, ...]  # per level, array of center coordinates
    targets: tuple[tuple[int, ...], ...]  # per level, image row index of x_i + a_j e_ij
    center_rows: tuple[tuple[int, ...], ...]  # per level, image row index of x_i
    supports_disjoint: bool
    max_displacement: float
    hausdorff: float

    def level_values(self, j: int) -> float:
        return 0.5 * self.R * 8.0**-j

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "R": self.R,
            "n_points": self.image.n,
            "ambient_dim": self.image.dim,
            "supports_disjoint": self.supports_disjoint,
            "max_displacement": self.max_displacement,
            "hausdorff": self.hausdorff,
            "centers_per_level": [len(c) for c in self.centers],
        }


def _polyline_point_at_distance(P: NDArray, start_t: float, center: NDArray, target: float) -> float | None:
    """Parameter of the first point on the polyline, searching forward then backward
    from ``start_t``, whose distance to ``center`` equals ``target``."""
    nseg = P.shape[0] - 1

    def point(t):
        i = min(int(math.floor(t)), nseg - 1)
        s = t - i
        return (1 - s) * P[i] + s * P[i + 1]

    def f(t):
        return float(np.linalg.norm(point(t) - center)) - target

    for direction in (1, -1):
        t0 = start_t
        ts = []
        if direction == 1:
            ts = [float(k) for k in range(int(math.floor(t0)) + 1, nseg + 1)]
        else:
            ts = [float(k) for k in range(int(math.ceil(t0)) - 1, -1, -1)]
        a = t0
        fa = f(a)
        for b in ts:
            fb = f(b)
            if fa < 0 <= fb:
                lo, hi = (a, b)
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if f(mid) < 0:
                        lo = mid
                    else:
                        hi = mid
                    if abs(hi - lo) < 1e-15:
                        break
                return hi
            a, fa = b, fb
    return None


def _point_at(P: NDArray, t: float) -> NDArray:
    nseg = P.shape[0] - 1
    i = min(int(math.floor(t)), nseg - 1)
    s = t - i
    return (1 - s) * P[i] + s * P[i + 1]


def nasty_perturbation(curve: PointSet, depth: int, R: float) -> NastyResult:
    """Finite-depth bi-Lipschitz perturbation of a sampled curve.

    The rows of ``curve`` are read as consecutive vertices of a polyline.
    Level 0 uses the first vertex and the vertex farthest from it; each
    level-``j`` center spawns a child on the polyline at distance
    ``2 R 8**-(j+1)``. At level ``j`` every center ``x_i`` gets a point
    ``y_ij`` at distance ``a_j = R 8**-j / 2`` and a rotation supported on
    ``3 a_j / 4 < |x - x_i| < 2 a_j`` that sends ``y_ij`` to
    ``x_i + a_j e_ij`` with ``e_ij`` a fresh coordinate direction. Children
    and the points ``y_ij`` are inserted into the sample so the image holds
    them exactly.

    Raises
    ------
    ValueError
        If the sample is too small, ``depth > 5``, the two seed balls
        overlap, or the polyline does not reach a required distance.
    """
    if depth < 0 or depth > 5:
        raise ValueError("depth must lie in 0..5")
    P = np.asarray(curve.coords, dtype=float)
    if P.shape[0] < 2 ** (depth + 2):
        raise ValueError(f"curve needs at least {2 ** (depth + 2)} points")
    if not R > 0:
        raise ValueError("R must be positive")
    dist0 = np.linalg.norm(P - P[0], axis=1)
    far = int(np.argmax(dist0))
    if dist0[far] < 2 * R:
        raise ValueError("seed balls of radius R overlap; reduce R")
    # centers as (parameter, point)
    level_centers = [[(0.0, P[0]), (float(far), P[far])]]
    for j in range(depth):
        nxt = []
        for t, x in level_centers[-1]:
            tc = _polyline_point_at_distance(P, t, x, 2.0 * R * 8.0 ** -(j + 1))
            if tc is None:
                raise ValueError(f"curve does not reach the child distance at level {j + 1}")
            nxt.append((t, x))
            nxt.append((tc, _point_at(P, tc)))
        level_centers.append(nxt)
    ys = []
    for j, lvl in enumerate(level_centers):
        a = 0.5 * R * 8.0**-j
        row = []
        for t, x in lvl:
            ty = _polyline_point_at_distance(P, t, x, a)
            if ty is None:
                raise ValueError(f"curve does not reach distance a_{j} from a center")
            row.append((ty, _point_at(P, ty)))
        ys.append(row)
    # insert constructed points into the sample (ordered by polyline parameter)
    extra_t = [t for lvl in level_centers for t, _ in lvl] + [t for row in ys for t, _ in row]
    params = np.concatenate([np.arange(P.shape[0], dtype=float), np.array(extra_t)])
    pts = np.vstack([P] + [_point_at(P, t)[None, :] for t in extra_t])
    order = np.lexsort((np.arange(len(params)), params))
    params, pts = params[order], pts[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 0
    params, pts = params[keep], pts[keep]

    n_extra = 2 ** (depth + 2) - 2
    _check_coords(P.shape[1] + n_extra)
    base_dim = P.shape[1]
    src = np.hstack([pts, np.zeros((len(pts), n_extra))])
    img = src.copy()

    def row_of(t):
        return int(np.argmin(np.abs(params - t)))

    # supports: interval check on |x - x_i| per level
    annuli = []
    targets, center_rows = [], []
    for j, lvl in enumerate(level_centers):
        a = 0.5 * R * 8.0**-j
        trow, crow = [], []
        for i, ((t, x), (ty, y)) in enumerate(zip(lvl, ys[j])):
            xi = np.concatenate([x, np.zeros(n_extra)])
            yi = np.concatenate([y, np.zeros(n_extra)])
            e = np.zeros(base_dim + n_extra)
            e[base_dim + 2 ** (j + 1) - 2 + i] = 1.0
            u = yi - xi
            g = rotation_map(u / np.linalg.norm(u), e, 1.0 / a)
            rel = src - xi
            moved = g.apply(rel) + xi
            dist = np.linalg.norm(rel, axis=1)
            act = (dist > 0.75 * a) & (dist < 2.0 * a)
            img[act] = moved[act]
            annuli.append((xi, 0.75 * a, 2.0 * a))
            trow.append(row_of(ty))
            crow.append(row_of(t))
        targets.append(tuple(trow))
        center_rows.append(tuple(crow))
    disjoint = True
    for p in range(len(annuli)):
        for q in range(p + 1, len(annuli)):
            cp, lp, hp = annuli[p]
            cq, lq, hq = annuli[q]
            d = np.linalg.norm(src - cp, axis=1)
            e = np.linalg.norm(src - cq, axis=1)
            if np.any((d > lp) & (d < hp) & (e > lq) & (e < hq)):
                disjoint = False
            # geometric check: the smaller annulus sits inside the hole or outside the larger
            dc = float(np.linalg.norm(cp - cq))
            if hp >= hq:
                inside = dc + hq <= lp + 1e-12 * R
                outside = dc >= hp + hq - 1e-12 * R
            else:
                inside = dc + hp <= lq + 1e-12 * R
                outside = dc >= hp + hq - 1e-12 * R
            if not (inside or outside):
                disjoint = False
    if not disjoint:
        raise ValueError("rotation supports overlap")
    disp = float(np.linalg.norm(img - src, axis=1).max())
    haus = _hausdorff(img, src)
    centers = tuple(np.array([np.concatenate([x, np.zeros(n_extra)]) for _, x in lvl]) for lvl in level_centers)
    return NastyResult(
        PointSet(img),
        PointSet(src),
        depth,
        float(R),
        centers,
        tuple(targets),
        tuple(center_rows),
        disjoint,
        disp,
        haus,
    )


def _hausdorff(A: NDArray, B: NDArray) -> float:
    from scipy.spatial.distance import directed_hausdorff

    return float(max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0]))


def segment(n: int, length: float = 1.0) -> PointSet:
    """``n`` equispaced points of the segment ``[0, length] x {0}`` in the plane."""
    t = np.linspace(0.0, length, n)
    return PointSet(np.column_stack([t, np.zeros(n)]))


def generate(spec: GallerySpec) -> PointSet:
    """Build the point set described by ``spec``."""
    k = spec.kind
    if k == "orthogonal_sequence":
        return orthogonal_sequence(spec.n, spec.decay, spec.eps, spec.gamma, spec.include_origin)
    if k == "xstar":
        return xstar(spec.depth)
    if k == "rho_sequence":
        return rho_sequence(spec.n)
    if k == "product_example":
        return product_example(spec.n)
    if k == "cantor":
        return cantor(spec.depth)
    if k == "interval":
        return interval(spec.n)
    if k == "nasty_curve":
        return nasty_perturbation(segment(spec.n), spec.depth, spec.R).image
    raise ValueError(f"unknown gallery kind {k!r}")


# ---------------------------------------------------------------------------
# claims
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClaimReport:
    kind: str
    claim: str
    status: str  # passed | failed | trivial
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in ("passed", "trivial")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "claim": self.claim, "status": self.status, "passed": self.passed, "details": self.details}


def required_M_packing(X, pairs, s: float, alpha: float = 0.0, beta: float = 0.0) -> float:
    """Smallest ``M`` consistent with the greedy packing lower bounds on the given pairs.

    Any ``(M, s)`` bound must satisfy ``N_lower(r, rho) <= M (r/rho)**s
    slog(r)**beta slog(rho)**alpha``, so the maximum of the quotient is a
    lower bound on ``M``.
    """
    best = 0.0
    for r, rho in pairs:
        lower, _ = covering_number_bounds(X, r, rho)
        q = lower / ((r / rho) ** s * slog(r) ** beta * slog(rho) ** alpha)
        best = max(best, q)
    return best


def _dyadic_pairs_for(X, gap: int = 2) -> list[tuple[float, float]]:
    g = ScaleGrid.for_space(X)
    return [(2.0**-i, 2.0**-j) for i in g.scales for j in range(i + gap, g.j_max + 1)]


def _algebraic_claim(spec: GallerySpec, X: PointSet) -> ClaimReport:
    b = np.diag(X.coords[: spec.n, : spec.n]) if X.coords.shape[1] >= spec.n else None
    rows = []
    ok = True
    D = X.distances()
    for n in spec.test_ns:
        if 2 * n > spec.n:
            continue
        r_n = spec.eps * (n / 2.0) ** -spec.gamma
        rho_n = spec.eps * (4.0 * n) ** -spec.gamma
        # the ball around b_{n+1} e_{n+1} holds b_k e_k for n < k <= 2n, pairwise > 2 rho_n apart;
        # the packing is taken inside that block so later terms of the finite sequence do not mask growth
        block = np.arange(n, 2 * n)
        in_ball = bool(np.all(D[n, block] <= r_n))
        count = packing_count(D[np.ix_(block, block)], 0, r_n, 2.0 * rho_n) if in_ball else 0
        lower, upper = covering_number_bounds(D, r_n, rho_n)
        req = count / (r_n / rho_n)
        rows.append({"n": n, "r_n": r_n, "rho_n": rho_n, "block_in_ball": in_ball, "packing": count, "N_lower": lower, "N_upper": upper, "required_M_s1": req})
        ok &= count >= n and lower >= n
    grows = all(a["required_M_s1"] < c["required_M_s1"] for a, c in zip(rows, rows[1:]))
    status = "passed" if rows and ok and grows else "failed"
    return ClaimReport(
        spec.kind,
        "packing inside B(r_n) is at least n; required M diverges",
        status,
        {"rows": rows, "required_M_increasing": grows, "b_min": float(b.min()) if b is not None else None},
    )


def _xstar_claim(spec: GallerySpec, X: PointSet) -> ClaimReport:
    D = X.distances()
    vals = np.diag(X.coords)
    rows = []
    ok = True
    for j in range(1, spec.depth + 1):
        a = 4.0 ** -(2**j)
        idx = np.flatnonzero(vals == a)
        r, rho = math.sqrt(2.0) * a, a / 2.0
        count = packing_count(D, int(idx[0]), r, 2.0 * rho)
        rows.append({"j": j, "a": a, "block": len(idx), "packing": count, "required_M": count / (r / rho)})
        ok &= count >= len(idx)
    grows = all(p["required_M"] < q["required_M"] for p, q in zip(rows, rows[1:]))
    status = "passed" if ok and grows else "failed"
    return ClaimReport(spec.kind, "block j packs 2**(j-1) points at fixed r/rho", status, {"rows": rows, "required_M_increasing": grows})


def _rho_claim(spec: GallerySpec, X: PointSet) -> ClaimReport:
    D = X.distances()
    rho = 1.0 - 1.0 / np.arange(1, spec.n + 1)
    rows = []
    ok = True
    for n in spec.test_ns:
        if 2 * n > spec.n:
            continue
        count = packing_count(D, 0, rho[2 * n - 1], rho[n - 1])
        rows.append({"n": n, "r": float(rho[2 * n - 1]), "separation": float(rho[n - 1]), "packing": count})
        ok &= count >= n
    fit = homogeneity_fit(D, ScaleGrid(0, 8), 0.0, 0.0, local_cutoff=0.5)
    local_small = fit.s_hat <= 0.5
    status = "passed" if rows and ok and local_small else "failed"
    return ClaimReport(
        spec.kind,
        "global packing grows with n while the local fit is small",
        status,
        {"rows": rows, "local_s_hat": fit.s_hat, "local_residual": fit.residual_rms, "local_pairs": fit.scale_pairs_used},
    )


def _fit_pair(X: PointSet, grid: ScaleGrid | None = None) -> tuple[float, float]:
    s_x = homogeneity_fit(X, grid).s_hat
    s_d = homogeneity_fit(difference_set(X), grid).s_hat
    return s_x, s_d


def _orthogonal_claim(spec: GallerySpec, X: PointSet) -> ClaimReport:
    s_x, s_d = _fit_pair(X)
    ok = s_d <= 2.0 * s_x + 0.5
    return ClaimReport(
        spec.kind,
        "s_hat(X-X) <= 2 s_hat(X) + 0.5",
        "passed" if ok else "failed",
        {"s_hat_X": s_x, "s_hat_XmX": s_d},
    )


def _product_claim(spec: GallerySpec, X: PointSet) -> ClaimReport:
    s_x, s_d = _fit_pair(X)
    ok = s_x <= 0.5
    return ClaimReport(
        spec.kind,
        "s_hat(X) small; s_hat(X-X) grows with n",
        "passed" if ok else "failed",
        {"n": spec.n, "s_hat_X": s_x, "s_hat_XmX": s_d},
    )


def product_sweep(ns=(3, 7, 15)) -> dict:
    """Fits of the product example and its difference set over several ``n``.

    Every fit uses the scale grid of the largest difference set, so the
    sets (which are nested in ``n``) are compared on the same pairs.
    """
    ns = sorted(ns)
    grid = ScaleGrid.for_space(difference_set(product_example(ns[-1])))
    rows = []
    for n in ns:
        s_x, s_d = _fit_pair(product_example(n), grid)
        rows.append({"n": n, "s_hat_X": s_x, "s_hat_XmX": s_d})
    increasing = all(a["s_hat_XmX"] < b["s_hat_XmX"] for a, b in zip(rows, rows[1:]))
    return {
        "grid": [grid.j_min, grid.j_max],
        "rows": rows,
        "XmX_increasing": increasing,
        "X_small": all(r["s_hat_X"] <= 0.5 for r in rows),
    }


def _fractal_claim(spec: GallerySpec, X: PointSet, target: float, lo: float, hi: float) -> ClaimReport:
    fit = homogeneity_fit(X)
    ok = lo <= fit.s_hat <= hi
    return ClaimReport(
        spec.kind,
        f"s_hat within [{lo}, {hi}] of the known dimension {target:.4f}",
        "passed" if ok else "failed",
        {"s_hat": fit.s_hat, "target": target, "residual_rms": fit.residual_rms},
    )


def nasty_required_M(result: NastyResult, s: float = 1.0) -> list[dict]:
    """Packing-based required ``M`` on the part of ``phi(X) - phi(X)`` built from levels ``<= J``.

    The vectors ``a_j e_ij`` are formed from image rows ``x_i + a_j e_ij``
    minus ``x_i``; together with 0 they form a subset of the difference set,
    so every packing found is also a packing of the full difference set.
    """
    Y = result.image.coords
    out = []
    vecs = [np.zeros(Y.shape[1])]
    for J in range(result.depth + 1):
        for t, c in zip(result.targets[J], result.center_rows[J]):
            vecs.append(Y[t] - Y[c])
        Z = PointSet(np.array(vecs))
        pairs = _dyadic_pairs_for(Z.distances(), gap=2)
        out.append({"J": J, "points": Z.n, "required_M": required_M_packing(Z.distances(), pairs, s)})
    return out


def _nasty_claim(spec: GallerySpec) -> ClaimReport:
    res = nasty_perturbation(segment(spec.n), spec.depth, spec.R)
    req = nasty_required_M(res)
    grows = all(a["required_M"] < b["required_M"] for a, b in zip(req, req[1:]))
    ok = res.supports_disjoint and res.max_displacement <= spec.R and res.hausdorff <= spec.R and (grows or spec.depth == 0)
    return ClaimReport(
        spec.kind,
        "disjoint supports, displacement at most R, required M grows with depth",
        "passed" if ok else "failed",
        {**res.to_dict(), "required_M": req, "required_M_increasing": grows},
    )


def verify_claim(spec: GallerySpec) -> ClaimReport:
    """Run the check associated with the kind of ``spec``."""
    if spec.kind != "nasty_curve":
        X = generate(spec)
        if X.n == 1:
            return ClaimReport(spec.kind, "single point", "trivial", {})
    if spec.kind == "orthogonal_sequence":
        if spec.decay == "algebraic":
            return _algebraic_claim(spec, X)
        return _orthogonal_claim(spec, X)
    if spec.kind == "xstar":
        return _xstar_claim(spec, X)
    if spec.kind == "rho_sequence":
        return _rho_claim(spec, X)
    if spec.kind == "product_example":
        return _product_claim(spec, X)
    if spec.kind == "cantor":
        return _fractal_claim(spec, X, math.log(2) / math.log(3), 0.55, 0.72)
    if spec.kind == "interval":
        return _fractal_claim(spec, X, 1.0, 0.8, 1.2)
    return _nasty_claim(spec)


__all__ = [
    "GallerySpec",
    "ClaimReport",
    "RotationMap",
    "NastyResult",
    "generate",
    "verify_claim",
    "rotation_map",
    "nasty_perturbation",
    "nasty_required_M",
    "required_M_packing",
    "product_sweep",
    "orthogonal_sequence",
    "xstar",
    "xstar_values",
    "rho_sequence",
    "product_example",
    "cantor",
    "interval",
    "segment",
    "psi",
    "smoothstep",
]
