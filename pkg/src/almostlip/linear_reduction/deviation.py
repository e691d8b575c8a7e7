"""Lipschitz graphs over chain subspaces, the reverse projection check and thickness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..covering import fps_points
from ..metric_core import PointSet
from .subspaces import ChainError, SubspaceChain, deviation_slope


@dataclass(frozen=True)
class LipGraphApprox:
    """Graph of ``phi_k : U_k -> U_k^perp`` fitted on a ``2**-k`` net of ``X``.

    ``phi_k(P_k x) = (I - P_k) x`` on the net and is extended elsewhere by a
    coordinatewise McShane formula followed by ``I - P_k``. Each coordinate
    is ``m``-Lipschitz, so the extension is at most ``m * sqrt(ambient)``
    Lipschitz; that constant is recorded as ``extension_constant``.
    """

    k: int
    m: float
    basis: NDArray  # orthonormal basis of U_k, ambient x d_k
    net_indices: tuple[int, ...]
    net_u: NDArray  # P_k x for net points, in ambient coordinates
    net_v: NDArray  # (I - P_k) x for net points
    net_lipschitz: float
    epsilon_k: float
    vertical_max: float
    extension_constant: float
    method: str = "mcshane-coordinatewise"

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, Z: NDArray) -> NDArray:
        return (Z @ self.basis) @ self.basis.T

    def phi(self, U: NDArray) -> NDArray:
        """Extended map on points of ``U_k`` given in ambient coordinates."""
        U = np.atleast_2d(U)
        out = np.empty((U.shape[0], self.net_v.shape[1]))
        for s in range(0, U.shape[0], 512):
            blk = U[s : s + 512]
            dist = np.linalg.norm(blk[:, None, :] - self.net_u[None, :, :], axis=2)
            out[s : s + 512] = np.min(self.net_v[None, :, :] + self.m * dist[:, :, None], axis=1)
        return out - self.project(out)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "dim": self.dim,
            "net_size": len(self.net_indices),
            "net_lipschitz": self.net_lipschitz,
            "epsilon_k": self.epsilon_k,
            "vertical_max": self.vertical_max,
            "extension_constant": self.extension_constant,
            "method": self.method,
        }


def lipschitz_graph_approx(X: PointSet, chain: SubspaceChain, m: float = 8.0, k: int = 0) -> LipGraphApprox:
    """Graph approximation of ``X`` over ``U_k`` from a ``2**-k`` net.

    Raises
    ------
    ChainError
        If some pair of net points has ``|(I-P)(x-y)| > m |P(x-y)|``; the
        offending pair of indices is attached as the witness.
    """
    if X.norm_kind != "euclidean":
        raise ValueError("graph approximations need a Euclidean point set")
    coords = X.coords
    Q = chain.basis_at(k)
    net = fps_points(coords, 2.0**-k)
    Pc = (coords @ Q) @ Q.T
    u = Pc[net]
    v = coords[net] - u
    lip = 0.0
    if len(net) > 1:
        du = np.linalg.norm(u[:, None, :] - u[None, :, :], axis=2)
        dv = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)
        iu, ju = np.triu_indices(len(net), k=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(du[iu, ju] > 0, dv[iu, ju] / du[iu, ju], np.where(dv[iu, ju] > 0, np.inf, 0.0))
        worst = int(np.argmax(ratio))
        lip = float(ratio[worst])
        if lip > m * (1 + 1e-12):
            raise ChainError(
                f"net Lipschitz ratio {lip:.4f} exceeds m = {m}",
                np.array([net[iu[worst]], net[ju[worst]]]),
            )
    approx = LipGraphApprox(
        k=k,
        m=float(m),
        basis=Q,
        net_indices=tuple(int(i) for i in net),
        net_u=u,
        net_v=v,
        net_lipschitz=lip,
        epsilon_k=0.0,
        vertical_max=0.0,
        extension_constant=float(m) * math.sqrt(coords.shape[1]),
    )
    # distance to the graph is at most the distance to the nearest net point,
    # and at most the vertical gap above P x
    vertical = np.linalg.norm((coords - Pc) - approx.phi(Pc), axis=1)
    to_net = np.min(np.linalg.norm(coords[:, None, :] - coords[None, net, :], axis=2), axis=1)
    eps = float(np.minimum(vertical, to_net).max())
    return LipGraphApprox(**{**approx.__dict__, "epsilon_k": eps, "vertical_max": float(vertical.max())})


def reverse_constants(m: float) -> tuple[float, int, float]:
    """``(l_m, n, c_m)`` with ``l_m**2 = 2 max(1, m**2)``, ``3 l_m <= 2**n`` minimal, ``c_m = 1/(3 sqrt(1+m**2))``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    l_m = math.sqrt(2.0 * max(1.0, m * m))
    n = max(0, math.ceil(math.log2(3.0 * l_m)))
    while 2.0 ** (n - 1) >= 3.0 * l_m and n > 0:
        n -= 1
    while 2.0**n < 3.0 * l_m:
        n += 1
    return l_m, n, 1.0 / (3.0 * math.sqrt(1.0 + m * m))


@dataclass(frozen=True)
class ReverseReport:
    m: float
    l_m: float
    n: int
    c_m: float
    levels: tuple[int, ...]
    pairs_checked: int
    violations: int
    worst_ratio: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {**self.__dict__, "levels": list(self.levels), "passed": self.passed}


def reverse_projection_check(X: PointSet, approxes, m: float = 8.0) -> ReverseReport:
    """Check ``|P_{k+n}(x - y)| >= c_m |x - y|`` whenever ``|x - y| >= 2**-k``.

    ``approxes`` maps levels to ``LipGraphApprox`` objects (or is a sequence
    of them); the subspace of level ``k + n`` must be present for every
    checked ``k``.
    """
    l_m, n, c_m = reverse_constants(m)
    if not isinstance(approxes, dict):
        approxes = {a.k: a for a in approxes}
    coords = X.coords
    N = coords.shape[0]
    iu, ju = np.triu_indices(N, k=1)
    diffs = coords[iu] - coords[ju]
    norms = np.linalg.norm(diffs, axis=1)
    checked = 0
    bad = 0
    worst = math.inf
    levels = []
    for k in sorted(approxes):
        if k + n not in approxes:
            continue
        levels.append(k)
        Q = approxes[k + n].basis
        sel = norms >= 2.0**-k
        if not sel.any():
            continue
        proj = np.linalg.norm(diffs[sel] @ Q, axis=1)
        ratio = proj / norms[sel]
        checked += int(sel.sum())
        bad += int(np.count_nonzero(ratio < c_m))
        worst = min(worst, float(ratio.min()))
    if not levels and approxes:
        raise KeyError(f"no level k with k + {n} also present")
    return ReverseReport(float(m), l_m, n, c_m, tuple(levels), checked, bad, worst if checked else 1.0)


def lipschitz_deviation_estimate(chain: SubspaceChain) -> dict:
    """Bound table ``delta_m(X, 2**-k) <= d_k`` and the slope estimate of ``dev_m``."""
    return {
        "table": [{"k": k, "delta_bound": d} for k, d in zip(chain.levels, chain.dims)],
        "dev_estimate": deviation_slope(chain),
    }


@dataclass(frozen=True)
class ThicknessTable:
    epsilons: tuple[float, ...]
    dims: tuple[int, ...]
    tau: float
    polylog_exponent: float

    def to_dict(self) -> dict:
        return {
            "rows": [{"epsilon": e, "d_upper": d} for e, d in zip(self.epsilons, self.dims)],
            "tau": self.tau,
            "polylog_exponent": self.polylog_exponent,
        }


def thickness_estimate(X: PointSet, epsilons) -> ThicknessTable:
    """Smallest rank ``k`` of a linear subspace within ``eps`` of every point.

    The subspace is spanned by the top right singular vectors of the
    (uncentered) coordinate matrix, so each entry is an upper bound on the
    true minimal dimension. ``tau`` is the slope of ``log d`` against
    ``log(1/eps)`` and ``polylog_exponent`` the slope against
    ``log log(e + 1/eps)``.
    """
    if X.norm_kind != "euclidean":
        raise ValueError("thickness needs a Euclidean point set")
    A = X.coords
    _, _, Vt = np.linalg.svd(A, full_matrices=False)
    total = np.einsum("ij,ij->i", A, A)
    coef = A @ Vt.T
    cum = np.concatenate([np.zeros((A.shape[0], 1)), np.cumsum(coef**2, axis=1)], axis=1)
    resid = np.sqrt(np.maximum(total[:, None] - cum, 0.0)).max(axis=0)
    eps = tuple(float(e) for e in epsilons)
    dims = []
    for e in eps:
        ok = np.flatnonzero(resid <= e)
        dims.append(int(ok[0]) if ok.size else int(len(resid) - 1))
    tau = pexp = 0.0
    rows = [(e, d) for e, d in zip(eps, dims) if d > 0]
    if len(rows) >= 2:
        e = np.array([r[0] for r in rows])
        d = np.log([r[1] for r in rows])
        tau = float(np.polyfit(np.log(1.0 / e), d, 1)[0])
        pexp = float(np.polyfit(np.log(np.log(math.e + 1.0 / e)), d, 1)[0])
    return ThicknessTable(eps, tuple(dims), tau, pexp)
