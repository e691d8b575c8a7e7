"""Factorization ``L = M P`` of a linear map and the trace obstruction for linear maps.

If ``X - X`` contains ``alpha_m e_m`` for an orthonormal family of ``n``
vectors and ``L`` has rank at most ``k``, then with ``P`` the projection
onto the row space

    n * min_m |L e_m|**2 <= sum_m |L e_m|**2 <= |L|**2 * sum_m |P e_m|**2 <= k |L|**2,

so the ratio ``|L| / min_m |L e_m|`` is at least ``sqrt(n / k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

RANK_RTOL = 1e-12
RECON_TOL = 1e-10
ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class LinearDecomposition:
    """``L = M @ P`` with ``P = V V^T`` the projection onto the row space.

    ``M_range`` is ``L`` restricted to ``U`` in the basis ``V`` and written
    in the orthonormal basis ``W`` of the range, so it is square and
    invertible.
    """

    P: NDArray
    V: NDArray  # ambient x r, orthonormal basis of U
    W: NDArray  # N x r, orthonormal basis of the range
    M: NDArray  # N x r, L restricted to U in the basis V
    M_range: NDArray  # r x r
    rank: int
    reconstruction_error: float

    def apply_M(self, u: NDArray) -> NDArray:
        """``M`` on vectors of ``U`` given in ambient coordinates."""
        return (u @ self.V) @ self.M.T


def decompose_linear(L: NDArray) -> LinearDecomposition:
    """Row-space projection and invertible factor of ``L``.

    A map that is not onto is first pruned to its range, so ``rank`` may be
    smaller than the number of rows.

    Raises
    ------
    ValueError
        If ``L`` is the zero map or fails the reconstruction checks.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    U, s, Vt = np.linalg.svd(L, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("zero map has no decomposition")
    r = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    V = Vt[:r].T
    W = U[:, :r]
    P = V @ V.T
    M = L @ V
    M_range = W.T @ M
    err = float(np.abs(L - M @ V.T).max())
    if err > RECON_TOL * max(1.0, s[0]):
        raise ValueError(f"reconstruction error {err:.3e}")
    sv = np.linalg.svd(M_range, compute_uv=False)
    if sv.min() <= RANK_RTOL * sv.max():
        raise ValueError("restricted map is not invertible")
    return LinearDecomposition(P, V, W, M, M_range, r, err)


@dataclass(frozen=True)
class MapCertificate:
    trace_sum: float
    rank: int
    operator_norm: float
    min_direction_gain: float
    distortion: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ImpossibilityCertificate:
    n: int
    k: int
    bound: float
    tolerance: float
    maps: tuple[MapCertificate, ...]

    @property
    def trace_ok(self) -> bool:
        return all(m.trace_sum <= m.rank + 1e-9 and m.rank <= self.k for m in self.maps)

    @property
    def min_distortion(self) -> float:
        return min(m.distortion for m in self.maps) if self.maps else math.inf

    @property
    def passed(self) -> bool:
        return self.trace_ok and self.min_distortion >= self.bound * (1.0 - self.tolerance)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "bound": self.bound,
            "threshold": self.bound * (1.0 - self.tolerance),
            "trace_ok": self.trace_ok,
            "min_distortion": self.min_distortion,
            "passed": self.passed,
            "maps": [m.to_dict() for m in self.maps],
        }


def linear_impossibility_certificate(
    directions: NDArray,
    k: int,
    maps,
    tolerance: float = 0.05,
) -> ImpossibilityCertificate:
    """Audit candidate linear maps against the trace bound.

    Parameters
    ----------
    directions : ndarray, shape (n, ambient)
        Orthonormal rows ``e_m`` with ``alpha_m e_m`` in ``X - X``.
    k : int
        Target dimension.
    maps : iterable of ndarray, each shape (k', ambient) with ``k' <= k``
    tolerance : float
        Relative slack on the ``sqrt(n / k)`` bound.

    Notes
    -----
    The distortion of a map is ``|L| / min_m |L e_m|``: the operator norm
    bounds the upper Lipschitz constant and ``1 / min_m |L e_m|`` is the
    best lower constant available on the directions.
    """
    E = np.atleast_2d(np.asarray(directions, dtype=float))
    n = E.shape[0]
    if np.abs(E @ E.T - np.eye(n)).max() > ORTHO_TOL:
        raise ValueError("directions are not orthonormal within 1e-9")
    certs = []
    for L in maps:
        L = np.atleast_2d(np.asarray(L, dtype=float))
        if L.shape[0] > k:
            raise ValueError(f"map has {L.shape[0]} rows, more than k = {k}")
        dec = decompose_linear(L)
        PE = E @ dec.V
        trace_sum = float(np.sum(PE**2))
        gains = np.linalg.norm(E @ L.T, axis=1)
        op = float(np.linalg.norm(L, 2))
        g = float(gains.min())
        certs.append(MapCertificate(trace_sum, dec.rank, op, g, op / g if g > 0 else math.inf))
    return ImpossibilityCertificate(n, int(k), math.sqrt(n / k), float(tolerance), tuple(certs))


def comparator_distortion(exponents: NDArray | None = None, n: int = 36) -> dict:
    """Distortion of ``2**-m e_m -> 2**-m`` on ``{2**-m e_m}``.

    Returns the extreme ratios ``|phi(x) - phi(y)| / |x - y|`` over all pairs
    and their quotient.
    """
    m = np.arange(1, n + 1, dtype=float) if exponents is None else np.asarray(exponents, dtype=float)
    a = 2.0**-m
    i, j = np.triu_indices(len(a), k=1)
    out = np.abs(a[i] - a[j])
    d = np.sqrt(a[i] ** 2 + a[j] ** 2)
    ratio = out / d
    return {
        "ratio_min": float(ratio.min()),
        "ratio_max": float(ratio.max()),
        "distortion": float(ratio.max() / ratio.min()),
        "lower_constant": 0.25,
        "upper_constant": 1.0,
        "within_constants": bool(ratio.min() >= 0.25 and ratio.max() <= 1.0),
    }
