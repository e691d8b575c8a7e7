"""Nested subspaces spanned by net centers of dyadic shells of a difference set.

The shell ``j`` of a set ``Z`` is ``{z : 2**-(j+1) <= |z| <= 2**-j}``. A
``2**-(j+3)``-net of the shell is taken and its centers are added to the
span. Level ``n`` of the chain is the span of the centers of every shell
``j <= n``; a shell point lies within ``|z| / 4`` of a center in ``U_n``
as soon as ``|z| >= 2**-n``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..covering import fps_points
from ..metric_core import PointSet, vector_norms

ORTHO_TOL = 1e-10
DROP_TOL = 1e-10
SHELL_RATIO = 1.0 / 8.0
QUARTER = 1.0 / 4.0


class ChainError(AssertionError):
    """A constructed chain fails its defining inequality."""

    def __init__(self, message: str, witness: NDArray | None = None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class SubspaceChain:
    """Nested subspaces ``U_n`` stored as prefixes of one orthonormal basis.

    Attributes
    ----------
    basis : ndarray, shape (ambient, d)
        Orthonormal columns; ``U_n`` is spanned by the first ``dims[i]``
        columns where ``levels[i] == n``.
    levels : tuple of int
        Dyadic levels ``n`` in increasing order.
    dims : tuple of int
        Nondecreasing dimensions ``d_n``.
    source : str
        What the chain was built from, e.g. ``"X-X"``.
    norm_kind : str
        Norm used for shells and nets.
    """

    basis: NDArray
    levels: tuple[int, ...]
    dims: tuple[int, ...]
    source: str = "X-X"
    norm_kind: str = "euclidean"

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def k_max(self) -> int:
        return len(self.levels)

    def dim_at(self, n: int) -> int:
        if not self.levels or n < self.levels[0]:
            return 0
        if n >= self.levels[-1]:
            return self.dims[-1]
        return self.dims[self.levels.index(n)]

    def basis_at(self, n: int) -> NDArray:
        return self.basis[:, : self.dim_at(n)]

    def project(self, n: int, Z: NDArray) -> NDArray:
        """Orthogonal projection of the rows of ``Z`` onto ``U_n``."""
        Q = self.basis_at(n)
        return (Z @ Q) @ Q.T

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.basis).tobytes())
        h.update(repr((self.levels, self.dims, self.norm_kind)).encode())
        return h.hexdigest()

    def verify(self) -> None:
        """Orthonormality to ``1e-10`` and nondecreasing dimensions."""
        Q = self.basis
        if Q.shape[1]:
            err = np.abs(Q.T @ Q - np.eye(Q.shape[1])).max()
            if err > ORTHO_TOL:
                raise ChainError(f"basis not orthonormal (error {err:.3e})")
        if any(a > b for a, b in zip(self.dims, self.dims[1:])):
            raise ChainError("chain dimensions decrease")

    def growth_table(self) -> list[dict]:
        return [{"level": n, "dim": d} for n, d in zip(self.levels, self.dims)]


class _Orthonormalizer:
    """Incremental modified Gram-Schmidt with one reorthogonalization pass."""

    def __init__(self, ambient: int):
        self.Q = np.zeros((ambient, ambient))
        self.d = 0

    @property
    def full(self) -> bool:
        return self.d == self.Q.shape[0]

    def add(self, v: NDArray) -> bool:
        if self.full:
            return False
        norm0 = float(np.linalg.norm(v))
        if norm0 == 0.0:
            return False
        w = v.astype(float, copy=True)
        Q = self.Q[:, : self.d]
        for _ in range(2):
            w -= Q @ (Q.T @ w)
        nw = float(np.linalg.norm(w))
        if nw <= DROP_TOL * norm0:
            return False
        self.Q[:, self.d] = w / nw
        self.d += 1
        return True


def _shell_index(norms: NDArray) -> NDArray:
    """Shell ``j`` with ``2**-(j+1) <= |z| <= 2**-j`` (lower shell on ties)."""
    j = np.floor(-np.log2(norms)).astype(np.int64)
    j = np.where(2.0 ** (-j) < norms, j - 1, j)
    j = np.where(2.0 ** (-(j + 1)) > norms, j + 1, j)
    return j


def _binding_level(norms: NDArray) -> NDArray:
    """Smallest ``n`` with ``2**-n <= |z|``."""
    n = np.ceil(-np.log2(norms)).astype(np.int64)
    n = np.where(2.0 ** (-n) > norms, n + 1, n)
    n = np.where(2.0 ** (-(n - 1)) <= norms, n - 1, n)
    return n


@dataclass(frozen=True)
class _ShellBuild:
    chain: SubspaceChain
    vectors: NDArray
    norms: NDArray
    shell: NDArray
    center_gap: NDArray  # distance to nearest center of own shell, inf if not computed


def _build(Z: PointSet, levels: tuple[int, int] | None, source: str) -> _ShellBuild:
    coords = Z.coords
    norms = vector_norms(coords, Z.norm_kind)
    keep = norms > 0
    vecs = coords[keep]
    nz = norms[keep]
    ambient = coords.shape[1]
    if vecs.shape[0] == 0:
        chain = SubspaceChain(np.zeros((ambient, 0)), (), (), source, Z.norm_kind)
        return _ShellBuild(chain, vecs, nz, np.zeros(0, dtype=int), np.zeros(0))
    shell = _shell_index(nz)
    top = _binding_level(nz)
    lo = int(shell.min()) if levels is None else levels[0]
    hi = int(top.max()) if levels is None else levels[1]
    ortho = _Orthonormalizer(ambient)
    gap = np.full(len(nz), np.inf)
    level_list, dim_list = [], []
    for n in range(lo, hi + 1):
        if not ortho.full:
            idx = np.flatnonzero(shell == n) if n > lo else np.flatnonzero(shell <= n)
            if idx.size:
                eps = 2.0 ** -(n + 3)
                centers, gap[idx] = fps_points(vecs[idx], eps, Z.norm_kind, return_gaps=True)
                for c in centers:
                    ortho.add(vecs[idx[c]])
        level_list.append(n)
        dim_list.append(ortho.d)
    basis = ortho.Q[:, : ortho.d].copy()
    basis.setflags(write=False)
    chain = SubspaceChain(basis, tuple(level_list), tuple(dim_list), source, Z.norm_kind)
    return _ShellBuild(chain, vecs, nz, shell, gap)


def build_chain(Z: PointSet, levels: tuple[int, int] | None = None, source: str = "X-X") -> SubspaceChain:
    """Shell-net chain in the norm of ``Z`` without the verification step."""
    return _build(Z, levels, source).chain


def _levels_of(grid) -> tuple[int, int] | None:
    if grid is None:
        return None
    return (grid.j_min, grid.j_max)


def shell_subspaces(Z: PointSet, grid=None, source: str = "X-X") -> SubspaceChain:
    """Euclidean shell chain with the one-eighth projection check.

    Every nonzero ``z`` with ``|z| >= 2**-n`` must satisfy
    ``|P_n z| >= |z| / 8``; it suffices to check the smallest such ``n``
    because ``U_n`` grows with ``n``.

    Raises
    ------
    ValueError
        If ``Z`` is not Euclidean.
    ChainError
        If some difference fails the check; the offending vector is attached.
    """
    if Z.norm_kind != "euclidean":
        raise ValueError("shell_subspaces needs a Euclidean point set")
    b = _build(Z, _levels_of(grid), source)
    chain = b.chain
    chain.verify()
    ratios = shell_ratios(chain, b.vectors)
    bad = ratios < SHELL_RATIO
    if np.any(bad):
        i = int(np.argmin(ratios))
        raise ChainError(f"projection ratio {ratios[i]:.4f} below 1/8", b.vectors[i])
    return chain


def shell_ratios(chain: SubspaceChain, vectors: NDArray) -> NDArray:
    """``|P_n z| / |z|`` at the smallest level ``n`` with ``|z| >= 2**-n``.

    Vectors whose binding level lies below the chain are measured against
    the empty subspace and give 0.
    """
    norms = np.linalg.norm(vectors, axis=1)
    keep = norms > 0
    vectors, norms = vectors[keep], norms[keep]
    if vectors.shape[0] == 0:
        return np.ones(0)
    levels = _binding_level(norms)
    coef = vectors @ chain.basis
    cum = np.concatenate([np.zeros((len(norms), 1)), np.cumsum(coef**2, axis=1)], axis=1)
    dims = np.array([chain.dim_at(int(n)) for n in levels])
    proj = np.sqrt(np.maximum(cum[np.arange(len(norms)), dims], 0.0))
    return proj / norms


@dataclass(frozen=True)
class QuarterReport:
    chain: SubspaceChain
    checked: int
    violations: int
    worst_ratio: float
    witness: NDArray | None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "checked": self.checked,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
            "passed": self.passed,
            "growth": self.chain.growth_table(),
        }


def banach_quarter_check(Z: PointSet, grid=None) -> QuarterReport:
    """Sup-norm shell chain with ``dist(z, U_n) <= |z| / 4`` for ``|z| >= 2**-n``.

    The distance to ``U_n`` is bounded above by the distance to the nearest
    net center of the shell of ``z``, which is one of the spanning vectors.
    Once the chain is the whole ambient space the distance is 0.
    """
    if Z.norm_kind != "sup":
        raise ValueError("banach_quarter_check needs a sup-norm point set")
    b = _build(Z, _levels_of(grid), "X-X")
    chain = b.chain
    chain.verify()
    if b.vectors.shape[0] == 0:
        return QuarterReport(chain, 0, 0, 0.0, None)
    levels = _binding_level(b.norms)
    in_span = (b.shell <= levels) & (levels >= chain.levels[0])
    full = np.array([chain.dim_at(int(n)) == chain.ambient_dim for n in levels])
    dist = np.where(full, 0.0, np.where(in_span, b.center_gap, np.inf))
    ratio = dist / b.norms
    bad = ratio > QUARTER
    worst = int(np.argmax(ratio))
    return QuarterReport(
        chain,
        int(len(ratio)),
        int(np.count_nonzero(bad)),
        float(ratio[worst]),
        b.vectors[worst] if bad.any() else None,
    )


def deviation_slope(chain: SubspaceChain) -> float:
    """Slope of ``log d_n`` against ``n log 2`` over levels with ``d_n > 0``."""
    rows = [(n, d) for n, d in zip(chain.levels, chain.dims) if d > 0]
    if len(rows) < 2:
        return 0.0
    n = np.array([r[0] for r in rows], dtype=float) * math.log(2.0)
    y = np.log([r[1] for r in rows])
    A = np.column_stack([n, np.ones_like(n)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])
