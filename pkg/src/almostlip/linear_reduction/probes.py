"""Random linear maps built from a subspace chain, and their audits.

Component ``n`` of a probe map is the functional

    phi_n = C_zeta * sum_k k**(-1 - zeta) * omega_{nk},

with ``omega_{nk}`` uniform in the unit ball of the ``k``-th chain level and
``C_zeta`` normalizing the truncated weights to sum to one. Every component
therefore has norm at most one and the map is ``sqrt(N)``-Lipschitz.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.special import betainc

from ..metric_core import FiniteMetricSpace, PointSet, difference_set, kuratowski_embed
from .report import DistortionReport, distortion_report, holder_exponent_fit
from .subspaces import SubspaceChain, build_chain, shell_subspaces

SMALLBALL_C = 2.0


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream; identical draws for identical seeds on any platform."""
    return np.random.Generator(np.random.Philox(int(seed)))


def uniform_ball(rng: np.random.Generator, dim: int, size: int) -> NDArray:
    """``size`` points uniform in the Euclidean unit ball of ``R**dim``."""
    g = rng.standard_normal((size, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    u = rng.random(size)
    return g * (u ** (1.0 / dim))[:, None]


def zeta_weights(k_max: int, zeta: float) -> NDArray:
    w = np.arange(1, k_max + 1, dtype=float) ** (-1.0 - zeta)
    return w / w.sum()


@dataclass(frozen=True)
class ProbeMap:
    N: int
    zeta: float
    k_max: int
    seed: int
    chain_digest: str
    matrix: NDArray  # N x ambient
    coefficient_norms: NDArray = field(repr=False)  # N x k_max, |omega_{nk}|

    def apply(self, coords: NDArray) -> NDArray:
        return np.asarray(coords) @ self.matrix.T

    @property
    def digest(self) -> str:
        h = hashlib.sha256(np.ascontiguousarray(self.matrix).tobytes())
        h.update(self.chain_digest.encode())
        return h.hexdigest()

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "zeta": self.zeta,
                "N": self.N,
                "k_max": self.k_max,
                "chain_digest": self.chain_digest,
                "matrix": self.matrix.tolist(),
            },
            sort_keys=True,
        )

    def operator_bound_holds(self) -> bool:
        rows = np.linalg.norm(self.matrix, axis=1)
        spec = np.linalg.norm(self.matrix, 2) if self.matrix.size else 0.0
        return bool(np.all(rows <= 1.0 + 1e-12) and spec <= math.sqrt(self.N) + 1e-9)


def sample_probe_map(chain: SubspaceChain, N: int, zeta: float = 1.0, seed: int = 0) -> ProbeMap:
    """Draw one probe map; levels of the chain are numbered ``k = 1, 2, ...``.

    Draws are made component by component and level by level from a single
    Philox stream, so the matrix depends only on the chain and the seed.
    """
    if N < 1:
        raise ValueError("target dimension N must be at least 1")
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    if chain.k_max == 0 or chain.dims[-1] == 0:
        raise ValueError("empty subspace chain")
    rng = make_rng(seed)
    K = chain.k_max
    w = zeta_weights(K, zeta)
    A = np.zeros((N, chain.ambient_dim))
    norms = np.zeros((N, K))
    for n in range(N):
        for k in range(K):
            d = chain.dims[k]
            if d == 0:
                continue
            omega = uniform_ball(rng, d, 1)[0]
            norms[n, k] = np.linalg.norm(omega)
            A[n] += w[k] * (chain.basis[:, :d] @ omega)
    A.setflags(write=False)
    norms.setflags(write=False)
    return ProbeMap(int(N), float(zeta), K, int(seed), chain.digest(), A, norms)


@dataclass(frozen=True)
class SmallBallEstimate:
    j: int
    eta: float
    ratio: float  # epsilon / |x|
    estimate: float
    stderr: float
    bound: float
    exact: float | None
    trials: int

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + 3.0 * self.stderr

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def smallball_exact(j: int, t: float) -> float:
    """``P(|omega . u| < t)`` for ``omega`` uniform in the unit ball of ``R**j``, ``|u| = 1``.

    The first coordinate of a uniform ball point has density proportional to
    ``(1 - s**2)**((j - 1) / 2)``, which gives a regularized incomplete beta
    function in ``t**2``.
    """
    if t >= 1.0:
        return 1.0
    return float(betainc(0.5, (j + 1) / 2.0, t * t))


def smallball_probability_mc(
    j: int,
    x: NDArray,
    eta: float,
    epsilon: float,
    trials: int = 100_000,
    seed: int = 0,
) -> SmallBallEstimate:
    """Monte-Carlo estimate of ``P(|eta + omega . x| < epsilon)`` over the unit ball.

    The bound checked is ``2 sqrt(j) epsilon / |x|``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != j:
        raise ValueError("x must have dimension j")
    nx = float(np.linalg.norm(x))
    if nx == 0:
        raise ValueError("x must be nonzero")
    if trials < 10_000:
        raise ValueError("at least 10^4 trials are required")
    rng = make_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        size = min(50_000, trials - done)
        omega = uniform_ball(rng, j, size)
        hits += int(np.count_nonzero(np.abs(eta + omega @ x) < epsilon))
        done += size
    p = hits / trials
    stderr = math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)
    ratio = epsilon / nx
    exact = smallball_exact(j, ratio) if eta == 0 else None
    return SmallBallEstimate(j, float(eta), ratio, p, stderr, SMALLBALL_C * math.sqrt(j) * ratio, exact, trials)


@dataclass(frozen=True)
class EmbedAuditResult:
    reports: tuple[DistortionReport, ...]
    chain: SubspaceChain
    N: int
    gamma: float
    zeta: float
    seeds: tuple[int, ...]

    @property
    def injective_fraction(self) -> float:
        return sum(r.injective for r in self.reports) / len(self.reports)

    @property
    def finite_L_fraction(self) -> float:
        return sum(math.isfinite(r.L_fit) for r in self.reports) / len(self.reports)

    @property
    def modulus_monotone_fraction(self) -> float:
        return sum(r.modulus_monotone for r in self.reports) / len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    def __len__(self) -> int:
        return len(self.reports)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "gamma": self.gamma,
            "zeta": self.zeta,
            "seeds": list(self.seeds),
            "chain": {"digest": self.chain.digest(), "growth": self.chain.growth_table()},
            "injective_fraction": self.injective_fraction,
            "finite_L_fraction": self.finite_L_fraction,
            "modulus_monotone_fraction": self.modulus_monotone_fraction,
            "reports": [r.to_dict() for r in self.reports],
        }


def chain_for(X: PointSet) -> SubspaceChain:
    """Shell chain of ``X - X`` in the norm of ``X``."""
    Z = difference_set(X)
    if X.norm_kind == "euclidean":
        return shell_subspaces(Z)
    return build_chain(Z)


def embed_and_audit(
    X: PointSet,
    N: int,
    gamma: float = 1.0,
    zeta: float = 1.0,
    seeds=range(20),
    chain: SubspaceChain | None = None,
) -> EmbedAuditResult:
    """Apply one probe map per seed to ``X`` and audit each image.

    Distances on ``X`` are taken in its own norm; images are Euclidean.
    """
    if chain is None:
        chain = chain_for(X)
    Dx = X.distances()
    reports = []
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    for s in seeds:
        pm = sample_probe_map(chain, N, zeta, s)
        Y = PointSet(pm.apply(X.coords), "euclidean")
        reports.append(distortion_report(Y.distances(), Dx, gamma, seed=s, map_id=pm.digest[:16]))
    return EmbedAuditResult(tuple(reports), chain, int(N), float(gamma), float(zeta), seeds)


def metric_pipeline(
    X: FiniteMetricSpace,
    N: int = 8,
    gamma: float = 1.0,
    zeta: float = 1.0,
    seeds=range(20),
    base_idx: int = 0,
) -> EmbedAuditResult:
    """Kuratowski embedding into the sup norm, then probe maps built from its differences.

    The embedding is isometric, so each report compares the final Euclidean
    image against the distances of ``X`` itself.
    """
    K = kuratowski_embed(X, base_idx)
    return embed_and_audit(K, N, gamma, zeta, seeds)


__all__ = [
    "metric_pipeline",
    "ProbeMap",
    "SmallBallEstimate",
    "EmbedAuditResult",
    "make_rng",
    "uniform_ball",
    "zeta_weights",
    "sample_probe_map",
    "smallball_exact",
    "smallball_probability_mc",
    "chain_for",
    "embed_and_audit",
    "holder_exponent_fit",
]
