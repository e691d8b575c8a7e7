"""Net-and-colouring embedding of a doubling-type metric space.

At scale ``j`` a maximal ``2**-j``-net is coloured so that centers closer
than ``12 * 2**-j`` differ in colour. The tent features

    tent_j(x)[c] = sum over centers a of colour c of max(2 - 2**j d(x, a), 0)

have disjoint supports for points with ``2**(2-j) < d <= 2**(3-j)``. Block
``j`` of the embedding is ``tent_{j+3}(x) - tent_{j+3}(a)``, weighted by
``2**-j / ((1 + |j|)**delta * M_{j+3})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist

from .covering import Net, ScaleGrid, _fps_matrix
from .linear_reduction.report import DistortionReport, distortion_report
from .metric_core import PointSet, as_distance_matrix

CONFLICT_FACTOR = 12.0
# any block satisfies |phi_j(x) - phi_j(y)| <= 8 M min(1, 2**j d)
B_THEORY = 8.0


@dataclass(frozen=True)
class ScaleColoring:
    j: int
    net: Net
    colors: NDArray  # colour of each net center, 0-based
    M: int


@dataclass(frozen=True)
class ColoringAtlas:
    grid: ScaleGrid
    scales: dict[int, ScaleColoring]
    dist: NDArray

    def M(self, j: int) -> int:
        return self.scales[j].M

    def summary(self) -> list[dict]:
        return [{"j": j, "net_size": s.net.size, "M": s.M} for j, s in sorted(self.scales.items())]


def embedding_scale_range(X) -> tuple[int, int]:
    """Block scales ``[floor(-log2 diam) - 1, ceil(-log2 sep) + 3]``."""
    D = as_distance_matrix(X)
    n = D.shape[0]
    if n < 2:
        return 0, 0
    off = D[~np.eye(n, dtype=bool)]
    return math.floor(-math.log2(off.max())) - 1, math.ceil(-math.log2(off.min())) + 3


def atlas_grid(X) -> ScaleGrid:
    """Scales the atlas must cover so that every block ``j`` can use ``j + 3``."""
    lo, hi = embedding_scale_range(X)
    return ScaleGrid(lo + 3, hi + 3)


def _greedy_coloring(sub: NDArray, radius: float) -> NDArray:
    k = sub.shape[0]
    colors = np.full(k, -1, dtype=np.int64)
    for i in range(k):
        taken = set(colors[: i][sub[i, :i] < radius].tolist())
        c = 0
        while c in taken:
            c += 1
        colors[i] = c
    return colors


def build_coloring_atlas(X, grid: ScaleGrid | None = None) -> ColoringAtlas:
    """Net and first-fit colouring at every scale of the grid.

    Centers are coloured in net-construction order with the smallest colour
    not used by an earlier center within ``12 * 2**-j``. The colouring is
    checked exhaustively before returning.
    """
    D = np.array(as_distance_matrix(X), dtype=float)
    D.setflags(write=False)
    if grid is None:
        grid = atlas_grid(D)
    scales = {}
    for j in grid.scales:
        eps = 2.0**-j
        centers = _fps_matrix(D, eps)
        net = Net(tuple(centers), eps, j)
        sub = D[np.ix_(centers, centers)]
        radius = CONFLICT_FACTOR * eps
        colors = _greedy_coloring(sub, radius)
        same = colors[:, None] == colors[None, :]
        np.fill_diagonal(same, False)
        if np.any(same & (sub < radius)):
            raise AssertionError(f"colouring conflict at scale {j}")
        M = int(colors.max()) + 1
        if len(np.unique(colors)) != M:
            raise AssertionError(f"colour indices not contiguous at scale {j}")
        colors.setflags(write=False)
        scales[j] = ScaleColoring(j, net, colors, M)
    return ColoringAtlas(grid, scales, D)


def _tent_matrix(atlas: ColoringAtlas, j: int) -> NDArray:
    sc = atlas.scales[j]
    c = np.asarray(sc.net.center_indices)
    tents = np.maximum(2.0 - 2.0**j * atlas.dist[:, c], 0.0)
    onehot = np.zeros((len(c), sc.M))
    onehot[np.arange(len(c)), sc.colors] = 1.0
    return tents @ onehot


def tent_features(atlas: ColoringAtlas, j: int, x: int) -> NDArray:
    """Colour-indexed tent vector of point ``x`` at scale ``j``."""
    if j not in atlas.scales:
        raise KeyError(f"scale {j} not in atlas")
    sc = atlas.scales[j]
    c = np.asarray(sc.net.center_indices)
    tents = np.maximum(2.0 - 2.0**j * atlas.dist[x, c], 0.0)
    out = np.zeros(sc.M)
    np.add.at(out, sc.colors, tents)
    return out


@dataclass(frozen=True)
class NetEmbedding:
    """Weighted block embedding; block ``j`` has width ``M_{j+3}``."""

    base_idx: int
    delta: float
    scales: tuple[int, ...]
    offsets: tuple[int, ...]
    widths: tuple[int, ...]
    weights: tuple[float, ...]
    blocks: tuple[NDArray, ...]  # unweighted phi_j values, n x width
    tail_bound: float
    B_emp: float

    @property
    def dim(self) -> int:
        return int(sum(self.widths))

    def coords(self) -> NDArray:
        return np.hstack([w * b for w, b in zip(self.weights, self.blocks)])

    def pointset(self) -> PointSet:
        return PointSet(self.coords(), "euclidean")

    def layout(self) -> list[dict]:
        return [
            {"j": j, "offset": o, "width": w, "weight": wt}
            for j, o, w, wt in zip(self.scales, self.offsets, self.widths, self.weights)
        ]


@dataclass(frozen=True)
class BlockReport:
    A: float
    a1_pairs: int
    a1_violations: int
    a1_min: float
    B_emp: float
    B_bound: float

    @property
    def passed(self) -> bool:
        return self.a1_violations == 0 and self.B_emp <= self.B_bound

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def _block_scales(atlas: ColoringAtlas) -> list[int]:
    return [j for j in range(atlas.grid.j_min - 3, atlas.grid.j_max - 2)]


def verify_block_properties(atlas: ColoringAtlas, X=None) -> BlockReport:
    """Exhaustive check of the lower (a1) and upper (a2) block estimates.

    (a1): a pair with ``2**-(l+1) < d <= 2**-l`` has block-``l`` distance at
    least 1. (a2): every pair and block satisfies
    ``|phi_j(x) - phi_j(y)| <= B M_{j+3} min(1, 2**j d)``; the smallest such
    ``B`` is reported and must not exceed 8.
    """
    D = atlas.dist if X is None else as_distance_matrix(X)
    n = D.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    d = D[iu, ju]
    if d.size == 0:
        return BlockReport(1.0, 0, 0, math.inf, 0.0, B_THEORY)
    l_pair = np.floor(-np.log2(d)).astype(np.int64)
    l_pair = np.where(2.0 ** (-l_pair) < d, l_pair - 1, l_pair)
    l_pair = np.where(2.0 ** (-(l_pair + 1)) >= d, l_pair + 1, l_pair)
    a1_min = math.inf
    a1_bad = 0
    a1_count = 0
    B_emp = 0.0
    for j in _block_scales(atlas):
        T = _tent_matrix(atlas, j + 3)
        bd = cdist(T, T)[iu, ju]
        scale_bound = atlas.M(j + 3) * np.minimum(1.0, 2.0**j * d)
        B_emp = max(B_emp, float((bd / scale_bound).max()))
        mask = l_pair == j
        if mask.any():
            a1_count += int(mask.sum())
            a1_min = min(a1_min, float(bd[mask].min()))
            a1_bad += int(np.count_nonzero(bd[mask] < 1.0))
    missing = int(np.count_nonzero((l_pair < _block_scales(atlas)[0]) | (l_pair > _block_scales(atlas)[-1])))
    return BlockReport(1.0, a1_count, a1_bad + missing, a1_min, B_emp, B_THEORY)


def assemble_embedding(X, atlas: ColoringAtlas | None = None, delta: float = 1.0, base_idx: int = 0) -> NetEmbedding:
    """Truncated weighted series of blocks over the atlas scales.

    Raises
    ------
    ValueError
        If ``delta <= 1/2``; the weights are then not square summable.
    """
    if not delta > 0.5:
        raise ValueError("delta must exceed 1/2")
    D = as_distance_matrix(X)
    if not 0 <= base_idx < D.shape[0]:
        raise IndexError("base index out of range")
    if atlas is None:
        atlas = build_coloring_atlas(D)
    report = verify_block_properties(atlas, D)
    scales, offsets, widths, weights, blocks = [], [], [], [], []
    off = 0
    for j in _block_scales(atlas):
        T = _tent_matrix(atlas, j + 3)
        phi = T - T[base_idx]
        M = atlas.M(j + 3)
        scales.append(j)
        offsets.append(off)
        widths.append(M)
        weights.append(2.0**-j / ((1.0 + abs(j)) ** delta * M))
        phi.setflags(write=False)
        blocks.append(phi)
        off += M
    j_hi = scales[-1]
    tail = 0.0
    j = j_hi + 1
    while True:
        term = report.B_emp * 2.0**-j / (1.0 + abs(j)) ** delta
        tail += term
        if term <= 1e-18 * tail:
            break
        j += 1
    return NetEmbedding(
        base_idx,
        float(delta),
        tuple(scales),
        tuple(offsets),
        tuple(widths),
        tuple(weights),
        tuple(blocks),
        tail,
        report.B_emp,
    )


def audit_distortion(map_output, X, gamma: float = 1.0) -> DistortionReport:
    """Distortion of a map given by its image, with the slog exponent ``gamma``."""
    if isinstance(map_output, NetEmbedding):
        map_output = map_output.pointset()
    return distortion_report(map_output, X, gamma)
