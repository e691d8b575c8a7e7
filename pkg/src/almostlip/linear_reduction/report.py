"""Pairwise distortion statistics for a map given by its image."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..metric_core import as_distance_matrix, slog

INJECTIVE_RTOL = 1e-12


@dataclass(frozen=True)
class ModulusBin:
    """Pairs with ``2**-(bin+1) < d <= 2**-bin``."""

    bin: int
    count: int
    d_min: float
    d_max: float
    out_min: float
    out_max: float


@dataclass(frozen=True)
class DistortionReport:
    """Ratio statistics of ``out = |f(x) - f(y)|`` against ``d = d(x, y)``.

    ``ratio_up = out / d`` and ``ratio_down = out * slog(d)**gamma / d``.
    ``L_fit`` is the smallest constant with
    ``d / (L slog(d)**gamma) <= out <= L d`` on every pair; it is ``inf``
    when some distinct pair collapses.
    """

    n_points: int
    n_pairs: int
    gamma: float
    ratio_up_min: float
    ratio_up_max: float
    ratio_down_min: float
    ratio_down_max: float
    L_fit: float
    c_fit: float
    injective: bool
    min_output: float
    modulus: tuple[ModulusBin, ...]
    modulus_shape_residual: float
    theta_fit: float | None = None
    seed: int | None = None
    map_id: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def modulus_monotone(self) -> bool:
        """Per-bin minimum output is nondecreasing as the bin distance grows."""
        mins = [b.out_min for b in sorted(self.modulus, key=lambda b: -b.bin)]
        return all(a <= b for a, b in zip(mins, mins[1:]))

    def to_dict(self) -> dict:
        def fin(v):
            return None if v is None or not math.isfinite(v) else float(v)

        return {
            "n_points": self.n_points,
            "n_pairs": self.n_pairs,
            "gamma": self.gamma,
            "ratio_up": [fin(self.ratio_up_min), fin(self.ratio_up_max)],
            "ratio_down": [fin(self.ratio_down_min), fin(self.ratio_down_max)],
            "L_fit": fin(self.L_fit),
            "c_fit": fin(self.c_fit),
            "injective": self.injective,
            "min_output": self.min_output,
            "modulus": [[b.bin, b.out_min, b.out_max] for b in self.modulus],
            "modulus_detail": [b.__dict__ for b in self.modulus],
            "modulus_monotone": self.modulus_monotone,
            "modulus_shape_residual": self.modulus_shape_residual,
            "theta_fit": fin(self.theta_fit),
            "seed": self.seed,
            "map_id": self.map_id,
            **{k: v for k, v in self.extra.items()},
        }


def _dyadic_bins(d: NDArray) -> NDArray:
    b = np.floor(-np.log2(d)).astype(np.int64)
    # floor of log2 can land one off at exact powers of two
    b = np.where(2.0 ** (-b) < d, b - 1, b)
    b = np.where(2.0 ** (-(b + 1)) >= d, b + 1, b)
    return b


def modulus_curve(d: NDArray, out: NDArray) -> tuple[ModulusBin, ...]:
    bins = _dyadic_bins(d)
    result = []
    for b in np.unique(bins):
        m = bins == b
        result.append(
            ModulusBin(int(b), int(m.sum()), float(d[m].min()), float(d[m].max()), float(out[m].min()), float(out[m].max()))
        )
    return tuple(sorted(result, key=lambda x: x.bin))


def _shape_residual(modulus: tuple[ModulusBin, ...], gamma: float) -> float:
    rows = [b for b in modulus if b.out_min > 0]
    if len(rows) < 2:
        return 0.0
    t = np.array([b.d_min for b in rows])
    y = np.log([b.out_min for b in rows]) - (np.log(t) - gamma * np.log(slog(t)))
    return float(np.sqrt(np.mean((y - y.mean()) ** 2)))


def distortion_report(
    image,
    X,
    gamma: float = 0.0,
    seed: int | None = None,
    map_id: str | None = None,
) -> DistortionReport:
    """Audit a map through its image.

    Parameters
    ----------
    image : FiniteMetricSpace, PointSet or distance matrix
        Row ``i`` is the image of point ``i`` of ``X``.
    X : FiniteMetricSpace, PointSet or distance matrix
    gamma : float
        Exponent of the slog correction in the lower bound.
    """
    Dx = as_distance_matrix(X)
    Dy = as_distance_matrix(image)
    if Dx.shape != Dy.shape:
        raise ValueError(f"size mismatch: {Dx.shape[0]} points against {Dy.shape[0]} images")
    n = Dx.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    d = Dx[iu, ju]
    out = Dy[iu, ju]
    if d.size == 0:
        return DistortionReport(n, 0, gamma, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, True, 0.0, (), 0.0, None, seed, map_id)
    up = out / d
    down = up * slog(d) ** gamma
    scale = float(out.max())
    injective = bool(out.min() > INJECTIVE_RTOL * scale) if scale > 0 else False
    c_fit = float(down.min())
    L_fit = max(float(up.max()), 1.0 / c_fit if c_fit > 0 and injective else math.inf)
    modulus = modulus_curve(d, out)
    theta = None
    if len(modulus) >= 6 and injective:
        theta = _holder_slope(modulus)
    return DistortionReport(
        n_points=n,
        n_pairs=int(d.size),
        gamma=float(gamma),
        ratio_up_min=float(up.min()),
        ratio_up_max=float(up.max()),
        ratio_down_min=c_fit,
        ratio_down_max=float(down.max()),
        L_fit=L_fit,
        c_fit=c_fit,
        injective=injective,
        min_output=float(out.min()),
        modulus=modulus,
        modulus_shape_residual=_shape_residual(modulus, gamma),
        theta_fit=theta,
        seed=seed,
        map_id=map_id,
    )


def _holder_slope(modulus: tuple[ModulusBin, ...]) -> float:
    t = np.log([b.d_min for b in modulus])
    y = np.log([b.out_min for b in modulus])
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def holder_exponent_fit(report: DistortionReport) -> float:
    """Slope of ``log(min output)`` against ``log(min input distance)`` per dyadic bin."""
    bins = [b for b in report.modulus if b.out_min > 0]
    if len(bins) < 6:
        raise ValueError(f"Hölder fit needs at least 6 nonempty bins with positive output, got {len(bins)}")
    return _holder_slope(tuple(bins))
