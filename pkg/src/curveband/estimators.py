"""Mean-curve estimation and covariance surfaces.

The inverse-probability weighted mean curve, the exact Yates-Grundy
covariance surface (for designs whose second-order probabilities are known
exactly), the Hajek population approximation, and its two plug-in sample
estimators (plain and slack-rescaled "star" variant).

Surfaces are always stored on the covariance scale of the mean estimator
(gamma, not n * gamma) and are evaluated on the grid; off-grid queries go
through `interpolate_curve`. The Hajek formulas are evaluated in their
weighted-centered form, which is algebraically identical to the textbook
two-term expression but keeps the diagonal nonnegative and annihilates
exactly on curves proportional to the inclusion probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .designs import InclusionProfile, SampleDraw, SecondOrderMatrix
from .errors import NumericError
from .population import CurvePopulation, TimeGrid

__all__ = [
    "MeanCurveEstimate",
    "CovarianceSurface",
    "InfluenceReport",
    "interpolate_curve",
    "ht_mean_curve",
    "yates_grundy_surface",
    "hajek_population_surface",
    "hajek_estimate_surface",
    "influence_report",
]

_GRAM_KINDS = {"yates_grundy_exact", "hajek_estimate", "hajek_estimate_star", "empirical"}


@dataclass(frozen=True)
class MeanCurveEstimate:
    """Estimated mean curve plus the sampled slack d_hat = sum(1 - pi_k)."""

    grid: TimeGrid
    values: np.ndarray
    n: int
    d_hat: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.n_points,):
            raise ValueError("values must match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("estimate must be finite")
        if not (-1e-9 <= self.d_hat <= self.n + 1e-9):
            raise ValueError("d_hat must lie in [0, n]")


@dataclass(frozen=True)
class CovarianceSurface:
    """Symmetric D x D covariance surface of the mean-curve estimator."""

    grid: TimeGrid
    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        D = self.grid.n_points
        if m.shape != (D, D):
            raise ValueError("matrix must be D x D for the grid")
        if not np.all(np.isfinite(m)):
            raise ValueError("surface must be finite")
        scale = float(np.max(np.abs(m))) or 1.0
        if float(np.max(np.abs(m - m.T))) > 1e-12 * scale:
            raise ValueError("surface must be symmetric")
        if self.kind in _GRAM_KINDS and float(np.min(np.diag(m))) < -1e-12 * scale:
            raise ValueError(f"kind {self.kind}: negative variance on the diagonal")

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()


@dataclass(frozen=True)
class InfluenceReport:
    """Peak-to-probability scores m_k = sup_t |Y_k(t)| / pi_k.

    `scored_units` are the population indices aligned with `m`; `top_ids`
    lists the highest-scoring units in descending order.
    """

    m: np.ndarray
    scored_units: np.ndarray
    top_ids: np.ndarray


def interpolate_curve(row, grid: TimeGrid, t):
    """Linearly interpolated curve value(s) at t in [0, horizon]; exact at nodes."""
    row = np.asarray(row, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > grid.horizon):
        raise ValueError("t outside the grid horizon")
    out = np.interp(t_arr, grid.points, row)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def ht_mean_curve(sample: SampleDraw, profile: InclusionProfile,
                  pop: CurvePopulation) -> MeanCurveEstimate:
    """Inverse-probability weighted mean curve (1/N) sum_{k in s} Y_k(t)/pi_k."""
    idx = sample.indices
    if idx.size == 0 or idx[-1] >= pop.n_units:
        raise ValueError("sample indices out of range for the population")
    pi_s = profile.pi[idx]
    if np.any(pi_s <= 0):
        raise ValueError("zero inclusion probability among sampled units")
    values = (pop.values[idx] / pi_s[:, None]).sum(axis=0) / pop.n_units
    d_hat = float(np.sum(1.0 - pi_s))
    return MeanCurveEstimate(grid=pop.grid, values=values, n=sample.size, d_hat=d_hat)


def yates_grundy_surface(pikl: SecondOrderMatrix, profile: InclusionProfile,
                         pop: CurvePopulation) -> CovarianceSurface:
    """Exact covariance surface from the pairwise Yates-Grundy contrast form.

    gamma(t_i, t_j) = (1/N^2) sum_{k<l} (pi_k pi_l - pi_kl)
                      (z_k(t_i) - z_l(t_i)) (z_k(t_j) - z_l(t_j))
    with z_k = Y_k / pi_k. Needs exact fixed-size second-order probabilities.
    """
    if pikl.source not in ("exact-enumeration", "cp-recursion"):
        raise ValueError(f"Yates-Grundy needs exact pi_kl, got source {pikl.source!r}")
    pi = profile.pi
    N = pop.n_units
    if pikl.pikl.shape != (N, N):
        raise ValueError("pi_kl shape does not match the population")
    z = pop.values / pi[:, None]
    kk, ll = np.triu_indices(N, k=1)
    weights = pi[kk] * pi[ll] - pikl.pikl[kk, ll]
    diffs = z[kk] - z[ll]
    M = (diffs * weights[:, None]).T @ diffs / (N * N)
    M = 0.5 * (M + M.T)
    return CovarianceSurface(grid=pop.grid, matrix=M, kind="yates_grundy_exact")


def _weighted_centered_gram(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_k w_k (z_k - zbar)(z_k - zbar)^T with zbar the w-weighted mean."""
    total = float(w.sum())
    if total == 0.0:
        return np.zeros((z.shape[1], z.shape[1]))
    zbar = (w @ z) / total
    centered = z - zbar
    X = np.sqrt(w)[:, None] * centered
    M = X.T @ X
    return 0.5 * (M + M.T)


def hajek_population_surface(profile: InclusionProfile,
                             pop: CurvePopulation) -> CovarianceSurface:
    """Population-level Hajek covariance approximation.

    Weighted-centered form of
    (1/N^2)[ sum_k (1-pi_k) Y_k(t) Y_k(r) / pi_k
             - (1/d(pi)) (sum_k (1-pi_k) Y_k(t)) (sum_l (1-pi_l) Y_l(r)) ]
    with weights pi_k (1 - pi_k) on the rescaled curves Y_k / pi_k.
    """
    if profile.d_pi <= 0:
        raise ValueError("d(pi) must be positive")
    pi = profile.pi
    N = pop.n_units
    z = pop.values / pi[:, None]
    w = pi * (1.0 - pi)
    M = _weighted_centered_gram(z, w) / (N * N)
    return CovarianceSurface(grid=pop.grid, matrix=M, kind="hajek_population")


def hajek_estimate_surface(sample: SampleDraw, profile: InclusionProfile,
                           pop: CurvePopulation, discretized: bool = True,
                           star: bool = False,
                           berger_correction: bool = False) -> CovarianceSurface:
    """Sample-based Hajek covariance estimator, plain or star-rescaled.

    Both variants evaluate on the grid, where the interpolated and raw
    trajectories coincide, so `discretized` does not change the output here;
    it is kept for interface parity with off-grid evaluation. The star
    variant multiplies the plain estimator elementwise by d(pi)/d_hat(pi).
    `berger_correction` applies the finite-sample factor n/(n-1).
    """
    del discretized  # grid evaluation: Y_{k,d}(t_j) = Y_k(t_j) identically
    if profile.d_pi <= 0:
        raise ValueError("d(pi) must be positive")
    idx = sample.indices
    pi_s = profile.pi[idx]
    b = 1.0 - pi_s
    d_hat = float(b.sum())
    N = pop.n_units
    z = pop.values[idx] / pi_s[:, None]
    core = _weighted_centered_gram(z, b)
    M = core * (d_hat / (profile.d_pi * N * N))
    if star:
        if d_hat == 0.0:
            raise NumericError("star estimator undefined: d_hat = 0 (all sampled pi_k = 1)")
        M = M * (profile.d_pi / d_hat)
    if berger_correction:
        if sample.size < 2:
            raise ValueError("Berger correction needs n >= 2")
        M = M * (sample.size / (sample.size - 1.0))
    kind = "hajek_estimate_star" if star else "hajek_estimate"
    return CovarianceSurface(grid=pop.grid, matrix=M, kind=kind)


def influence_report(pop: CurvePopulation, profile: InclusionProfile,
                     sample: SampleDraw | None = None, top_k: int = 10) -> InfluenceReport:
    """Rank units by m_k = max_j |Y_k(t_j)| / pi_k, over the sample if given."""
    units = sample.indices if sample is not None else np.arange(pop.n_units)
    m = np.max(np.abs(pop.values[units]), axis=1) / profile.pi[units]
    order = np.argsort(-m, kind="stable")
    top = units[order[: min(top_k, order.size)]]
    return InfluenceReport(m=m, scored_units=np.asarray(units), top_ids=top)
