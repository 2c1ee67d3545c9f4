"""Simultaneous confidence bands via Gaussian supremum simulation.

The band around the estimated mean curve is mean(t) +- c_alpha * sigma(t) /
sqrt(n), where sigma(t) is the square root of the diagonal of n times the
estimated covariance surface and c_alpha is the empirical (1 - alpha)
quantile of sup_t |Z(t)| / sigma(t) over simulated mean-zero Gaussian
vectors with that covariance.

The covariance estimate need not be positive semidefinite, so it is repaired
by eigenvalue clipping before factorization; the studentization always uses
the raw diagonal (nonnegative by construction for the Hajek estimators), the
repair only feeds the factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .estimators import CovarianceSurface, MeanCurveEstimate
from .population import TimeGrid
from .rng import as_generator

__all__ = [
    "GaussianSimConfig",
    "BandResult",
    "SupQuantileResult",
    "repair_and_factor",
    "simulate_sup_quantile",
    "build_band",
]


@dataclass(frozen=True)
class GaussianSimConfig:
    """Simulation settings for the supremum quantile.

    `eigen_floor` is relative to trace/D (0 clips negative eigenvalues only);
    `sigma_floor` is relative to the largest sigma: grid points below it are
    excluded from the studentized sup and reported.
    """

    replications: int = 3000
    alpha: float = 0.05
    eigen_floor: float = 0.0
    sigma_floor: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.replications < 100:
            raise ValueError("need at least 100 replications")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.eigen_floor < 0 or self.sigma_floor < 0:
            raise ValueError("floors must be nonnegative")


@dataclass(frozen=True)
class SupQuantileResult:
    c_alpha: float
    sup_draws: np.ndarray
    sigma_hat: np.ndarray
    retained: np.ndarray        # bool mask over grid points
    excluded_points: np.ndarray  # indices below the sigma floor


@dataclass(frozen=True)
class BandResult:
    """Simultaneous band: mean, sigma_hat, cut-off, and the envelope.

    `degenerate` marks the all-zero-variance case (for example curves exactly
    proportional to the inclusion probabilities), where the band collapses to
    the mean and no cut-off is defined.
    """

    grid: TimeGrid
    mean: np.ndarray
    sigma_hat: np.ndarray
    c_alpha: float
    lower: np.ndarray
    upper: np.ndarray
    excluded_points: np.ndarray
    degenerate: bool = False


def repair_and_factor(surface, eigen_floor: float = 0.0) -> np.ndarray:
    """Factor L with L @ L.T equal to the eigenvalue-clipped input matrix.

    Eigenvalues below eigen_floor * trace/D are raised to that floor (with
    floor 0 this just clips negatives to zero), which preserves the leading
    eigenstructure that drives the supremum distribution.
    """
    m = surface.matrix if isinstance(surface, CovarianceSurface) else np.asarray(surface, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("need a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    scale = float(np.max(np.abs(m))) or 1.0
    if float(np.max(np.abs(m - m.T))) > 1e-10 * scale:
        raise ValueError("matrix must be symmetric")
    sym = 0.5 * (m + m.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    floor = max(eigen_floor * float(np.trace(sym)) / m.shape[0], 0.0)
    clipped = np.maximum(eigvals, floor)
    return eigvecs * np.sqrt(clipped)[None, :]


def simulate_sup_quantile(surface: CovarianceSurface, n: int,
                          cfg: GaussianSimConfig) -> SupQuantileResult:
    """Cut-off c_alpha from simulated sups of |Z(t)|/sigma(t).

    Draws `cfg.replications` mean-zero Gaussian vectors with covariance
    n * surface, studentizes by the raw diagonal, and returns the
    conservative empirical quantile (order statistic ceil((1-alpha) M)).
    Deterministic given `cfg.seed`.
    """
    ngamma = n * surface.matrix
    diag = np.diag(ngamma).copy()
    sigma = np.sqrt(np.maximum(diag, 0.0))
    top = float(sigma.max(initial=0.0))
    retained = sigma >= cfg.sigma_floor * top if top > 0 else np.zeros(sigma.size, dtype=bool)
    retained &= sigma > 0
    if not np.any(retained):
        raise NumericError("all grid points fall below the sigma floor")
    excluded = np.flatnonzero(~retained)

    L = repair_and_factor(ngamma, cfg.eigen_floor)
    rng = as_generator(cfg.seed)
    M = cfg.replications
    draws = rng.standard_normal((M, sigma.size)) @ L.T
    sups = np.max(np.abs(draws[:, retained]) / sigma[retained][None, :], axis=1)
    order = np.sort(sups)
    rank = math.ceil((1.0 - cfg.alpha) * M)
    c_alpha = float(order[min(rank, M) - 1])
    return SupQuantileResult(c_alpha=c_alpha, sup_draws=sups, sigma_hat=sigma,
                             retained=retained, excluded_points=excluded)


def build_band(mean_est: MeanCurveEstimate, surface: CovarianceSurface,
               cfg: GaussianSimConfig) -> BandResult:
    """Assemble the simultaneous band around the estimated mean curve.

    An identically-zero variance surface yields a degenerate zero-width band
    with the flag set rather than an error.
    """
    if mean_est.grid.n_points != surface.grid.n_points:
        raise ValueError("mean estimate and surface must share the grid")
    n = mean_est.n
    diag = np.maximum(np.diag(surface.matrix), 0.0)
    sigma = np.sqrt(n * diag)
    if float(sigma.max(initial=0.0)) == 0.0:
        D = mean_est.grid.n_points
        return BandResult(grid=mean_est.grid, mean=mean_est.values.copy(),
                          sigma_hat=sigma, c_alpha=0.0,
                          lower=mean_est.values.copy(), upper=mean_est.values.copy(),
                          excluded_points=np.arange(D), degenerate=True)
    sim = simulate_sup_quantile(surface, n, cfg)
    half = sim.c_alpha * sim.sigma_hat / math.sqrt(n)
    return BandResult(grid=mean_est.grid, mean=mean_est.values.copy(),
                      sigma_hat=sim.sigma_hat, c_alpha=sim.c_alpha,
                      lower=mean_est.values - half, upper=mean_est.values + half,
                      excluded_points=sim.excluded_points, degenerate=False)
