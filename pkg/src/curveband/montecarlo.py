"""Replicated-sampling experiments.

Implements the evaluation protocol used throughout: an empirical covariance
surface from J independent mean-curve estimates, the diagonal relative
quadratic loss R of a variance estimate against that reference, its
RMSE = RB^2 + RV decomposition with quantiles over I replicates, coverage
studies for the simultaneous bands, and empirical rate checks against the
exact enumeration oracle.

Every replicate runs on its own counter-derived stream
(SeedSequence(master_seed, spawn_key=(phase, index))), so reports are pure
functions of (population, config) independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import designs
from .bands import BandResult, GaussianSimConfig, build_band
from .designs import DesignDistribution, InclusionProfile, SampleDraw, second_order_exact, second_order_hajek
from .errors import NumericError
from .estimators import (CovarianceSurface, MeanCurveEstimate, hajek_estimate_surface,
                         ht_mean_curve, yates_grundy_surface)
from .population import CurvePopulation, TimeGrid
from .rng import rng_for, substream

__all__ = [
    "DesignSpec",
    "McConfig",
    "McReport",
    "CoverageResult",
    "RateStudy",
    "empirical_covariance",
    "risk_R",
    "risk_decomposition",
    "run_variance_study",
    "coverage_experiment",
    "rate_study",
]

_PHASE_GAMMA = 0
_PHASE_RISK = 1
_PHASE_COVERAGE = 2

_QUANTILE_LEVELS = (("5%", 0.05), ("q1", 0.25), ("median", 0.5), ("q3", 0.75), ("95%", 0.95))


@dataclass(frozen=True)
class DesignSpec:
    """Which fixed-size design drives an experiment, plus the size threshold."""

    kind: str = "rejective"
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rejective", "sampford", "srswor"):
            raise ValueError(f"unsupported study design {self.kind!r}")


@dataclass(frozen=True)
class McConfig:
    """Replication counts and seeds for a variance study."""

    design: DesignSpec
    n: int
    reps_gamma: int
    reps_risk: int
    alpha: float = 0.05
    master_seed: int = 0
    threads: int = 1
    coverage_reps: int = 0
    band_reps: int = 2000

    def __post_init__(self):
        if self.reps_gamma < 2:
            raise ValueError("need at least two replicates for the empirical covariance")
        if self.reps_risk < 1:
            raise ValueError("need at least one risk replicate")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class CoverageResult:
    """Simultaneous-coverage outcome; hits are 1/0, degenerate replicates -1."""

    coverage: float
    hits: np.ndarray
    n_degenerate: int


@dataclass(frozen=True)
class McReport:
    n: int
    design: DesignSpec
    d_pi: float
    gamma_emp: CovarianceSurface
    risks: np.ndarray
    rmse: float
    rb2: float
    rv: float
    risk_quantiles: dict
    excluded_points: np.ndarray
    selected_replicate: int
    selected_surface: CovarianceSurface
    hajek_population: CovarianceSurface
    coverage: CoverageResult | None
    config: McConfig


@dataclass(frozen=True)
class RateStudy:
    """Log-log rate table: one row per population scale."""

    quantity: str
    sizes: np.ndarray
    sample_sizes: np.ndarray
    d_values: np.ndarray
    values: np.ndarray
    slope: float
    residuals: np.ndarray


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def profile_for_design(pop: CurvePopulation, spec: DesignSpec, n: int) -> InclusionProfile:
    """Inclusion profile implied by the design: proportional for the
    unequal-probability designs, uniform n/N for SRSWOR."""
    if spec.kind == "srswor":
        return InclusionProfile(pi=np.full(pop.n_units, n / pop.n_units), n=n)
    return designs.inclusion_from_auxiliary(pop.auxiliary, n, delta=spec.delta)


def membership_sampler(profile: InclusionProfile, spec: DesignSpec):
    """Closure (rng, count) -> (count, N) membership rows for the design."""
    if spec.kind == "rejective":
        p = designs.rejective_working_probs(profile)
        return lambda rng, count: designs.draw_rejective_many(p, profile.n, rng, count)
    if spec.kind == "sampford":
        if profile.capped_ids:
            raise ValueError("Sampford cannot run with capped units present")
        return lambda rng, count: designs.draw_sampford_many(profile.pi, profile.n, rng, count)
    return lambda rng, count: designs.draw_srswor_many(profile.n_units, profile.n, rng, count)


def _draw_to_sample(row: np.ndarray) -> SampleDraw:
    idx = np.flatnonzero(row)
    return SampleDraw(indices=idx, membership=row.astype(np.uint8))


def empirical_covariance(estimates, grid: TimeGrid | None = None) -> CovarianceSurface:
    """Monte Carlo covariance of replicate mean curves, divisor J - 1."""
    if isinstance(estimates, np.ndarray):
        V = np.asarray(estimates, dtype=float)
        if grid is None:
            raise ValueError("grid is required with a raw replicate matrix")
    else:
        estimates = list(estimates)
        if not estimates:
            raise ValueError("no replicates")
        grid = estimates[0].grid
        V = np.stack([e.values for e in estimates])
    J = V.shape[0]
    if J < 2:
        raise ValueError("need at least two replicates")
    centered = V - V.mean(axis=0)
    M = centered.T @ centered / (J - 1)
    M = 0.5 * (M + M.T)
    return CovarianceSurface(grid=grid, matrix=M, kind="empirical")


def _diag_of(surface) -> np.ndarray:
    if isinstance(surface, CovarianceSurface):
        return np.diag(surface.matrix)
    return np.asarray(surface, dtype=float)


def risk_R(gamma_hat, gamma_emp, return_excluded: bool = False):
    """Diagonal relative squared error averaged over usable grid points.

    Grid points where the reference variance vanishes are excluded (and
    reported when asked); an entirely-zero reference diagonal is an error.
    """
    est = _diag_of(gamma_hat)
    ref = _diag_of(gamma_emp)
    usable = ref > 0
    if not np.any(usable):
        raise NumericError("reference variance is zero at every grid point")
    r = float(np.mean(((est[usable] - ref[usable]) / ref[usable]) ** 2))
    if return_excluded:
        return r, np.flatnonzero(~usable)
    return r


def risk_decomposition(replicate_surfaces, gamma_emp):
    """RMSE, squared relative bias, relative variance, and risk quantiles.

    `replicate_surfaces` is a list of CovarianceSurface or an (I, D) array of
    replicate variance diagonals. RV is stored as RMSE - RB^2 so the
    decomposition identity is definitional.
    """
    if isinstance(replicate_surfaces, np.ndarray):
        diags = np.asarray(replicate_surfaces, dtype=float)
    else:
        diags = np.stack([_diag_of(s) for s in replicate_surfaces])
    if diags.shape[0] < 1:
        raise ValueError("need at least one replicate")
    ref = _diag_of(gamma_emp)
    usable = ref > 0
    if not np.any(usable):
        raise NumericError("reference variance is zero at every grid point")
    rel = (diags[:, usable] - ref[usable]) / ref[usable]
    risks = np.mean(rel ** 2, axis=1)
    rmse = float(np.mean(risks))
    mean_diag = diags.mean(axis=0)
    rb2 = float(np.mean(((mean_diag[usable] - ref[usable]) / ref[usable]) ** 2))
    rv = rmse - rb2
    quantiles = {name: float(np.quantile(risks, q)) for name, q in _QUANTILE_LEVELS}
    return rmse, rb2, rv, quantiles, risks, np.flatnonzero(~usable)


def select_median_replicate(risks: np.ndarray) -> int:
    """Replicate whose risk sits closest to the median; lowest index on ties."""
    med = float(np.median(risks))
    return int(np.argmin(np.abs(np.asarray(risks) - med)))


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------

def run_variance_study(pop: CurvePopulation, cfg: McConfig) -> McReport:
    """Full variance-evaluation protocol on one population and sample size.

    Phase one draws J samples to build the empirical reference covariance;
    phase two draws I fresh samples, estimates the covariance surface in each,
    and aggregates the relative losses. Pure in (pop, cfg).
    """
    profile = profile_for_design(pop, cfg.design, cfg.n)
    sampler = membership_sampler(profile, cfg.design)
    D = pop.grid.n_points

    gamma_estimates = np.empty((cfg.reps_gamma, D))
    for j in range(cfg.reps_gamma):
        rng = rng_for(cfg.master_seed, _PHASE_GAMMA, j)
        sample = _draw_to_sample(sampler(rng, 1)[0])
        gamma_estimates[j] = ht_mean_curve(sample, profile, pop).values
    gamma_emp = empirical_covariance(gamma_estimates, grid=pop.grid)

    def risk_replicate(i: int, full_surface: bool = False):
        rng = rng_for(cfg.master_seed, _PHASE_RISK, i)
        sample = _draw_to_sample(sampler(rng, 1)[0])
        surface = hajek_estimate_surface(sample, profile, pop)
        return surface if full_surface else np.diag(surface.matrix)

    diags = np.empty((cfg.reps_risk, D))
    for i in range(cfg.reps_risk):
        diags[i] = risk_replicate(i)
    rmse, rb2, rv, quantiles, risks, excluded = risk_decomposition(diags, gamma_emp)

    selected = select_median_replicate(risks)
    selected_surface = risk_replicate(selected, full_surface=True)

    coverage = None
    if cfg.coverage_reps > 0:
        band_cfg = GaussianSimConfig(replications=cfg.band_reps, alpha=cfg.alpha)
        coverage = coverage_experiment(pop, cfg.design, cfg.n, cfg.alpha,
                                       cfg.coverage_reps, band_cfg, cfg.master_seed)

    return McReport(
        n=cfg.n, design=cfg.design, d_pi=profile.d_pi, gamma_emp=gamma_emp,
        risks=risks, rmse=rmse, rb2=rb2, rv=rv, risk_quantiles=quantiles,
        excluded_points=excluded, selected_replicate=selected,
        selected_surface=selected_surface,
        hajek_population=_hajek_population(profile, pop),
        coverage=coverage, config=cfg,
    )


def _hajek_population(profile: InclusionProfile, pop: CurvePopulation) -> CovarianceSurface:
    from .estimators import hajek_population_surface
    return hajek_population_surface(profile, pop)


def coverage_experiment(pop: CurvePopulation, design: DesignSpec, n: int, alpha: float,
                        replicates: int, band_cfg: GaussianSimConfig,
                        master_seed: int) -> CoverageResult:
    """Fraction of replicates whose band contains the true mean curve everywhere.

    A replicate hits when mu_N(t_j) lies inside the band at every retained
    grid point; degenerate (zero-variance) bands are flagged and kept out of
    the rate. Deterministic in master_seed.
    """
    profile = profile_for_design(pop, design, n)
    sampler = membership_sampler(profile, design)
    mu = pop.mean_curve()
    hits = np.empty(replicates, dtype=np.int8)
    for i in range(replicates):
        rng = rng_for(master_seed, _PHASE_COVERAGE, i)
        sample = _draw_to_sample(sampler(rng, 1)[0])
        est = ht_mean_curve(sample, profile, pop)
        surface = hajek_estimate_surface(sample, profile, pop)
        seed_i = int(substream(master_seed, _PHASE_COVERAGE, i, 1).generate_state(1, np.uint64)[0])
        band = build_band(est, surface, replace(band_cfg, alpha=alpha, seed=seed_i))
        if band.degenerate:
            hits[i] = -1
            continue
        keep = np.ones(mu.size, dtype=bool)
        keep[band.excluded_points] = False
        inside = (band.lower[keep] <= mu[keep]) & (mu[keep] <= band.upper[keep])
        hits[i] = 1 if bool(np.all(inside)) else 0
    valid = hits >= 0
    n_degen = int(np.sum(~valid))
    coverage = float(np.mean(hits[valid] == 1)) if np.any(valid) else float("nan")
    return CoverageResult(coverage=coverage, hits=hits, n_degenerate=n_degen)


# ---------------------------------------------------------------------------
# Rate checks against the enumeration oracle
# ---------------------------------------------------------------------------

def _tiled_profile(base_x: np.ndarray, base_n: int, m: int) -> InclusionProfile:
    x = np.tile(np.asarray(base_x, dtype=float), m)
    return designs.inclusion_from_auxiliary(x, base_n * m)


def _hajek_pikl_error(dist: DesignDistribution, profile: InclusionProfile) -> float:
    exact = second_order_exact(dist).pikl
    approx = second_order_hajek(profile).pikl
    off = ~np.eye(exact.shape[0], dtype=bool)
    return float(np.max(np.abs(exact[off] - approx[off])))


def _enumerated_var_mse(dist: DesignDistribution, profile: InclusionProfile,
                        pop: CurvePopulation, pair: tuple) -> float:
    """E_p[(gamma_hat_H(r,t) - gamma_p(r,t))^2] by direct summation over the support."""
    i, j = pair
    gamma_p = yates_grundy_surface(second_order_exact(dist), profile, pop).matrix[i, j]
    pi = profile.pi
    sup = dist.support
    pi_s = pi[sup]
    b = 1.0 - pi_s
    d_hat = b.sum(axis=1)
    zr = pop.values[:, i][sup] / pi_s
    zt = pop.values[:, j][sup] / pi_s
    with np.errstate(invalid="ignore"):
        zr_bar = np.where(d_hat > 0, (b * zr).sum(axis=1) / d_hat, 0.0)
        zt_bar = np.where(d_hat > 0, (b * zt).sum(axis=1) / d_hat, 0.0)
    core = (b * (zr - zr_bar[:, None]) * (zt - zt_bar[:, None])).sum(axis=1)
    gam = core * d_hat / (profile.d_pi * pop.n_units ** 2)
    return float(np.sum(dist.probs * (gam - gamma_p) ** 2))


def rate_study(quantity: str, tiles: Sequence[int], base_x, base_n: int, *,
               base_curves=None, grid: TimeGrid | None = None,
               pair: tuple | None = None, max_support: float = 1e6) -> RateStudy:
    """Track a diagnostic across tiled population scales and fit its rate.

    The base size pattern (and curves, for the variance-MSE check) is tiled
    `m` times with sample size m * base_n, which holds the probability
    pattern fixed while d(pi) grows linearly. Returns the fitted slope of
    log(quantity) against log(d(pi)); for the variance check the tabulated
    value is n^3 times the enumerated MSE.
    """
    tiles = list(tiles)
    if len(tiles) < 3:
        raise ValueError("need at least three size points for a rate fit")
    if quantity not in ("a5", "hajek_pikl_error", "var_estimator_mse"):
        raise ValueError(f"unknown rate quantity {quantity!r}")
    base_x = np.asarray(base_x, dtype=float)

    sizes, sample_sizes, d_values, values = [], [], [], []
    for m in tiles:
        profile = _tiled_profile(base_x, base_n, m)
        if profile.capped_ids:
            raise ValueError("rate study patterns must not produce capped units")
        p = designs.calibrate_cp_working_probs(profile)
        N, n = profile.n_units, profile.n
        dist = designs.enumerate_design("rejective", n, p=p, max_support=max_support)
        if quantity == "a5":
            val = designs.a5_statistic(dist, second_order_exact(dist))
        elif quantity == "hajek_pikl_error":
            val = _hajek_pikl_error(dist, profile)
        else:
            if base_curves is None or grid is None:
                raise ValueError("var_estimator_mse needs base_curves and grid")
            curves = np.tile(np.asarray(base_curves, dtype=float), (m, 1))
            pop = CurvePopulation(grid=grid, values=curves,
                                  auxiliary=np.tile(base_x, m),
                                  ids=tuple(f"u{k}" for k in range(N)))
            use_pair = pair if pair is not None else (grid.n_points // 3, (2 * grid.n_points) // 3)
            val = (n ** 3) * _enumerated_var_mse(dist, profile, pop, use_pair)
        sizes.append(N)
        sample_sizes.append(n)
        d_values.append(profile.d_pi)
        values.append(val)

    d_arr = np.asarray(d_values)
    v_arr = np.asarray(values)
    logd, logv = np.log(d_arr), np.log(np.maximum(v_arr, 1e-300))
    slope, intercept = np.polyfit(logd, logv, 1)
    residuals = logv - (slope * logd + intercept)
    return RateStudy(quantity=quantity, sizes=np.asarray(sizes),
                     sample_sizes=np.asarray(sample_sizes), d_values=d_arr,
                     values=v_arr, slope=float(slope), residuals=residuals)
