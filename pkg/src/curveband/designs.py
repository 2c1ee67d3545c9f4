"""Fixed-size unequal-probability sampling designs and their diagnostics.

Provides inclusion-probability construction from an auxiliary size (with
iterative capping at 1), calibration of conditional-Poisson working
probabilities, rejection samplers (conditional Poisson / rejective, Sampford,
simple random sampling without replacement, raw Poisson), exact enumeration
of small designs as an oracle, exact and approximate second-order inclusion
probabilities, and entropy / divergence / fourth-order dependence
diagnostics.

All symmetric-polynomial work is done in log space so the recursions stay
stable for populations far beyond enumerable sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .rng import as_generator

__all__ = [
    "InclusionProfile",
    "SecondOrderMatrix",
    "DesignDistribution",
    "SampleDraw",
    "inclusion_from_auxiliary",
    "cp_first_order_probabilities",
    "calibrate_cp_working_probs",
    "draw_rejective",
    "draw_rejective_many",
    "draw_sampford",
    "draw_sampford_many",
    "draw_srswor",
    "draw_srswor_many",
    "draw_poisson",
    "enumerate_design",
    "second_order_exact",
    "second_order_hajek",
    "entropy",
    "kl_divergence",
    "a5_statistic",
]

MAX_REJECTION_ATTEMPTS = 1_000_000
A5_MAX_UNITS = 12


@dataclass(frozen=True)
class InclusionProfile:
    """First-order inclusion probabilities for a fixed-size design.

    `d_pi` is recomputed from `pi`; `capped_ids` lists the units whose
    probability was capped at exactly 1 by `inclusion_from_auxiliary`.
    """

    pi: np.ndarray
    n: int
    d_pi: float = field(init=False)
    capped_ids: tuple = ()

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "capped_ids", tuple(sorted(self.capped_ids)))
        if pi.ndim != 1 or pi.size < 2:
            raise ValueError("pi must be a vector with at least two entries")
        if np.any(pi <= 0) or np.any(pi > 1):
            raise ValueError("inclusion probabilities must lie in (0, 1]")
        if abs(float(pi.sum()) - self.n) > 1e-9:
            raise ValueError("inclusion probabilities must sum to the sample size")
        object.__setattr__(self, "d_pi", float(np.sum(pi * (1.0 - pi))))

    @property
    def n_units(self) -> int:
        return int(self.pi.size)


@dataclass(frozen=True)
class SampleDraw:
    """A drawn sample: sorted unit indices plus the 0/1 membership vector."""

    indices: np.ndarray
    membership: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        mem = np.asarray(self.membership, dtype=np.uint8)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "membership", mem)
        if np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if not np.array_equal(np.flatnonzero(mem), idx):
            raise ValueError("membership inconsistent with indices")

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class SecondOrderMatrix:
    """Symmetric matrix of second-order inclusion probabilities.

    The diagonal carries the first-order probabilities. `source` is one of
    "exact-enumeration", "cp-recursion", "hajek-approx".
    """

    pikl: np.ndarray
    source: str

    def __post_init__(self):
        m = np.asarray(self.pikl, dtype=float)
        object.__setattr__(self, "pikl", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("pikl must be square")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
            raise ValueError("pikl must be symmetric")


@dataclass
class DesignDistribution:
    """Exact distribution of a fixed-size design over its full support."""

    support: np.ndarray      # (S, n) sorted unit indices per sample
    probs: np.ndarray        # (S,)
    n_population: int
    n: int

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.int64)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.support.ndim != 2 or self.support.shape[0] != self.probs.size:
            raise ValueError("support and probs must have matching lengths")
        if np.any(self.probs < 0):
            raise ValueError("negative sample probability")
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValueError("sample probabilities must sum to 1")
        self._membership = None

    def membership(self) -> np.ndarray:
        """(S, N) 0/1 matrix; row s marks the units of support sample s."""
        if self._membership is None:
            S = self.support.shape[0]
            Z = np.zeros((S, self.n_population), dtype=np.float64)
            rows = np.repeat(np.arange(S), self.support.shape[1])
            Z[rows, self.support.ravel()] = 1.0
            self._membership = Z
        return self._membership

    def first_order(self) -> np.ndarray:
        """pi_k = sum of p(s) over samples containing k."""
        return self.membership().T @ self.probs


# ---------------------------------------------------------------------------
# Inclusion probabilities proportional to size, capped at 1
# ---------------------------------------------------------------------------

def inclusion_from_auxiliary(x, n: int, delta: float = 0.0) -> InclusionProfile:
    """pi_k = n * max(delta, x_k) / sum max(delta, x_j), iteratively capped.

    Units whose proportional probability exceeds 1 are fixed at 1 and the
    leftover sample size is re-proportioned over the rest until all
    probabilities sit in (0, 1]; the capped units are reported.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("x must be a vector with at least two entries")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("auxiliary sizes must be finite and positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    N = x.size
    if not (0 < n < N):
        raise ValueError(f"need 0 < n < N, got n={n}, N={N}")

    size = np.maximum(delta, x)
    pi = np.zeros(N)
    capped = np.zeros(N, dtype=bool)
    while True:
        free = ~capped
        n_free = n - int(capped.sum())
        if n_free <= 0:
            raise NumericError("capping exhausted the sample size; some units would get pi=0")
        pi[free] = n_free * size[free] / size[free].sum()
        over = free & (pi >= 1.0)
        if not np.any(over):
            break
        capped |= over
        pi[capped] = 1.0
    pi[capped] = 1.0
    return InclusionProfile(pi=pi, n=n, capped_ids=tuple(np.flatnonzero(capped).tolist()))


# ---------------------------------------------------------------------------
# Conditional Poisson (rejective): inclusion probabilities and calibration.
# e_j denotes the elementary symmetric polynomial of the odds w_k = p_k/(1-p_k);
# under the size-n conditional design, pi_k = w_k * e_{n-1}(w without k) / e_n(w).
# ---------------------------------------------------------------------------

def _log_esp_forward(logw: np.ndarray, n: int) -> np.ndarray:
    """F[k, j] = log e_j(w_1..w_k) for j <= n, via the stable add-one-odds recursion."""
    N = logw.size
    F = np.full((N + 1, n + 1), -np.inf)
    F[:, 0] = 0.0
    for k in range(1, N + 1):
        hi = min(k, n)
        F[k, 1:hi + 1] = np.logaddexp(F[k - 1, 1:hi + 1], logw[k - 1] + F[k - 1, 0:hi])
    return F


def _log_esp_backward(logw: np.ndarray, n: int) -> np.ndarray:
    """B[k, j] = log e_j(w_{k+1}..w_N) for j <= n."""
    N = logw.size
    B = np.full((N + 1, n + 1), -np.inf)
    B[:, 0] = 0.0
    for k in range(N - 1, -1, -1):
        hi = min(N - k, n)
        B[k, 1:hi + 1] = np.logaddexp(B[k + 1, 1:hi + 1], logw[k] + B[k + 1, 0:hi])
    return B


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1)
    finite = np.isfinite(m)
    out = np.full(a.shape[0], -np.inf)
    if np.any(finite):
        shifted = a[finite] - m[finite, None]
        out[finite] = m[finite] + np.log(np.sum(np.exp(shifted), axis=1))
    return out


def _cp_first_order_free(p: np.ndarray, n: int) -> np.ndarray:
    """First-order inclusions of the size-n conditional Poisson design, all p in (0,1)."""
    N = p.size
    if n == 0:
        return np.zeros(N)
    if n == N:
        return np.ones(N)
    logw = np.log(p) - np.log1p(-p)
    F = _log_esp_forward(logw, n)
    B = _log_esp_backward(logw, n)
    # log e_{n-1}(w without k) = LSE_j { F[k-1, j] + B[k, n-1-j] }
    terms = F[0:N, 0:n] + B[1:N + 1, n - 1::-1]
    log_enk = _logsumexp_rows(terms)
    logpi = logw + log_enk - F[N, n]
    return np.exp(logpi)


def cp_first_order_probabilities(p, n: int) -> np.ndarray:
    """Inclusion probabilities of conditional Poisson sampling with size n.

    Entries with p_k = 1 are treated as force-included: they are removed
    from the conditioning and the residual size is spread over the rest.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("working probabilities must lie in (0, 1]")
    forced = p >= 1.0
    n_free = n - int(forced.sum())
    if n_free < 0:
        raise ValueError("more forced units than the sample size")
    pi = np.ones(p.size)
    free = ~forced
    if np.any(free):
        pi[free] = _cp_first_order_free(p[free], n_free)
    return pi


def calibrate_cp_working_probs(profile: InclusionProfile, tol: float = 1e-10,
                               max_iter: int = 200) -> np.ndarray:
    """Working probabilities p whose size-n conditional Poisson design hits pi.

    Damped multiplicative fixed point p <- p * pi / pi(p); the returned p is
    canonicalized so that sum(p) = n (the conditional design is invariant to
    a common rescaling of the odds, so this costs nothing and makes the
    output, and hence recalibration, reproducible).
    """
    pi = profile.pi
    n = profile.n
    if np.any(pi >= 1.0):
        raise ValueError("pi_k = 1 present; remove capped units before calibrating")
    if profile.d_pi <= 0:
        raise ValueError("d(pi) must be positive")

    p = pi.copy()
    prev_gap = np.inf
    gap = np.inf
    for _ in range(max_iter):
        cur = _cp_first_order_free(p, n)
        gap = float(np.max(np.abs(cur - pi)))
        if gap < tol:
            break
        step = pi / cur
        if gap > prev_gap:
            step = np.sqrt(step)  # halve the step in log space when overshooting
        p = np.clip(p * step, 1e-12, 1.0 - 1e-12)
        prev_gap = gap
    else:
        raise NumericError(f"calibration did not converge: sup-norm gap {gap:.3e} after {max_iter} iterations")

    # Gauge: rescale odds so sum(p) = n, bisecting on the common odds factor.
    w = p / (1.0 - p)
    lo, hi = -80.0, 80.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = float(np.sum(1.0 / (1.0 + np.exp(-(np.log(w) + mid)))))
        if s < n:
            lo = mid
        else:
            hi = mid
    c = np.exp(0.5 * (lo + hi))
    return (c * w) / (1.0 + c * w)


def rejective_working_probs(profile: InclusionProfile, tol: float = 1e-10,
                            max_iter: int = 200) -> np.ndarray:
    """Calibrated working probabilities, with capped units force-included.

    Convenience wrapper: units with pi_k = 1 get p_k = 1 (their inclusion is
    deterministic) and the calibration runs on the remaining sub-profile.
    """
    pi = profile.pi
    capped = pi >= 1.0
    if not np.any(capped):
        return calibrate_cp_working_probs(profile, tol=tol, max_iter=max_iter)
    free = ~capped
    sub = InclusionProfile(pi=pi[free], n=profile.n - int(capped.sum()))
    p = np.ones(pi.size)
    p[free] = calibrate_cp_working_probs(sub, tol=tol, max_iter=max_iter)
    return p


# ---------------------------------------------------------------------------
# Samplers. Each takes an explicit Generator and is pure given its stream.
# Rejection loops draw in fixed-size batches and abort past the attempt bound.
# ---------------------------------------------------------------------------

# Rejection batches start small (cheap single draws) and double up to the cap
# (good bulk throughput); the policy is fixed, so draws stay deterministic
# given the stream.
_BATCH_START = 64
_BATCH_CAP = 8192


def _membership_to_draw(row: np.ndarray) -> SampleDraw:
    idx = np.flatnonzero(row)
    return SampleDraw(indices=idx, membership=row.astype(np.uint8))


def draw_poisson(p, rng) -> SampleDraw:
    """Independent Bernoulli(p_k) memberships; the size is random."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = as_generator(rng)
    row = rng.random(p.size) < p
    return _membership_to_draw(row)


def draw_srswor(N: int, n: int, rng) -> SampleDraw:
    """Uniform size-n sample from {0..N-1} without replacement."""
    if n > N:
        raise ValueError("n cannot exceed N")
    rng = as_generator(rng)
    idx = np.sort(rng.choice(N, size=n, replace=False))
    row = np.zeros(N, dtype=np.uint8)
    row[idx] = 1
    return SampleDraw(indices=idx, membership=row)


def draw_srswor_many(N: int, n: int, rng, n_draws: int) -> np.ndarray:
    """(n_draws, N) membership rows of independent SRSWOR samples."""
    if n > N:
        raise ValueError("n cannot exceed N")
    rng = as_generator(rng)
    keys = rng.random((n_draws, N))
    idx = np.argpartition(keys, n - 1, axis=1)[:, :n]
    out = np.zeros((n_draws, N), dtype=np.uint8)
    np.put_along_axis(out, idx, 1, axis=1)
    return out


def draw_rejective_many(p, n: int, rng, n_draws: int,
                        max_attempts: int = MAX_REJECTION_ATTEMPTS) -> np.ndarray:
    """Membership rows of conditional Poisson samples: Poisson retries until size n.

    `max_attempts` bounds the Poisson attempts per accepted draw (on
    aggregate); exceeding it signals miscalibrated p or extreme pi.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("working probabilities must lie in (0, 1]")
    rng = as_generator(rng)
    budget = max_attempts * n_draws
    out = np.empty((n_draws, p.size), dtype=np.uint8)
    got = 0
    attempts = 0
    block = _BATCH_START
    while got < n_draws:
        if attempts >= budget:
            raise NumericError(
                f"rejective sampler: no size-{n} sample in {attempts} Poisson attempts")
        block = min(block, budget - attempts)
        rows = rng.random((block, p.size)) < p
        attempts += block
        hit = np.flatnonzero(rows.sum(axis=1) == n)[: n_draws - got]
        if hit.size:
            out[got:got + hit.size] = rows[hit]
            got += hit.size
        block = min(block * 2, _BATCH_CAP)
    return out


def draw_rejective(profile: InclusionProfile, p, rng,
                   max_attempts: int = MAX_REJECTION_ATTEMPTS) -> SampleDraw:
    """One conditional Poisson (rejective) sample of the profile's fixed size."""
    row = draw_rejective_many(p, profile.n, rng, 1, max_attempts=max_attempts)[0]
    return _membership_to_draw(row)


def draw_sampford_many(pi, n: int, rng, n_draws: int,
                       max_attempts: int = MAX_REJECTION_ATTEMPTS) -> np.ndarray:
    """Membership rows of Sampford samples.

    One unit is drawn with probabilities pi/n, the other n-1 with replacement
    proportionally to pi/(1-pi); the attempt is kept only if all n units are
    distinct.
    """
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0) or np.any(pi >= 1):
        raise ValueError("Sampford requires all pi in (0, 1)")
    if n < 2:
        raise ValueError("Sampford requires n >= 2")
    rng = as_generator(rng)
    N = pi.size
    first_p = pi / pi.sum()
    q = pi / (1.0 - pi)
    q = q / q.sum()
    budget = max_attempts * n_draws
    out = np.empty((n_draws, N), dtype=np.uint8)
    got = 0
    attempts = 0
    block = _BATCH_START
    while got < n_draws:
        if attempts >= budget:
            raise NumericError(f"Sampford sampler: attempt bound {attempts} exceeded")
        block = min(block, budget - attempts)
        first = rng.choice(N, size=(block, 1), p=first_p)
        rest = rng.choice(N, size=(block, n - 1), p=q)
        attempts += block
        cand = np.sort(np.concatenate([first, rest], axis=1), axis=1)
        distinct = np.all(np.diff(cand, axis=1) > 0, axis=1)
        hit = np.flatnonzero(distinct)[: n_draws - got]
        for row_idx in hit:
            out[got].fill(0)
            out[got, cand[row_idx]] = 1
            got += 1
        block = min(block * 2, _BATCH_CAP)
    return out


def draw_sampford(profile: InclusionProfile, rng,
                  max_attempts: int = MAX_REJECTION_ATTEMPTS) -> SampleDraw:
    """One Sampford sample of the profile's fixed size."""
    row = draw_sampford_many(profile.pi, profile.n, rng, 1, max_attempts=max_attempts)[0]
    return _membership_to_draw(row)


# ---------------------------------------------------------------------------
# Exact enumeration oracle
# ---------------------------------------------------------------------------

def _check_support_size(n_free: int, k_free: int, max_support: float) -> None:
    from math import comb
    size = comb(n_free, k_free)
    if size > max_support:
        raise ValueError(f"support of size C({n_free},{k_free})={size} exceeds the cap {int(max_support)}")


def enumerate_design(kind: str, n: int, *, p=None, pi=None, N: int | None = None,
                     max_support: float = 1e6) -> DesignDistribution:
    """Exact distribution over all size-n samples for small populations.

    kind "rejective" needs working probabilities `p` (entries equal to 1 are
    force-included); "sampford" needs first-order probabilities `pi` (all
    below 1); "srswor" needs the population size `N`.
    """
    if kind == "srswor":
        if N is None:
            raise ValueError("srswor enumeration needs N")
        _check_support_size(N, n, max_support)
        support = np.array(list(itertools.combinations(range(N), n)), dtype=np.int64)
        probs = np.full(support.shape[0], 1.0 / support.shape[0])
        return DesignDistribution(support=support, probs=probs, n_population=N, n=n)

    if kind == "rejective":
        if p is None:
            raise ValueError("rejective enumeration needs working probabilities p")
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0) or np.any(p > 1):
            raise ValueError("working probabilities must lie in (0, 1]")
        N = p.size
        forced = np.flatnonzero(p >= 1.0)
        free = np.flatnonzero(p < 1.0)
        k_free = n - forced.size
        if k_free < 0:
            raise ValueError("more forced units than the sample size")
        _check_support_size(free.size, k_free, max_support)
        logw = np.log(p[free]) - np.log1p(-p[free])
        support = []
        logweights = []
        for combo in itertools.combinations(range(free.size), k_free):
            units = np.sort(np.concatenate([forced, free[list(combo)]]))
            support.append(units)
            logweights.append(logw[list(combo)].sum())
        logweights = np.asarray(logweights)
        logweights -= logweights.max()
        probs = np.exp(logweights)
        probs /= probs.sum()
        return DesignDistribution(support=np.asarray(support, dtype=np.int64),
                                  probs=probs, n_population=N, n=n)

    if kind == "sampford":
        if pi is None:
            raise ValueError("sampford enumeration needs pi")
        pi = np.asarray(pi, dtype=float)
        if np.any(pi <= 0) or np.any(pi >= 1):
            raise ValueError("Sampford requires all pi in (0, 1)")
        N = pi.size
        _check_support_size(N, n, max_support)
        # p(s) proportional to (sum_{k in s} (1-pi_k)) * prod_{k in s} pi_k/(1-pi_k)
        logw = np.log(pi) - np.log1p(-pi)
        support = np.array(list(itertools.combinations(range(N), n)), dtype=np.int64)
        lw = logw[support].sum(axis=1)
        slack = (1.0 - pi)[support].sum(axis=1)
        lw = lw + np.log(slack)
        lw -= lw.max()
        probs = np.exp(lw)
        probs /= probs.sum()
        return DesignDistribution(support=support, probs=probs, n_population=N, n=n)

    raise ValueError(f"unknown design kind {kind!r}")


# ---------------------------------------------------------------------------
# Second-order inclusion probabilities
# ---------------------------------------------------------------------------

def second_order_exact(dist: DesignDistribution) -> SecondOrderMatrix:
    """pi_kl from the enumerated distribution; the diagonal holds pi_k."""
    Z = dist.membership()
    pikl = Z.T @ (Z * dist.probs[:, None])
    pikl = 0.5 * (pikl + pikl.T)
    return SecondOrderMatrix(pikl=pikl, source="exact-enumeration")


def second_order_hajek(profile: InclusionProfile) -> SecondOrderMatrix:
    """Hajek approximation pi_kl = pi_k pi_l (1 - (1-pi_k)(1-pi_l)/d(pi))."""
    if profile.d_pi <= 0:
        raise ValueError("d(pi) must be positive")
    pi = profile.pi
    one_minus = 1.0 - pi
    pikl = np.outer(pi, pi) * (1.0 - np.outer(one_minus, one_minus) / profile.d_pi)
    np.fill_diagonal(pikl, pi)
    return SecondOrderMatrix(pikl=pikl, source="hajek-approx")


# ---------------------------------------------------------------------------
# Entropy, divergence and fourth-order dependence diagnostics
# ---------------------------------------------------------------------------

def entropy(dist: DesignDistribution) -> float:
    """Shannon entropy -sum p ln p with the 0 ln 0 = 0 convention."""
    p = dist.probs
    mask = p > 0
    return float(-np.sum(p[mask] * np.log(p[mask])))


def _aligned_probs(dist_p: DesignDistribution, dist_q: DesignDistribution):
    if dist_p.n_population != dist_q.n_population or dist_p.n != dist_q.n:
        raise ValueError("distributions must live on the same sample universe")
    if dist_p.support.shape == dist_q.support.shape and np.array_equal(dist_p.support, dist_q.support):
        return dist_p.probs, dist_q.probs
    table = {tuple(row): q for row, q in zip(dist_q.support, dist_q.probs)}
    q = np.array([table.get(tuple(row), 0.0) for row in dist_p.support])
    return dist_p.probs, q


def kl_divergence(dist_p: DesignDistribution, dist_q: DesignDistribution) -> float:
    """K(p, q) = sum p ln(p/q); +inf when p charges a sample q does not."""
    p, q = _aligned_probs(dist_p, dist_q)
    active = p > 0
    if np.any(q[active] == 0):
        return float("inf")
    return float(np.sum(p[active] * np.log(p[active] / q[active])))


def total_variation(dist_p: DesignDistribution, dist_q: DesignDistribution) -> float:
    """Total variation distance between two enumerated designs."""
    p, q = _aligned_probs(dist_p, dist_q)
    return 0.5 * float(np.sum(np.abs(p - q)))


def a5_statistic(dist: DesignDistribution, pikl: SecondOrderMatrix) -> float:
    """Largest fourth-order indicator covariance over distinct quadruples.

    max over distinct (k1,l1,k2,l2) of
    |E[(1_{k1 l1} - pi_k1 pi_l1)(1_{k2 l2} - pi_k2 pi_l2)]|, computed from
    exact quadruple inclusion probabilities of the enumerated design.
    """
    N = dist.n_population
    if N < 4:
        raise ValueError("the quadruple statistic needs at least 4 units")
    if N > A5_MAX_UNITS:
        raise ValueError(f"quadruple enumeration capped at N={A5_MAX_UNITS}")
    Z = dist.membership()
    P = dist.probs
    pi = dist.first_order()
    pm = pikl.pikl
    best = 0.0
    for a, b, c, d in itertools.combinations(range(N), 4):
        pi4 = float(P @ (Z[:, a] * Z[:, b] * Z[:, c] * Z[:, d]))
        for (k1, l1), (k2, l2) in (((a, b), (c, d)), ((a, c), (b, d)), ((a, d), (b, c))):
            v = (pi4 - pi[k1] * pi[l1] * pm[k2, l2] - pi[k2] * pi[l2] * pm[k1, l1]
                 + pi[k1] * pi[l1] * pi[k2] * pi[l2])
            best = max(best, abs(v))
    return best
