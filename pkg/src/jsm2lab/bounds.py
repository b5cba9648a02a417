"""Closed-form failure-probability bounds and measurement-count conditions.

Everything here is a pure function of problem parameters. The achievability
side bounds the probability that exhaustive typicality decoding fails (the
union of "true support not typical" and "some incorrect support typical"),
the converse side lower-bounds what any decoder can achieve on the minimal
amplitude class, and the sufficiency helpers expose the measurement counts
under which the upper bound vanishes.

All probabilities are computed and stored in the log domain (nats):
exponents scale like S(M-K) and overflow doubles immediately otherwise.
Binomial coefficients go through log-gamma and the combined bound through
log-sum-exp. Raw log values are preserved alongside clamped probabilities
so dominance comparisons stay exact even where a bound exceeds one.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .ensemble import ProblemParams
from .errors import (
    DeltaAdmissibilityError,
    DomainError,
    InvalidParameterError,
    InvalidRangeError,
)

_LOG2 = math.log(2.0)


class Regime(str, enum.Enum):
    """Sparsity regime selecting the form of a sufficiency condition."""

    LINEAR = "linear"
    SUBLINEAR = "sublinear"


# ---- Scalar kernels ------------------------------------------------------


def p_chernoff(x: float, beta: float) -> float:
    """Log of the chi-square tail kernel x^beta * exp(-beta(x-1)).

    Returns beta * (log x - (x - 1)) in nats. Zero at x = 1 and strictly
    negative elsewhere, so the kernel is a probability for every x > 0.
    """
    if not x > 0:
        raise DomainError(f"kernel argument must be > 0, got {x}")
    if not beta > 0:
        raise DomainError(f"kernel exponent must be > 0, got {beta}")
    return beta * (math.log(x) - (x - 1.0))


def log_binom(n: int, k: int) -> float:
    """log C(n, k) in nats via log-gamma."""
    if not 0 <= k <= n:
        raise InvalidRangeError(f"need 0 <= k <= n, got k={k}, n={n}")
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def t_value(params: ProblemParams) -> float:
    """Relative gap t = (1 - 1/rho) / (1 + 1/SNR_min), always in (0, 1).

    This single number drives every sufficiency constant: 1 - t is the
    centered mean of the incorrect-support statistic under the canonical
    slack, at the least-favorable signal energy.
    """
    t = (1.0 - 1.0 / params.rho) / (1.0 + 1.0 / params.snr_min)
    if not 0.0 < t < 1.0:
        raise DomainError(f"relative gap t={t} outside (0, 1)")
    return t


def _check_delta(delta: float, k: int, m: int, floor_sq: float) -> None:
    limit = (1.0 - k / m) * floor_sq
    if not 0.0 < delta < limit:
        raise DeltaAdmissibilityError(
            f"slack delta={delta} violates 0 < delta < (1 - K/M) * x_min^2 = {limit}"
        )


# ---- Reports -------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """Every closed-form quantity attached to one parameter point.

    log_upper_perr is the raw combined log bound on the failure event of
    typicality decoding; upper_perr clamps it into [0, 1]. lower_perr is
    the converse bound on the worst-case error of any decoder over the
    minimal-amplitude signal class; it bounds a different quantity than
    the upper bound and the two need not bracket a common number.
    log_p1_exp and log_p2_exp are the looser exponential-form bounds
    evaluated at the least-favorable homogeneous signal energy, so
    log_p_d1 <= log_p1_exp and log_p_d2 <= log_p2_exp hold pointwise.
    """

    params: ProblemParams
    d1: float
    t: float
    d2_alpha_star: float
    alpha_star: float
    log_p_d1: float
    log_p_d2: float
    log_binom: float
    log_upper_perr: float
    log_p1_exp: float
    log_p2_exp: float
    mu_I: float
    mu_J: float
    log_mu_I: float
    log_mu_J: float
    lower_perr: float

    @property
    def upper_perr(self) -> float:
        """Combined upper bound clamped into [0, 1]."""
        return min(1.0, math.exp(self.log_upper_perr))

    def csv_row(self) -> str:
        p = self.params
        cells = [
            str(p.n),
            str(p.k),
            str(p.m),
            str(p.s),
            repr(float(p.sigma2)),
            repr(float(p.xmin2)),
            repr(float(p.rho)),
            repr(self.d1),
            repr(self.t),
            repr(self.d2_alpha_star),
            repr(self.log_p_d1),
            repr(self.log_p_d2),
            repr(self.log_upper_perr),
            repr(self.lower_perr),
            repr(self.mu_I),
            repr(self.mu_J),
            repr(self.log_p1_exp),
            repr(self.log_p2_exp),
            repr(self.alpha_star),
            repr(self.upper_perr),
        ]
        return ",".join(cells)


BOUND_REPORT_CSV_HEADER = (
    "n,k,m,s,sigma2,xmin2,rho,d1,t,d2,log_p_d1,log_p_d2,log_upper,lower,"
    "mu_i,mu_j,log_p1_exp,log_p2_exp,alpha_star,upper_clamped"
)


@dataclass(frozen=True)
class SufficiencyReport:
    """Measurement and vector-count conditions at one parameter point.

    The cor2 fields are populated only when the chosen split constant
    alpha is backed by enough SNR (snr_threshold_cor2 records the needed
    level); otherwise they are NaN. S_cor3 is evaluated at the minimal
    M = K + 1 regardless of the M carried by params.
    """

    params: ProblemParams
    nu1: float
    nu2: float
    M_suff_linear: float
    M_suff_sublinear: float
    M_suff_cor1_linear: float
    M_suff_cor1_sublinear: float
    M_suff_cor2_linear: float
    M_suff_cor2_sublinear: float
    snr_threshold_cor2: float
    S_cor3: float
    M_necessary: float

    def csv_row(self) -> str:
        p = self.params
        cells = [
            str(p.n),
            str(p.k),
            str(p.m),
            str(p.s),
            repr(float(p.sigma2)),
            repr(float(p.xmin2)),
            repr(float(p.rho)),
            repr(self.nu1),
            repr(self.nu2),
            repr(self.M_suff_linear),
            repr(self.M_suff_sublinear),
            repr(self.M_suff_cor1_linear),
            repr(self.M_suff_cor1_sublinear),
            repr(self.M_suff_cor2_linear),
            repr(self.M_suff_cor2_sublinear),
            repr(self.snr_threshold_cor2),
            repr(self.S_cor3),
            repr(self.M_necessary),
        ]
        return ",".join(cells)


SUFFICIENCY_CSV_HEADER = (
    "n,k,m,s,sigma2,xmin2,rho,nu1,nu2,m_linear,m_sublinear,m_cor1_linear,"
    "m_cor1_sublinear,m_cor2_linear,m_cor2_sublinear,snr_threshold_cor2,"
    "s_cor3,m_necessary"
)


# ---- Achievability -------------------------------------------------------


def log_mu_factors(params: ProblemParams) -> Tuple[float, float]:
    """Per-vector log contraction factors (log mu_I, log mu_J), both < 0.

    log mu_I = ((M-K)/2)(log(1+d1) - d1) at the active slack; log mu_J =
    ((M-K)/2)(log(1-t) + t) at the canonical slack and least-favorable
    energy. The S-vector tail terms are exactly S times these.
    """
    k, m = params.k, params.m
    if not m >= k + 1:
        raise DomainError(f"need M >= K+1, got M={m}, K={k}")
    d1 = m * params.delta / ((m - k) * params.sigma2)
    t = t_value(params)
    log_mu_i = 0.5 * (m - k) * (math.log1p(d1) - d1)
    log_mu_j = 0.5 * (m - k) * (math.log1p(-t) + t)
    return log_mu_i, log_mu_j


def mu_factors(params: ProblemParams) -> Tuple[float, float]:
    """Per-vector contraction factors (mu_I, mu_J), each in (0, 1)."""
    log_mu_i, log_mu_j = log_mu_factors(params)
    return math.exp(log_mu_i), math.exp(log_mu_j)


def exp_ineq_bounds(
    params: ProblemParams,
    x_min_J_sq: float,
    alpha_list: Sequence[float],
) -> Tuple[float, float]:
    """Exponential-form log bounds on the two failure events.

    x_min_J_sq is the smallest per-vector energy missed by the candidate
    support and alpha_list the per-vector centering energies (noise floor
    plus missed energy). Requires the slack to satisfy
    0 < delta < (1 - K/M) * x_min_J_sq. Returns (log_p1_exp, log_p2_exp).
    """
    k, m, s = params.k, params.m, params.s
    sigma2 = params.sigma2
    delta = params.delta
    if not x_min_J_sq > 0:
        raise InvalidRangeError(f"x_min_J_sq must be > 0, got {x_min_J_sq}")
    _check_delta(delta, k, m, x_min_J_sq)
    alphas = np.asarray(alpha_list, dtype=float)
    if alphas.shape != (s,):
        raise InvalidRangeError(f"expected {s} energies, got shape {alphas.shape}")
    if not (alphas > 0).all():
        raise InvalidRangeError("centering energies must all be > 0")
    log_p1 = -(s * delta**2 / (4.0 * sigma2**2)) * m**2 / (m - k + 2.0 * delta * m / sigma2)
    gap = x_min_J_sq - m * delta / (m - k)
    log_p2 = -(s**2 * (m - k) / (4.0 * float(np.sum(alphas**2)))) * gap**2
    return float(log_p1), float(log_p2)


def upper_bound_perr(params: ProblemParams) -> BoundReport:
    """Combined closed-form bound on the decoding failure event.

    Evaluates the two tail terms at the least-favorable signal energy
    (noise floor plus minimal on-support energy), combines them with the
    candidate count via log-sum-exp, and gathers every intermediate value
    into a BoundReport. The active slack must satisfy
    0 < delta < (1 - K/M) * x_min^2.
    """
    n, k, m, s = params.n, params.k, params.m, params.s
    sigma2, xmin2 = params.sigma2, params.xmin2
    delta = params.delta
    _check_delta(delta, k, m, xmin2)
    d1 = m * delta / ((m - k) * sigma2)
    alpha_star = sigma2 + xmin2
    d2 = ((m - k) * sigma2 + m * delta) / ((m - k) * alpha_star)
    beta = 0.5 * s * (m - k)
    log_p_d1 = p_chernoff(1.0 + d1, beta)
    log_p_d2 = p_chernoff(d2, beta)
    lb = log_binom(n, k)
    log_upper = float(np.logaddexp(_LOG2 + log_p_d1, lb + log_p_d2))
    t = t_value(params)
    log_mu_i, log_mu_j = log_mu_factors(params)
    log_p1_exp, log_p2_exp = exp_ineq_bounds(params, xmin2, [alpha_star] * s)
    return BoundReport(
        params=params,
        d1=d1,
        t=t,
        d2_alpha_star=d2,
        alpha_star=alpha_star,
        log_p_d1=log_p_d1,
        log_p_d2=log_p_d2,
        log_binom=lb,
        log_upper_perr=log_upper,
        log_p1_exp=log_p1_exp,
        log_p2_exp=log_p2_exp,
        mu_I=math.exp(log_mu_i),
        mu_J=math.exp(log_mu_j),
        log_mu_I=log_mu_i,
        log_mu_J=log_mu_j,
        lower_perr=fano_lower_perr(params),
    )


# ---- Sufficient measurement counts --------------------------------------


def _nu2(t: float) -> float:
    return -2.0 / (math.log1p(-t) + t)


def sufficient_M(params: ProblemParams, regime: Regime = Regime.SUBLINEAR) -> float:
    """Measurement count above which the combined bound decays to zero.

    Sublinear regime: K + nu2 * (K/S) * log(N/K) with
    nu2 = -2 / (log(1-t) + t). Linear regime: K + nu1 * K/S with
    nu1 = nu2 * (1 - log(K/N)). Strict inequality against this value is
    the sufficiency condition.
    """
    regime = Regime(regime)
    n, k, s = params.n, params.k, params.s
    t = t_value(params)
    nu2 = _nu2(t)
    if regime is Regime.SUBLINEAR:
        return k + nu2 * (k / s) * math.log(n / k)
    nu1 = nu2 * (1.0 - math.log(k / n))
    return k + nu1 * k / s


def sufficient_M_corollary1(params: ProblemParams, regime: Regime = Regime.SUBLINEAR) -> float:
    """Simpler, strictly looser variant of sufficient_M.

    Replaces nu2 by the explicit envelope 4 / t^2, trading tightness for a
    formula with no transcendental solve.
    """
    regime = Regime(regime)
    n, k, s = params.n, params.k, params.s
    t = t_value(params)
    factor = 4.0 / (s * t * t)
    if regime is Regime.SUBLINEAR:
        return k + factor * k * math.log(n / k)
    return k + factor * k * (1.0 - math.log(k / n))


def cor2_snr_threshold(alpha: float, rho: float) -> float:
    """Minimum SNR_min backing the split constant alpha in (0, 1 - 1/rho)."""
    gap = 1.0 - 1.0 / rho
    if not 0.0 < alpha < gap:
        raise InvalidRangeError(f"alpha must lie in (0, {gap}), got {alpha}")
    return alpha / (gap - alpha)


def sufficient_M_corollary2(
    params: ProblemParams,
    alpha: float,
    regime: Regime = Regime.SUBLINEAR,
) -> float:
    """SNR-explicit loosening of sufficient_M with split constant alpha.

    Valid only when SNR_min >= alpha / ((1 - 1/rho) - alpha); below that
    threshold a DomainError names the required level. The additive factor
    is (1/S + 1/(S*SNR_min)) * (4 - 2 alpha) / ((1 - 1/rho) alpha), which
    always dominates the tight nu2/S factor.
    """
    regime = Regime(regime)
    n, k, s = params.n, params.k, params.s
    snr = params.snr_min
    threshold = cor2_snr_threshold(alpha, params.rho)
    if snr < threshold:
        raise DomainError(
            f"alpha={alpha} requires SNR_min >= {threshold}, got SNR_min={snr}"
        )
    gap = 1.0 - 1.0 / params.rho
    factor = (1.0 / s + 1.0 / (s * snr)) * (4.0 - 2.0 * alpha) / (gap * alpha)
    if regime is Regime.SUBLINEAR:
        return k + factor * k * math.log(n / k)
    return k + factor * k * (1.0 - math.log(k / n))


def corollary3_S_bound(params: ProblemParams, epsilon: float) -> float:
    """Vector count guaranteeing failure probability below epsilon at M = K+1.

    Requires params.m == k + 1 (the minimal measurement count) and uses the
    canonical slack x_min^2 / (rho (K+1)) regardless of any override. The
    value decreases as SNR_min grows.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidRangeError(f"epsilon must lie in (0, 1), got {epsilon}")
    n, k, m = params.n, params.k, params.m
    if m != k + 1:
        raise InvalidParameterError(f"vector-count bound requires M = K+1, got M={m}, K={k}")
    delta = params.xmin2 / (params.rho * (k + 1))
    d1 = m * delta / ((m - k) * params.sigma2)
    t = t_value(params)
    log_mu_i = 0.5 * (math.log1p(d1) - d1)
    log_mu_j = 0.5 * (math.log1p(-t) + t)
    log_c2 = float(np.logaddexp(log_binom(n, k), _LOG2))
    return (log_c2 - math.log(epsilon)) * max(1.0 / abs(log_mu_i), 1.0 / abs(log_mu_j))


def corollary3_S_bound_high_snr(params: ProblemParams, epsilon: float) -> float:
    """Limit of corollary3_S_bound as SNR_min grows without bound.

    The correct-support term vanishes and the incorrect-support factor
    tends to 2 / |1 - 1/rho - log rho|, leaving a function of N, K, rho,
    and epsilon only.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidRangeError(f"epsilon must lie in (0, 1), got {epsilon}")
    n, k = params.n, params.k
    rho = params.rho
    log_c2 = float(np.logaddexp(log_binom(n, k), _LOG2))
    return (log_c2 - math.log(epsilon)) * 2.0 / abs(1.0 - 1.0 / rho - math.log(rho))


# ---- Converse ------------------------------------------------------------


def necessary_m_value(n: int, k: int, s: int, snr_min: float) -> float:
    """Measurement count below which no decoder is reliable (raw scalars).

    Returns (2 K log(N/K) - 2 log 2) / (S log(1 + K SNR_min)). When the
    numerator is nonpositive (N/K too small) the bound is vacuous: a
    RuntimeWarning is emitted and 0 is returned.
    """
    if not k * snr_min > 0:
        raise DomainError(f"need K * SNR_min > 0, got K={k}, SNR_min={snr_min}")
    if not n >= k >= 1:
        raise InvalidRangeError(f"need N >= K >= 1, got N={n}, K={k}")
    numerator = 2.0 * k * math.log(n / k) - 2.0 * _LOG2
    if numerator <= 0.0:
        warnings.warn(
            f"necessary measurement count is vacuous at N={n}, K={k} "
            "(candidate set too small); returning 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    return numerator / (s * math.log1p(k * snr_min))


def necessary_M(params: ProblemParams) -> float:
    """Measurement count below which every decoder has failure bounded away from 0."""
    return necessary_m_value(params.n, params.k, params.s, params.snr_min)


def fano_lower_value(n: int, k: int, m: int, s: int, snr_min: float) -> float:
    """Worst-case failure floor for any decoder (raw scalars).

    Returns max(0, 1 - (S M log(1 + K SNR_min)/2 + log 2) / (K log(N/K))).
    The floor applies to the minimal-amplitude signal class, uniformly over
    decoders.
    """
    if not n > k >= 1:
        raise InvalidRangeError(f"need N > K >= 1, got N={n}, K={k}")
    if not snr_min > 0:
        raise DomainError(f"SNR_min must be > 0, got {snr_min}")
    if m < 0 or s < 1:
        raise InvalidRangeError(f"need M >= 0 and S >= 1, got M={m}, S={s}")
    numerator = 0.5 * s * m * math.log1p(k * snr_min) + _LOG2
    return max(0.0, 1.0 - numerator / (k * math.log(n / k)))


def fano_lower_perr(params: ProblemParams) -> float:
    """Worst-case decoding-error floor at the given parameter point."""
    return fano_lower_value(params.n, params.k, params.m, params.s, params.snr_min)


# ---- Order-level comparison ----------------------------------------------


@dataclass(frozen=True)
class MmvOrderReport:
    """Order-level measurement counts for the shared-matrix baseline and this model.

    Both values hide unspecified constants; only their growth rates are
    meaningful, which ratio makes scannable across parameter sweeps. Never
    read these as calibrated measurement counts.
    """

    mmv_low_noise: float
    jsm2: float
    ratio: float
    comparison_basis: str = "order-only"


def mmv_order_comparison(params: ProblemParams) -> MmvOrderReport:
    """Order-level comparison against the shared-matrix multiple-vector baseline.

    mmv_low_noise carries K log N / min(K, S); jsm2 carries
    K + (nu2/S) K log(N/K). ratio = mmv_low_noise / jsm2. For S >= K the
    baseline stays pinned at K log N / K while the per-vector gain here
    keeps shrinking the additive term.
    """
    n, k, s = params.n, params.k, params.s
    mmv = k * math.log(n) / min(k, s)
    jsm2 = sufficient_M(params, Regime.SUBLINEAR)
    return MmvOrderReport(mmv_low_noise=mmv, jsm2=jsm2, ratio=mmv / jsm2)


# ---- Gathered sufficiency view -------------------------------------------


def sufficiency_report(
    params: ProblemParams,
    alpha: Optional[float] = None,
    epsilon: float = 0.01,
) -> SufficiencyReport:
    """Evaluate every sufficiency and necessity condition at one point.

    alpha defaults to the midpoint (1 - 1/rho)/2 of its admissible range.
    When SNR_min cannot back that alpha the cor2 fields are NaN rather
    than an error, so sweeps over low-SNR points still produce rows.
    """
    t = t_value(params)
    nu2 = _nu2(t)
    nu1 = nu2 * (1.0 - math.log(params.k / params.n))
    if alpha is None:
        alpha = 0.5 * (1.0 - 1.0 / params.rho)
    threshold = cor2_snr_threshold(alpha, params.rho)
    if params.snr_min >= threshold:
        cor2_lin = sufficient_M_corollary2(params, alpha, Regime.LINEAR)
        cor2_sub = sufficient_M_corollary2(params, alpha, Regime.SUBLINEAR)
    else:
        cor2_lin = math.nan
        cor2_sub = math.nan
    cor3_params = ProblemParams(
        n=params.n,
        k=params.k,
        m=params.k + 1,
        s=params.s,
        sigma2=params.sigma2,
        xmin2=params.xmin2,
        rho=params.rho,
    )
    return SufficiencyReport(
        params=params,
        nu1=nu1,
        nu2=nu2,
        M_suff_linear=sufficient_M(params, Regime.LINEAR),
        M_suff_sublinear=sufficient_M(params, Regime.SUBLINEAR),
        M_suff_cor1_linear=sufficient_M_corollary1(params, Regime.LINEAR),
        M_suff_cor1_sublinear=sufficient_M_corollary1(params, Regime.SUBLINEAR),
        M_suff_cor2_linear=cor2_lin,
        M_suff_cor2_sublinear=cor2_sub,
        snr_threshold_cor2=threshold,
        S_cor3=corollary3_S_bound(cor3_params, epsilon),
        M_necessary=necessary_M(params),
    )
