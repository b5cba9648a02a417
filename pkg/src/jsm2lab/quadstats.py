"""Distributional oracles for the quadratic forms behind the typicality test.

The summed residual energies are Gaussian quadratic forms y^T R y with a
block-diagonal, projector-shaped R: under the correct support every block
contributes the noise floor with multiplicity M-K, under an incorrect
support each block contributes its centering energy alpha_s (noise floor
plus missed signal energy) with the same multiplicity. This module carries
the exact means, variances, and moment generating functions of such forms,
plus direct samplers and an empirical check of the exponential tail
inequalities used by the closed-form bounds. The decoder and bound tests
lean on these as independent references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import binom

from .decoder import residual_energies
from .errors import DomainError, InvalidRangeError
from .seeding import Seed, as_rng

_SAMPLE_CHUNK = 1 << 22  # scalar draws per chunk when sampling tail sums


@dataclass(frozen=True)
class QuadFormSpec:
    """Eigenvalue description of a centered Gaussian quadratic form.

    The form is Q = sum_i lam_i g_i^2 with g_i i.i.d. standard normal;
    mean and variance are therefore sum(lam) and 2 sum(lam^2).
    """

    eigenvalues: Tuple[float, ...]
    mean: float = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        lams = tuple(float(v) for v in self.eigenvalues)
        if not lams:
            raise InvalidRangeError("eigenvalue list must be nonempty")
        if not all(v > 0 for v in lams):
            raise InvalidRangeError("eigenvalues must all be > 0")
        object.__setattr__(self, "eigenvalues", lams)
        object.__setattr__(self, "mean", float(sum(lams)))
        object.__setattr__(self, "variance", float(2.0 * sum(v * v for v in lams)))

    @classmethod
    def from_alpha(cls, alpha_list: Sequence[float], m: int, k: int) -> "QuadFormSpec":
        """Spec of the residual-sum form: each energy with multiplicity m - k."""
        if not m > k:
            raise InvalidRangeError(f"need M > K, got M={m}, K={k}")
        lams = tuple(float(a) for a in alpha_list for _ in range(m - k))
        return cls(lams)


def quadform_mgf(spec: QuadFormSpec, t: float) -> float:
    """Moment generating function E[exp(tQ)] = prod_i (1 - 2 t lam_i)^{-1/2}.

    Finite only for t < 1 / (2 max lam); evaluated through logs so large
    eigenvalue counts cannot overflow.
    """
    lam_max = max(spec.eigenvalues)
    if not t < 1.0 / (2.0 * lam_max):
        raise DomainError(
            f"mgf argument t={t} at or beyond singularity 1/(2*{lam_max})"
        )
    log_mgf = -0.5 * sum(math.log1p(-2.0 * t * lam) for lam in spec.eigenvalues)
    return math.exp(log_mgf)


def z_I_moments(m: int, k: int, s: int) -> Tuple[float, float]:
    """Mean and variance of the noise-normalized correct-support statistic.

    The statistic is chi-square with S(M-K) degrees of freedom, so the pair
    is (S(M-K), 2 S(M-K)).
    """
    if not m > k:
        raise InvalidRangeError(f"need M > K, got M={m}, K={k}")
    d = s * (m - k)
    return float(d), float(2 * d)


def z_J_moments(alpha_list: Sequence[float], m: int, k: int) -> Tuple[float, float]:
    """Mean and variance of the incorrect-support statistic.

    With per-vector centering energies alpha_s the pair is
    ((M-K) sum alpha, 2 (M-K) sum alpha^2).
    """
    if not m > k:
        raise InvalidRangeError(f"need M > K, got M={m}, K={k}")
    alphas = np.asarray(alpha_list, dtype=float)
    if not (alphas > 0).all():
        raise InvalidRangeError("centering energies must all be > 0")
    mean = (m - k) * float(alphas.sum())
    var = 2.0 * (m - k) * float(np.sum(alphas**2))
    return mean, var


# ---- Direct samplers -----------------------------------------------------


def sample_quadform(spec: QuadFormSpec, trials: int, seed: Seed) -> np.ndarray:
    """Draw trials independent realizations of the quadratic form."""
    if trials < 1:
        raise InvalidRangeError(f"need at least one trial, got {trials}")
    rng = as_rng(seed)
    lams = np.asarray(spec.eigenvalues)
    out = np.zeros(trials)
    step = max(1, _SAMPLE_CHUNK // lams.size)
    for lo in range(0, trials, step):
        hi = min(lo + step, trials)
        g = rng.standard_normal((hi - lo, lams.size))
        out[lo:hi] = (g * g) @ lams
    return out


def sample_z_correct(
    m: int,
    k: int,
    s: int,
    trials: int,
    seed: Seed,
    sigma2: float = 1.0,
) -> np.ndarray:
    """Sample the noise-normalized correct-support statistic end to end.

    Each trial draws fresh Gaussian sensing blocks and noise, projects the
    noise off every block's column span, and sums the residual energies
    over the S vectors, normalizing by the noise variance. Matches the
    decoder's statistic at the true support because the clean measurement
    component lies inside the span.
    """
    if trials < 1:
        raise InvalidRangeError(f"need at least one trial, got {trials}")
    if not sigma2 > 0:
        raise InvalidRangeError(f"sigma2 must be > 0, got {sigma2}")
    z_I_moments(m, k, s)  # reuse the M > K validation
    rng = as_rng(seed)
    out = np.empty(trials)
    step = max(1, _SAMPLE_CHUNK // (s * m * (k + 1)))
    for lo in range(0, trials, step):
        hi = min(lo + step, trials)
        b = hi - lo
        blocks = rng.standard_normal((b, s, m, k))
        noise = math.sqrt(sigma2) * rng.standard_normal((b, s, m))
        resid, rank_ok = residual_energies(blocks, noise)
        if not rank_ok.all():
            # Gaussian blocks are almost surely full rank; a failure here
            # means the tolerance is wrong, not the draw.
            raise DomainError("rank-deficient Gaussian block encountered")
        out[lo:hi] = resid.sum(axis=1) / sigma2
    return out


def sample_z_incorrect(
    alpha_list: Sequence[float],
    m: int,
    k: int,
    trials: int,
    seed: Seed,
) -> np.ndarray:
    """Sample the incorrect-support statistic from its generating model.

    Under an incorrect candidate the measurement seen by each block is an
    isotropic Gaussian with per-coordinate variance alpha_s (noise floor
    plus missed signal energy routed through independent Gaussian columns),
    independent of the block itself. Returns the unnormalized residual sum.
    """
    if trials < 1:
        raise InvalidRangeError(f"need at least one trial, got {trials}")
    alphas = np.asarray(alpha_list, dtype=float)
    z_J_moments(alphas, m, k)  # shared validation
    s = alphas.size
    rng = as_rng(seed)
    scale = np.sqrt(alphas)[:, None]
    out = np.empty(trials)
    step = max(1, _SAMPLE_CHUNK // (s * m * (k + 1)))
    for lo in range(0, trials, step):
        hi = min(lo + step, trials)
        b = hi - lo
        blocks = rng.standard_normal((b, s, m, k))
        ys = scale * rng.standard_normal((b, s, m))
        resid, rank_ok = residual_energies(blocks, ys)
        if not rank_ok.all():
            raise DomainError("rank-deficient Gaussian block encountered")
        out[lo:hi] = resid.sum(axis=1)
    return out


# ---- Exponential tail inequalities ---------------------------------------


@dataclass(frozen=True)
class TailCheckResult:
    """Empirical verdict on the two-sided weighted chi-square tail bounds.

    upper_rate and lower_rate are the observed exceedance frequencies of
    Y = sum alpha_i (g_i^2 - 1) beyond 2|a|_2 sqrt(x) + 2|a|_inf x and
    below -2|a|_2 sqrt(x). Each must stay within the analytic ceiling
    exp(-x) plus a one-sided 99% binomial allowance; passed is the
    conjunction.
    """

    x: float
    trials: int
    bound: float
    allowance: float
    upper_rate: float
    lower_rate: float
    upper_ok: bool
    lower_ok: bool

    @property
    def passed(self) -> bool:
        return self.upper_ok and self.lower_ok


def laurent_massart_check(
    alpha_list: Sequence[float],
    x: float,
    trials: int,
    seed: Seed,
) -> TailCheckResult:
    """Empirically verify both exponential tail bounds at level x.

    Y is sampled trials times; the exceedance counts are compared against
    the largest count consistent (at one-sided 99% confidence) with a true
    rate of exp(-x). Requires trials >= 1000 so the binomial allowance is
    meaningful.
    """
    if not x > 0:
        raise InvalidRangeError(f"tail level x must be > 0, got {x}")
    if trials < 1000:
        raise InvalidRangeError(f"need at least 1000 trials, got {trials}")
    alphas = np.asarray(alpha_list, dtype=float)
    if alphas.ndim != 1 or alphas.size == 0:
        raise InvalidRangeError("alpha_list must be a nonempty vector")
    if (alphas < 0).any():
        raise InvalidRangeError("weights must be nonnegative")
    if not (alphas > 0).any():
        raise InvalidRangeError("at least one weight must be positive")
    norm2 = float(np.linalg.norm(alphas))
    norm_inf = float(np.max(np.abs(alphas)))
    upper_cut = 2.0 * norm2 * math.sqrt(x) + 2.0 * norm_inf * x
    lower_cut = -2.0 * norm2 * math.sqrt(x)

    rng = as_rng(seed)
    n_upper = 0
    n_lower = 0
    step = max(1, _SAMPLE_CHUNK // alphas.size)
    for lo in range(0, trials, step):
        hi = min(lo + step, trials)
        g = rng.standard_normal((hi - lo, alphas.size))
        y = (g * g - 1.0) @ alphas
        n_upper += int(np.count_nonzero(y >= upper_cut))
        n_lower += int(np.count_nonzero(y <= lower_cut))

    bound = math.exp(-x)
    # Largest exceedance count still consistent with a true rate <= bound.
    crit = float(binom.isf(0.01, trials, min(bound, 1.0)))
    allowance = max(0.0, crit / trials - bound)
    limit = bound + allowance
    return TailCheckResult(
        x=float(x),
        trials=trials,
        bound=bound,
        allowance=allowance,
        upper_rate=n_upper / trials,
        lower_rate=n_lower / trials,
        upper_ok=n_upper / trials <= limit,
        lower_ok=n_lower / trials <= limit,
    )
