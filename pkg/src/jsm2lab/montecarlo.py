"""Seeded Monte Carlo estimation of the decoding failure probabilities.

Every trial draws its randomness from generators derived by (master seed,
role, trial index), so results are a pure function of the plan: worker
count and scheduling cannot change a single bit of output. The reduction
is a vector of event counters, which makes block-parallel execution exact,
and estimates carry Wilson 95% intervals so zero-success cells still get
honest uncertainty.

A trial samples sensing matrices and noise (and, unless the plan pins the
signals, fresh amplitudes on the pinned support), decodes by exhaustive
typicality search, and tallies four events: the failure union the
closed-form bounds control, the decode-error of the selection rule, the
correct support failing the test, and at least one incorrect support
passing it.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import isotonic_regression

from . import bounds as _bounds
from .decoder import DEFAULT_ENUMERATION_CAP, decode
from .ensemble import (
    AMPLITUDE_FIXED,
    AMPLITUDE_MODES,
    ProblemParams,
    SparseEnsemble,
    SupportSet,
    measure,
    sample_sensing,
    sample_sparse_ensemble,
    sample_support,
)
from .errors import EnumerationBudgetError, InvalidParameterError, InvalidRangeError
from .seeding import ROLE_MATRIX, ROLE_NOISE, ROLE_SIGNAL, ROLE_SUPPORT, derive_rng

# 97.5% normal quantile fixing the Wilson interval level at 95%.
_WILSON_Z = 1.959963984540054

# Trials per parallel work unit; fixed so the block split (and therefore
# every derived seed) is independent of the worker count.
_TRIAL_BLOCK = 256


def wilson_interval(successes: int, trials: int) -> Tuple[float, float]:
    """95% Wilson score interval for a binomial proportion.

    Stays inside [0, 1] and keeps positive width at 0 or trials successes,
    which is exactly where the normal approximation breaks down.
    """
    if trials < 1:
        raise InvalidRangeError(f"need trials >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise InvalidRangeError(f"successes {successes} outside [0, {trials}]")
    z2 = _WILSON_Z * _WILSON_Z
    phat = successes / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = (_WILSON_Z / denom) * math.sqrt(
        phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)
    )
    # at 0 or all successes the exact endpoints are phat itself; guard
    # against 1-ulp drift so the interval always contains the estimate
    return max(0.0, min(phat, center - half)), min(1.0, max(phat, center + half))


@dataclass(frozen=True)
class EstimateWithCI:
    """Binomial point estimate with its 95% Wilson interval."""

    successes: int
    trials: int
    point: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, successes: int, trials: int) -> "EstimateWithCI":
        low, high = wilson_interval(successes, trials)
        return cls(successes, trials, successes / trials, low, high)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


@dataclass(frozen=True)
class TrialPlan:
    """Complete, reproducible description of one Monte Carlo experiment.

    fix_signal=True draws one signal ensemble and conditions every trial on
    it, matching the conditional failure probability the bounds address;
    fix_signal=False redraws amplitudes each trial on the same support for
    average-case curves. x_max is only consulted in uniform amplitude mode.
    """

    params: ProblemParams
    trials: int
    master_seed: int
    amplitude_mode: str = AMPLITUDE_FIXED
    fix_signal: bool = True
    x_max: Optional[float] = None

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidRangeError(f"need trials >= 1, got {self.trials}")
        if self.amplitude_mode not in AMPLITUDE_MODES:
            raise InvalidParameterError(
                f"amplitude_mode must be one of {AMPLITUDE_MODES}, got {self.amplitude_mode!r}"
            )


@dataclass(frozen=True)
class RunResult:
    """The four event-rate estimates produced by run_trials.

    event_failure is the union rate the closed-form upper bound controls;
    decode_error is the mismatch rate of the concrete selection rule;
    correct_atypical and incorrect_typical_rate split the union into its
    two components.
    """

    event_failure: EstimateWithCI
    decode_error: EstimateWithCI
    correct_atypical: EstimateWithCI
    incorrect_typical_rate: EstimateWithCI


def _pinned_support(plan: TrialPlan) -> SupportSet:
    p = plan.params
    return sample_support(p.n, p.k, derive_rng(plan.master_seed, ROLE_SUPPORT, 0))


def _pinned_signal(plan: TrialPlan, support: SupportSet) -> SparseEnsemble:
    p = plan.params
    return sample_sparse_ensemble(
        support,
        p.s,
        p.x_min,
        plan.amplitude_mode,
        plan.x_max,
        seed=derive_rng(plan.master_seed, ROLE_SIGNAL, 0),
    )


def _run_block(args: Tuple[TrialPlan, int, int, int]) -> np.ndarray:
    """Tally the four event counters over trials [lo, hi)."""
    plan, lo, hi, cap = args
    p = plan.params
    support = _pinned_support(plan)
    signal = _pinned_signal(plan, support) if plan.fix_signal else None
    counts = np.zeros(4, dtype=np.int64)
    for trial in range(lo, hi):
        x = signal
        if x is None:
            x = sample_sparse_ensemble(
                support,
                p.s,
                p.x_min,
                plan.amplitude_mode,
                plan.x_max,
                seed=derive_rng(plan.master_seed, ROLE_SIGNAL, trial),
            )
        f = sample_sensing(p.m, p.n, p.s, derive_rng(plan.master_seed, ROLE_MATRIX, trial))
        y = measure(x, f, p.sigma2, derive_rng(plan.master_seed, ROLE_NOISE, trial))
        out = decode(y, f, p, true_support=support, enumeration_cap=cap)
        counts[0] += out.event_failure
        counts[1] += out.decode_error
        counts[2] += not out.correct_typical
        counts[3] += out.num_incorrect_typical > 0
    return counts


def run_trials(
    plan: TrialPlan,
    jobs: int = 1,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> RunResult:
    """Estimate all four event rates under the given plan.

    jobs > 1 fans fixed-size trial blocks over worker processes; the block
    split and per-trial seeds are invariant to jobs, so output is
    bit-identical for any worker count. Raises EnumerationBudgetError
    before running anything when the support enumeration is infeasible.
    """
    p = plan.params
    total = math.comb(p.n, p.k)
    if total > enumeration_cap:
        raise EnumerationBudgetError(
            f"C({p.n},{p.k}) = {total} exceeds enumeration cap {enumeration_cap}"
        )
    if jobs < 1:
        raise InvalidRangeError(f"jobs must be >= 1, got {jobs}")
    blocks = [
        (plan, lo, min(lo + _TRIAL_BLOCK, plan.trials), enumeration_cap)
        for lo in range(0, plan.trials, _TRIAL_BLOCK)
    ]
    if jobs == 1 or len(blocks) == 1:
        parts = map(_run_block, blocks)
        counts = sum(parts, np.zeros(4, dtype=np.int64))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            counts = sum(pool.map(_run_block, blocks), np.zeros(4, dtype=np.int64))
    n = plan.trials
    return RunResult(
        event_failure=EstimateWithCI.from_counts(int(counts[0]), n),
        decode_error=EstimateWithCI.from_counts(int(counts[1]), n),
        correct_atypical=EstimateWithCI.from_counts(int(counts[2]), n),
        incorrect_typical_rate=EstimateWithCI.from_counts(int(counts[3]), n),
    )


# ---- Sweeps ---------------------------------------------------------------

_AXIS_KEYS = {
    "m": lambda p: p.m,
    "s": lambda p: p.s,
    "snr": lambda p: p.snr_min,
    "n": lambda p: p.n,
    "k": lambda p: p.k,
}


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep: estimates, analytic bounds, or the error.

    rates and bound are None when their evaluation failed; error carries
    the message so a sweep never dies on one bad point.
    """

    plan: TrialPlan
    rates: Optional[RunResult]
    bound: Optional["_bounds.BoundReport"]
    error: Optional[str] = None


MC_CSV_COLUMNS = [
    "n",
    "k",
    "m",
    "s",
    "snr_min",
    "rho",
    "trials",
    "event_fail",
    "event_lo",
    "event_hi",
    "decode_err",
    "decode_lo",
    "decode_hi",
    "correct_atypical",
    "correct_atypical_lo",
    "correct_atypical_hi",
    "incorrect_typical",
    "incorrect_typical_lo",
    "incorrect_typical_hi",
    "log_upper",
    "lower_fano",
    "error",
]

MC_CSV_HEADER = ",".join(MC_CSV_COLUMNS)


def sweep(
    plans: Sequence[TrialPlan],
    axis: str,
    jobs: int = 1,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> List[SweepRow]:
    """Run every plan and join estimates with analytic bounds, ordered by axis.

    axis is one of m, s, snr, n, k (case-insensitive) and fixes the row
    order. A failing grid point (budget, inadmissible slack, ...) becomes a
    row with the error recorded instead of aborting the remaining points.
    """
    key = _AXIS_KEYS.get(str(axis).lower())
    if key is None:
        raise InvalidParameterError(
            f"axis must be one of {sorted(_AXIS_KEYS)}, got {axis!r}"
        )
    ordered = sorted(plans, key=lambda plan: key(plan.params))
    rows: List[SweepRow] = []
    for plan in ordered:
        errors = []
        rates = None
        bound = None
        try:
            rates = run_trials(plan, jobs=jobs, enumeration_cap=enumeration_cap)
        except Exception as exc:  # recorded per-row by contract
            errors.append(f"trials: {exc}")
        try:
            bound = _bounds.upper_bound_perr(plan.params)
        except Exception as exc:
            errors.append(f"bound: {exc}")
        rows.append(SweepRow(plan, rates, bound, "; ".join(errors) or None))
    return rows


def _est_cells(est: Optional[EstimateWithCI]) -> List[str]:
    if est is None:
        return ["", "", ""]
    return [repr(est.point), repr(est.ci_low), repr(est.ci_high)]


def sweep_csv_lines(rows: Sequence[SweepRow]) -> str:
    """Render sweep rows as a deterministic CSV document (header included)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MC_CSV_COLUMNS)
    for row in rows:
        p = row.plan.params
        r = row.rates
        cells = [str(p.n), str(p.k), str(p.m), str(p.s)]
        cells += [repr(float(p.snr_min)), repr(float(p.rho)), str(row.plan.trials)]
        cells += _est_cells(r.event_failure if r else None)
        cells += _est_cells(r.decode_error if r else None)
        cells += _est_cells(r.correct_atypical if r else None)
        cells += _est_cells(r.incorrect_typical_rate if r else None)
        cells.append(repr(row.bound.log_upper_perr) if row.bound else "")
        cells.append(repr(row.bound.lower_perr) if row.bound else "")
        cells.append(row.error or "")
        writer.writerow(cells)
    return buf.getvalue()


def write_sweep_csv(rows: Sequence[SweepRow], path: str) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(sweep_csv_lines(rows))


def sweep_metadata(rows: Sequence[SweepRow], wall_time_s: float) -> dict:
    """Sidecar payload recording seeds, library versions, and wall time."""
    import scipy

    try:
        from importlib.metadata import version

        own = version("jsm2lab")
    except Exception:
        own = "unknown"
    return {
        "format": "jsm2lab-sweep-meta-1",
        "created_unix": time.time(),
        "wall_time_s": wall_time_s,
        "versions": {
            "jsm2lab": own,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "interval": "wilson-95",
        "rows": [
            {
                "master_seed": row.plan.master_seed,
                "trials": row.plan.trials,
                "n": row.plan.params.n,
                "k": row.plan.params.k,
                "m": row.plan.params.m,
                "s": row.plan.params.s,
                "amplitude_mode": row.plan.amplitude_mode,
                "fix_signal": row.plan.fix_signal,
            }
            for row in rows
        ],
    }


# ---- Measurement-count search ----------------------------------------------


@dataclass(frozen=True)
class MStarResult:
    """Outcome of the smallest-sufficient-M search.

    m_star is None exactly when saturated (no M up to N reached the
    target). bracket holds the final (below, at-or-under) pair from
    bisection when one exists; non_monotone flags estimate sequences that
    were not non-increasing across the evaluated points, in which case the
    bracketing pair is the trustworthy part of the answer.
    """

    m_star: Optional[int]
    saturated: bool
    non_monotone: bool
    bracket: Optional[Tuple[int, int]]
    evaluations: Dict[int, EstimateWithCI]


def find_M_star(
    params: ProblemParams,
    target: float,
    trials: int,
    seed: int,
    jobs: int = 1,
    amplitude_mode: str = AMPLITUDE_FIXED,
    fix_signal: bool = True,
    x_max: Optional[float] = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> MStarResult:
    """Bisect for the smallest M in [K+1, N] with event failure <= target.

    The M carried by params is ignored; every probe reuses the same master
    seed so curves across calls share their randomness. Assumes the failure
    rate is non-increasing in M; when the evaluated estimates violate that,
    the result flags it and the bracket is what bisection actually pinned
    down.
    """
    if not 0.0 < target <= 1.0:
        raise InvalidRangeError(f"target must lie in (0, 1], got {target}")

    evaluations: Dict[int, EstimateWithCI] = {}

    def probe(m: int) -> float:
        plan = TrialPlan(
            params=replace(params, m=m),
            trials=trials,
            master_seed=seed,
            amplitude_mode=amplitude_mode,
            fix_signal=fix_signal,
            x_max=x_max,
        )
        est = run_trials(plan, jobs=jobs, enumeration_cap=enumeration_cap).event_failure
        evaluations[m] = est
        return est.point

    def monotone_ok() -> bool:
        pts = [evaluations[m].point for m in sorted(evaluations)]
        return all(a >= b for a, b in zip(pts, pts[1:]))

    lo, hi = params.k + 1, params.n
    if probe(lo) <= target:
        return MStarResult(lo, False, False, None, evaluations)
    if lo == hi or probe(hi) > target:
        return MStarResult(None, True, not monotone_ok(), None, evaluations)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid) <= target:
            hi = mid
        else:
            lo = mid
    return MStarResult(hi, False, not monotone_ok(), (lo, hi), evaluations)


def trend_residual(values: Sequence[float]) -> float:
    """Largest deviation of a sequence from its best non-increasing fit.

    Zero for already non-increasing data; used to test decay trends under
    Monte Carlo noise without demanding strict pointwise order.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size <= 1:
        return 0.0
    fit = isotonic_regression(arr, increasing=False)
    return float(np.max(np.abs(fit.x - arr)))
