"""Projection residuals, the delta-joint-typicality test, and exhaustive decoding.

A candidate support J is scored by the summed residual energy of every
measurement vector after projecting out the corresponding sensing columns,

    value(J) = sum_s || y^s - proj_{span(F^s_J)} y^s ||^2 .

When J covers the true support that value is pure projected noise with
expectation S(M-K) sigma2; the typicality test accepts J when the centered
value lies strictly inside a window of half-width S*M*delta and every block
F^s_J has full column rank K. The exhaustive decoder enumerates all C(N, K)
candidates in lexicographic order, records which are typical, and returns
the typical candidate whose centered value is smallest in magnitude
(lexicographic tie-break). Failure bookkeeping distinguishes the event that
the true support is not typical from the event that at least one incorrect
candidate is typical; their union is the quantity the closed-form bounds
control.

Residuals are computed through an orthonormal-basis (Householder)
factorization of each block, never through an explicit Gram-matrix inverse.
The factorization is vectorized over candidates so the exhaustive sweep
stays a handful of array operations per chunk of supports.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .ensemble import MeasurementEnsemble, ProblemParams, SensingEnsemble, SupportSet
from .errors import (
    EnumerationBudgetError,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidRangeError,
    RankDeficientError,
)

# Relative diagonal tolerance declaring a block rank-deficient.
RANK_TOL = 1e-10

# Exhaustive enumeration refuses above this many candidate supports.
DEFAULT_ENUMERATION_CAP = 10**6

# Candidate supports processed per vectorized block inside decode.
_SUPPORT_CHUNK = 16384


@dataclass(frozen=True)
class TypicalityStat:
    """Raw, centered, and threshold values of one typicality test.

    typical is true when every per-vector block had full column rank and
    |centered| < threshold.
    """

    value: float
    centered: float
    threshold: float
    rank_ok: bool = True

    @property
    def typical(self) -> bool:
        return bool(self.rank_ok and abs(self.centered) < self.threshold)


@dataclass(frozen=True)
class DecodeOutcome:
    """Decoder decision plus failure-event bookkeeping for one instance.

    decoded is None when no candidate is typical. The event fields are None
    unless the true support was supplied: correct_typical reports whether
    the true support passed the test, num_incorrect_typical counts typical
    incorrect candidates, event_failure is their union (the bounded
    quantity), and decode_error reports decoded != true support.
    """

    decoded: Optional[SupportSet]
    correct_typical: Optional[bool] = None
    num_incorrect_typical: Optional[int] = None
    event_failure: Optional[bool] = None
    decode_error: Optional[bool] = None


# ---- Vectorized residual core ------------------------------------------


def _residual_core(work: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Householder sweep over a (m, k+1, batch) buffer, in place.

    Columns 0..k-1 hold the sensing blocks, column k holds the measurement
    vector. Returns (residual energies, rank-ok flags), each of length
    batch. The residual is the squared norm of the measurement rows below
    the triangular block, which equals ||y||^2 - ||basis^T y||^2 for the
    orthonormal basis of the block's column span.
    """
    m = work.shape[0]
    batch = work.shape[2]
    diag = np.empty((k, batch))
    for j in range(k):
        x = work[j:, j, :]
        alpha = -np.copysign(np.sqrt(np.einsum("ib,ib->b", x, x)), x[0])
        v = x.copy()
        v[0] -= alpha
        vn2 = np.einsum("ib,ib->b", v, v)
        vn2[vn2 == 0.0] = 1.0  # zero column: reflection degenerates to identity
        scale = 2.0 / vn2
        for c in range(j + 1, k + 1):
            col = work[j:, c, :]
            col -= (scale * np.einsum("ib,ib->b", v, col)) * v
        diag[j] = alpha
    if m > k:
        tail = work[k:, k, :]
        resid = np.einsum("ib,ib->b", tail, tail)
    else:
        resid = np.zeros(batch)
    np.maximum(resid, 0.0, out=resid)
    mags = np.abs(diag)
    rank_ok = mags.min(axis=0) > RANK_TOL * mags.max(axis=0)
    return resid, rank_ok


def residual_energies(blocks: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Residual energies for a stack of (m, k) blocks and length-m vectors.

    blocks has shape (..., m, k) and ys shape (..., m); returns arrays of
    shape (...) with the residual energies and the rank-ok flags.
    """
    blocks = np.asarray(blocks, dtype=float)
    ys = np.asarray(ys, dtype=float)
    lead = blocks.shape[:-2]
    m, k = blocks.shape[-2], blocks.shape[-1]
    if ys.shape != lead + (m,):
        raise InvalidDimensionError(
            f"measurement stack shape {ys.shape} does not match blocks {blocks.shape}"
        )
    batch = int(np.prod(lead)) if lead else 1
    work = np.empty((m, k + 1, batch))
    work[:, :k, :] = blocks.reshape(batch, m, k).transpose(1, 2, 0)
    work[:, k, :] = ys.reshape(batch, m).T
    resid, rank_ok = _residual_core(work, k)
    return resid.reshape(lead), rank_ok.reshape(lead)


def projection_residual(f_block: np.ndarray, y: np.ndarray) -> float:
    """Energy of y left after projecting onto the column span of f_block.

    Computed as ||y||^2 - ||basis^T y||^2 through a Householder
    factorization and clamped at zero against round-off. Raises
    RankDeficientError when the numerical column rank is below k (smallest
    factor diagonal under RANK_TOL times the largest).
    """
    f_block = np.asarray(f_block, dtype=float)
    y = np.asarray(y, dtype=float)
    if f_block.ndim != 2 or y.ndim != 1 or f_block.shape[0] != y.shape[0]:
        raise InvalidDimensionError(
            f"expected (m, k) block and length-m vector, got {f_block.shape} and {y.shape}"
        )
    m, k = f_block.shape
    if m < k:
        raise RankDeficientError(f"block of shape {f_block.shape} cannot have column rank {k}")
    resid, rank_ok = residual_energies(f_block[None], y[None])
    if not rank_ok[0]:
        raise RankDeficientError("sensing block is numerically rank-deficient")
    return float(max(resid[0], 0.0))


# ---- Typicality and decoding -------------------------------------------


def default_delta(params: ProblemParams) -> float:
    """Canonical typicality slack (1/rho) * (1 - K/M) * xmin2."""
    if not params.rho > 1:
        raise InvalidParameterError(f"rho must be > 1, got {params.rho}")
    return (1.0 / params.rho) * (1.0 - params.k / params.m) * params.xmin2


def typicality_stat(
    j: SupportSet,
    y: MeasurementEnsemble,
    f: SensingEnsemble,
    delta: float,
) -> TypicalityStat:
    """Evaluate the typicality statistic of candidate support j.

    The centered value subtracts the projected-noise expectation
    S(M-K) sigma2 (sigma2 taken from the measurements) and the threshold is
    S*M*delta. A rank-deficient block marks the stat not typical while the
    value is still reported.
    """
    if not delta > 0:
        raise InvalidRangeError(f"delta must be > 0, got {delta}")
    s, m = y.num_vectors, y.num_rows
    k = j.size
    if not k < m:
        raise InvalidDimensionError(f"candidate size K={k} must be below M={m}")
    if f.num_vectors != s or f.num_rows != m:
        raise InvalidDimensionError(
            f"matrices {f.matrices.shape} do not match measurements {y.measurements.shape}"
        )
    blocks = f.matrices[:, :, j.as_array()]
    resid, rank_ok = residual_energies(blocks, y.measurements)
    value = float(resid.sum())
    centered = value - s * (m - k) * y.noise_var
    threshold = s * m * delta
    return TypicalityStat(value, centered, threshold, bool(rank_ok.all()))


@lru_cache(maxsize=6)
def _all_supports(n: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """All size-k subsets of range(n) in lexicographic order.

    Returns (supports, supports_t) where supports is (C, k) and supports_t
    is its contiguous (k, C) transpose used for gathered indexing. Both are
    read-only.
    """
    supports = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.intp,
        count=math.comb(n, k) * k,
    ).reshape(-1, k)
    supports_t = np.ascontiguousarray(supports.T)
    supports.setflags(write=False)
    supports_t.setflags(write=False)
    return supports, supports_t


def _lex_rank(indices: Tuple[int, ...], n: int) -> int:
    """Position of a sorted index tuple in the lexicographic enumeration."""
    k = len(indices)
    rank = 0
    prev = -1
    for pos, v in enumerate(indices):
        for u in range(prev + 1, v):
            rank += math.comb(n - 1 - u, k - pos - 1)
        prev = v
    return rank


def decode(
    y: MeasurementEnsemble,
    f: SensingEnsemble,
    params: ProblemParams,
    true_support: Optional[SupportSet] = None,
    delta: Optional[float] = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> DecodeOutcome:
    """Exhaustive typicality decoding over all C(N, K) candidate supports.

    Enumerates candidates lexicographically, applies the typicality test
    with the given slack (params.delta when not overridden; 0 and +inf
    overrides are honored), and selects the typical candidate minimizing
    |centered|, breaking ties toward the lexicographically smallest. With
    true_support supplied the outcome also carries the failure events.

    Raises EnumerationBudgetError before any work when C(N, K) exceeds
    enumeration_cap.
    """
    n, k, m, s = params.n, params.k, params.m, params.s
    if f.ambient_dim != n or f.num_rows != m or f.num_vectors != s:
        raise InvalidDimensionError(
            f"matrices {f.matrices.shape} do not match params (s={s}, m={m}, n={n})"
        )
    if y.num_vectors != s or y.num_rows != m:
        raise InvalidDimensionError(
            f"measurements {y.measurements.shape} do not match params (s={s}, m={m})"
        )
    if delta is None:
        delta = params.delta
    if delta < 0:
        raise InvalidRangeError(f"delta must be >= 0, got {delta}")
    total = math.comb(n, k)
    if total > enumeration_cap:
        raise EnumerationBudgetError(
            f"C({n},{k}) = {total} exceeds enumeration cap {enumeration_cap}"
        )

    supports, supports_t = _all_supports(n, k)
    ft = np.ascontiguousarray(f.matrices.transpose(1, 2, 0))  # (m, n, s)
    yt = np.ascontiguousarray(y.measurements.T)  # (m, s)
    center = s * (m - k) * params.sigma2
    threshold = s * m * delta

    chunk = min(total, _SUPPORT_CHUNK)
    work = np.empty((m, k + 1, chunk * s))
    num_typical = 0
    best_abs = math.inf
    best_idx = -1
    i_true = _lex_rank(true_support.indices, n) if true_support is not None else -1
    true_typical = False
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        c = hi - lo
        view = work[:, :, : c * s].reshape(m, k + 1, c, s)
        view[:, :k] = ft[:, supports_t[:, lo:hi], :]
        view[:, k] = yt[:, None, :]
        resid, rank_ok = _residual_core(work[:, :, : c * s], k)
        value = resid.reshape(c, s).sum(axis=1)
        ok = rank_ok.reshape(c, s).all(axis=1)
        abs_centered = np.abs(value - center)
        typical = ok & (abs_centered < threshold)
        num_typical += int(typical.sum())
        if lo <= i_true < hi:
            true_typical = bool(typical[i_true - lo])
        cand = np.flatnonzero(typical)
        if cand.size:
            local = cand[np.argmin(abs_centered[cand])]
            cand_abs = float(abs_centered[local])
            cand_idx = lo + int(local)
            if cand_abs < best_abs or (cand_abs == best_abs and cand_idx < best_idx):
                best_abs = cand_abs
                best_idx = cand_idx

    decoded = None
    if best_idx >= 0:
        decoded = SupportSet(tuple(int(v) for v in supports[best_idx]), n)

    if true_support is None:
        return DecodeOutcome(decoded)
    num_incorrect = num_typical - int(true_typical)
    return DecodeOutcome(
        decoded=decoded,
        correct_typical=true_typical,
        num_incorrect_typical=num_incorrect,
        event_failure=(not true_typical) or num_incorrect > 0,
        decode_error=decoded != true_support,
    )


def ls_estimate(
    j: SupportSet,
    y: MeasurementEnsemble,
    f: SensingEnsemble,
) -> np.ndarray:
    """Per-vector least-squares coefficients on candidate support j.

    Returns an (S, K) array where row s solves min_z ||y^s - F^s_J z||^2.
    Raises RankDeficientError when any block has column rank below K.
    """
    s, m = y.num_vectors, y.num_rows
    if f.num_vectors != s or f.num_rows != m:
        raise InvalidDimensionError(
            f"matrices {f.matrices.shape} do not match measurements {y.measurements.shape}"
        )
    cols = j.as_array()
    out = np.empty((s, j.size))
    for si in range(s):
        block = f.matrices[si][:, cols]
        sol, _, rank, _ = np.linalg.lstsq(block, y.measurements[si], rcond=None)
        if rank < j.size:
            raise RankDeficientError(f"block for vector {si} has rank {rank} < {j.size}")
        out[si] = sol
    return out
