"""Jointly sparse ensembles, Gaussian sensing matrices, and noisy measurements.

Model: S sparse vectors of length N share one unknown support of size K and
are observed as y^s = F^s x^s + n^s, where each F^s is an independent M x N
matrix with i.i.d. standard Gaussian entries and n^s is i.i.d. Gaussian
noise with variance noise_var. Every vector gets its own sensing matrix;
nothing except the support is shared between the S channels.

The central signal quantity is the minimum residual energy: for a candidate
support J, the energy of x^s outside J is ||x^s restricted to I \\ J||^2, and
x_min_sq is the minimum of that quantity over all vectors and all incorrect
candidates. The generators below guarantee every on-support magnitude is at
least x_min, so x_min_sq = min_{s, i in I} x^s(i)^2 and the global minimum
over candidate supports is attained at a candidate missing exactly one
support index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    InvalidDimensionError,
    InvalidParameterError,
    InvalidRangeError,
)
from .seeding import Seed, as_rng

AMPLITUDE_FIXED = "fixed"
AMPLITUDE_UNIFORM = "uniform"
AMPLITUDE_MODES = (AMPLITUDE_FIXED, AMPLITUDE_UNIFORM)

SNAPSHOT_FORMAT = "jsm2lab-triplet-csv-1"


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SupportSet:
    """A size-K index set inside ambient dimension N, stored sorted.

    indices must be strictly increasing and lie in [0, ambient_dim).
    """

    indices: tuple
    ambient_dim: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) < 1:
            raise InvalidDimensionError("support must contain at least one index")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidParameterError(f"support indices must be strictly increasing, got {idx}")
        if idx[0] < 0 or idx[-1] >= self.ambient_dim:
            raise InvalidRangeError(
                f"support indices must lie in [0, {self.ambient_dim}), got {idx}"
            )

    @classmethod
    def from_iterable(cls, indices: Iterable[int], ambient_dim: int) -> "SupportSet":
        """Build from any iterable; sorts and rejects duplicates."""
        idx = sorted(int(i) for i in indices)
        return cls(tuple(idx), ambient_dim)

    @property
    def size(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True)
class SparseEnsemble:
    """S vectors sharing one support; zero off support, nonzero on it.

    x_min_sq is the realized min over vectors and support indices of the
    squared entry, which equals the minimum residual energy over all
    incorrect candidate supports (the minimizing candidate misses exactly
    one index). Pass x_min_sq=None to have it computed.
    """

    vectors: np.ndarray
    support: SupportSet
    x_min_sq: Optional[float] = None

    def __post_init__(self):
        v = _readonly(np.atleast_2d(self.vectors))
        if v.ndim != 2:
            raise InvalidDimensionError("vectors must be a (S, N) array")
        if v.shape[1] != self.support.ambient_dim:
            raise InvalidDimensionError(
                f"vector length {v.shape[1]} != ambient dim {self.support.ambient_dim}"
            )
        on = self.support.as_array()
        off = np.setdiff1d(np.arange(v.shape[1]), on)
        if off.size and np.any(v[:, off] != 0.0):
            raise InvalidParameterError("vectors must be exactly zero off the common support")
        if np.any(v[:, on] == 0.0):
            raise InvalidParameterError("vectors must be nonzero on every support index")
        realized = float(np.min(v[:, on] ** 2))
        if self.x_min_sq is not None:
            given = float(self.x_min_sq)
            if not math.isclose(given, realized, rel_tol=1e-12, abs_tol=1e-300):
                raise InvalidParameterError(
                    f"x_min_sq={given} does not match realized minimum {realized}"
                )
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "x_min_sq", realized)

    @property
    def num_vectors(self) -> int:
        return self.vectors.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class SensingEnsemble:
    """S independent M x N matrices with i.i.d. standard Gaussian entries."""

    matrices: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrices)
        if m.ndim != 3:
            raise InvalidDimensionError("matrices must be a (S, M, N) array")
        if m.shape[0] < 1:
            raise InvalidDimensionError("need at least one sensing matrix")
        object.__setattr__(self, "matrices", m)

    @property
    def num_vectors(self) -> int:
        return self.matrices.shape[0]

    @property
    def num_rows(self) -> int:
        return self.matrices.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.matrices.shape[2]


@dataclass(frozen=True)
class MeasurementEnsemble:
    """S length-M measurement vectors plus the noise variance that made them."""

    measurements: np.ndarray
    noise_var: float

    def __post_init__(self):
        y = _readonly(np.atleast_2d(self.measurements))
        if y.ndim != 2:
            raise InvalidDimensionError("measurements must be a (S, M) array")
        if self.noise_var < 0:
            raise InvalidRangeError(f"noise_var must be >= 0, got {self.noise_var}")
        object.__setattr__(self, "measurements", y)
        object.__setattr__(self, "noise_var", float(self.noise_var))

    @property
    def num_vectors(self) -> int:
        return self.measurements.shape[0]

    @property
    def num_rows(self) -> int:
        return self.measurements.shape[1]


@dataclass(frozen=True)
class ProblemParams:
    """Dimensions and signal/noise levels of one recovery problem.

    Requires K < M <= N (every closed-form quantity divides by M - K) and
    strictly positive sigma2 and xmin2. The typicality slack defaults to
    delta = (1/rho) * (1 - K/M) * xmin2 and can be overridden through
    delta_override (0 and +inf are allowed there for decoder studies; the
    bound formulas reject inadmissible values themselves).
    """

    n: int
    k: int
    m: int
    s: int
    sigma2: float
    xmin2: float
    rho: float = 2.0
    delta_override: Optional[float] = None

    def __post_init__(self):
        for name in ("n", "k", "m", "s"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {val}")
            object.__setattr__(self, name, int(val))
        if not self.k < self.m <= self.n:
            raise InvalidParameterError(
                f"requires K < M <= N, got K={self.k}, M={self.m}, N={self.n}"
            )
        if not self.sigma2 > 0:
            raise InvalidParameterError(f"sigma2 must be > 0, got {self.sigma2}")
        if not self.xmin2 > 0:
            raise InvalidParameterError(f"xmin2 must be > 0, got {self.xmin2}")
        if not self.rho > 1:
            raise InvalidParameterError(f"rho must be > 1, got {self.rho}")
        if self.delta_override is not None and not self.delta_override >= 0:
            raise InvalidRangeError(f"delta override must be >= 0, got {self.delta_override}")

    @property
    def snr_min(self) -> float:
        return self.xmin2 / self.sigma2

    @property
    def delta(self) -> float:
        if self.delta_override is not None:
            return float(self.delta_override)
        return (1.0 / self.rho) * (1.0 - self.k / self.m) * self.xmin2

    @property
    def x_min(self) -> float:
        return math.sqrt(self.xmin2)


# ---- Sampling ----------------------------------------------------------


def sample_support(n: int, k: int, seed: Seed) -> SupportSet:
    """Draw a uniformly random size-k subset of {0, ..., n-1}."""
    if not 1 <= k <= n:
        raise InvalidDimensionError(f"need 1 <= K <= N, got K={k}, N={n}")
    rng = as_rng(seed)
    idx = np.sort(rng.choice(n, size=k, replace=False))
    return SupportSet(tuple(int(i) for i in idx), n)


def sample_sparse_ensemble(
    support: SupportSet,
    s: int,
    x_min: float,
    amplitude_mode: str = AMPLITUDE_FIXED,
    x_max: Optional[float] = None,
    *,
    seed: Seed,
) -> SparseEnsemble:
    """Draw s jointly sparse vectors on the given support.

    amplitude_mode "fixed": every on-support entry is +-x_min with a random
    sign. amplitude_mode "uniform": magnitudes are uniform on [x_min, x_max]
    with random signs (x_max required). Either way the realized minimum
    on-support magnitude is >= x_min.
    """
    if s < 1:
        raise InvalidDimensionError(f"need at least one vector, got s={s}")
    if not x_min > 0:
        raise InvalidRangeError(f"x_min must be > 0, got {x_min}")
    if amplitude_mode not in AMPLITUDE_MODES:
        raise InvalidParameterError(
            f"amplitude_mode must be one of {AMPLITUDE_MODES}, got {amplitude_mode!r}"
        )
    rng = as_rng(seed)
    k = support.size
    signs = np.where(rng.random((s, k)) < 0.5, -1.0, 1.0)
    if amplitude_mode == AMPLITUDE_FIXED:
        mags = np.full((s, k), float(x_min))
    else:
        if x_max is None:
            raise InvalidRangeError("uniform amplitude mode requires x_max")
        if x_max < x_min:
            raise InvalidRangeError(f"x_max={x_max} must be >= x_min={x_min}")
        mags = rng.uniform(x_min, x_max, size=(s, k))
    vectors = np.zeros((s, support.ambient_dim))
    vectors[:, support.as_array()] = signs * mags
    return SparseEnsemble(vectors, support)


def sample_sensing(m: int, n: int, s: int, seed: Seed) -> SensingEnsemble:
    """Draw s independent m x n standard Gaussian sensing matrices."""
    if min(m, n, s) < 1:
        raise InvalidDimensionError(f"need M, N, S >= 1, got M={m}, N={n}, S={s}")
    rng = as_rng(seed)
    return SensingEnsemble(rng.standard_normal((s, m, n)))


def measure(
    x: SparseEnsemble,
    f: SensingEnsemble,
    noise_var: float,
    seed: Seed,
) -> MeasurementEnsemble:
    """Form y^s = F^s x^s + n^s with n^s i.i.d. Gaussian of variance noise_var.

    noise_var = 0 gives exact noiseless measurements (useful for oracle
    tests; the bound formulas reject it separately because they divide by
    the noise variance).
    """
    if noise_var < 0:
        raise InvalidRangeError(f"noise_var must be >= 0, got {noise_var}")
    if f.num_vectors != x.num_vectors or f.ambient_dim != x.ambient_dim:
        raise InvalidDimensionError(
            f"shape mismatch: matrices {f.matrices.shape} vs vectors {x.vectors.shape}"
        )
    clean = np.einsum("smn,sn->sm", f.matrices, x.vectors)
    if noise_var > 0:
        rng = as_rng(seed)
        clean = clean + math.sqrt(noise_var) * rng.standard_normal(clean.shape)
    return MeasurementEnsemble(clean, noise_var)


def min_residual_energy(x: SparseEnsemble, j: SupportSet) -> float:
    """Minimum over vectors of the signal energy outside candidate support j.

    For the true support I and a candidate J of the same size this is
    min_s ||x^s restricted to I \\ J||^2; it is 0 exactly when J = I.
    """
    if j.size != x.support.size:
        raise InvalidDimensionError(
            f"candidate size {j.size} != support size {x.support.size}"
        )
    leftover = np.setdiff1d(x.support.as_array(), j.as_array())
    if leftover.size == 0:
        return 0.0
    energies = np.sum(x.vectors[:, leftover] ** 2, axis=1)
    return float(np.min(energies))


# ---- Snapshot serialization --------------------------------------------
# Flat text formats only: matrices and vectors as (s, row, col, value)
# triplet CSV, plus one JSON manifest holding the dimensions, the noise
# variance, and the seed that produced the snapshot. Indices are 0-based.


def _write_triplets(path, array3d: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("s,row,col,value\n")
        for s in range(array3d.shape[0]):
            for r in range(array3d.shape[1]):
                row = array3d[s, r]
                for c in range(array3d.shape[2]):
                    fh.write(f"{s},{r},{c},{float(row[c])!r}\n")


def _read_triplets(path, shape) -> np.ndarray:
    out = np.zeros(shape)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "s,row,col,value":
            raise InvalidParameterError(f"unexpected triplet header {header!r} in {path}")
        for line in fh:
            s, r, c, v = line.rstrip("\n").split(",")
            out[int(s), int(r), int(c)] = float(v)
    return out


def write_snapshot(
    prefix: str,
    x: SparseEnsemble,
    f: SensingEnsemble,
    y: Optional[MeasurementEnsemble] = None,
    seed: Optional[int] = None,
) -> dict:
    """Write a full ensemble snapshot under the given path prefix.

    Produces {prefix}.signals.csv, {prefix}.matrices.csv, optionally
    {prefix}.measurements.csv, and {prefix}.manifest.json. Returns the
    manifest dictionary.
    """
    manifest = {
        "format": SNAPSHOT_FORMAT,
        "n": x.ambient_dim,
        "k": x.support.size,
        "m": f.num_rows,
        "s": x.num_vectors,
        "noise_var": None if y is None else y.noise_var,
        "seed": seed,
        "support": list(x.support.indices),
        "x_min_sq": x.x_min_sq,
    }
    _write_triplets(f"{prefix}.signals.csv", x.vectors[:, :, None])
    _write_triplets(f"{prefix}.matrices.csv", f.matrices)
    if y is not None:
        _write_triplets(f"{prefix}.measurements.csv", y.measurements[:, :, None])
    with open(f"{prefix}.manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_snapshot(prefix: str):
    """Read back a snapshot written by write_snapshot.

    Returns (SparseEnsemble, SensingEnsemble, MeasurementEnsemble or None,
    manifest dict).
    """
    with open(f"{prefix}.manifest.json") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != SNAPSHOT_FORMAT:
        raise InvalidParameterError(f"unknown snapshot format {manifest.get('format')!r}")
    n, k, m, s = (manifest[key] for key in ("n", "k", "m", "s"))
    vectors = _read_triplets(f"{prefix}.signals.csv", (s, n, 1))[:, :, 0]
    support = SupportSet(tuple(manifest["support"]), n)
    x = SparseEnsemble(vectors, support)
    f = SensingEnsemble(_read_triplets(f"{prefix}.matrices.csv", (s, m, n)))
    y = None
    if manifest.get("noise_var") is not None:
        meas = _read_triplets(f"{prefix}.measurements.csv", (s, m, 1))[:, :, 0]
        y = MeasurementEnsemble(meas, manifest["noise_var"])
    return x, f, y, manifest
