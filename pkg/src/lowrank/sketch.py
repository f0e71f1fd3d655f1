"""Cauchy / p-stable sketch matrices and their quantile and median
estimators, plus the Monte Carlo trial harness for the subspace-embedding
band checks.

Quantile convention: q_alpha(v) is the ceil(alpha * len(v))-th smallest
absolute value of v's entries (1-based).  med = q_{1/2}; for a matrix,
med(M) sums the column medians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError, DenseMatrix, ParameterError, REAL, derive_seed

_MEDP_CACHE: dict[tuple, float] = {}
MEDP_TRIALS = 10**6


@dataclass(frozen=True)
class QuantileSpec:
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")


def _cms_stable(p, rng, size):
    """Chambers-Mallows-Stuck sampler for a symmetric p-stable variate,
    scale 1 (uniform angle plus exponential)."""
    theta = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=size)
    w = rng.exponential(1.0, size=size)
    if p == 1.0:
        return np.tan(theta)
    a = np.sin(p * theta) / np.cos(theta) ** (1.0 / p)
    b = (np.cos((1.0 - p) * theta) / w) ** ((1.0 - p) / p)
    return a * b


class StableSketch:
    """m x n matrix of i.i.d. p-stable variates, reproducible from its seed."""

    __slots__ = ("m", "n", "p", "seed", "entries")

    def __init__(self, m, n, p, seed):
        if m < 1 or n < 1:
            raise ParameterError("sketch dimensions must be >= 1")
        if not 0.0 < p <= 2.0:
            raise ParameterError(f"stability index must lie in (0, 2], got {p}")
        rng = np.random.default_rng(seed)
        if p == 1.0:
            entries = rng.standard_cauchy((m, n))
        else:
            entries = _cms_stable(p, rng, (m, n))
        entries.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "p", float(p))
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("StableSketch is immutable")


def sample_sketch(m, n, p, seed) -> StableSketch:
    return StableSketch(m, n, p, seed)


def quantile(v, spec) -> float:
    """The ceil(alpha * len(v))-th smallest absolute value of v (1-based)."""
    alpha = spec.alpha if isinstance(spec, QuantileSpec) else QuantileSpec(float(spec)).alpha
    arr = np.abs(np.asarray(v, dtype=np.float64)).ravel()
    if arr.size == 0:
        raise ContractError("quantile of an empty vector")
    idx = math.ceil(alpha * arr.size) - 1
    return float(np.partition(arr, idx)[idx])


def med(v) -> float:
    return quantile(v, 0.5)


def med_matrix(M) -> float:
    """Sum of the column medians (quantile convention above)."""
    arr = M.data if isinstance(M, DenseMatrix) else np.asarray(M, dtype=np.float64)
    if arr.size == 0:
        raise ContractError("med_matrix of an empty matrix")
    idx = math.ceil(0.5 * arr.shape[0]) - 1
    cols = np.partition(np.abs(arr), idx, axis=0)[idx, :]
    return float(cols.sum())


def estimate_medp(p, trials=MEDP_TRIALS, seed=0) -> float:
    """Empirical median of |p-stable| (med_1 = 1 exactly; no closed form
    otherwise).  Cached per (p, trials, seed)."""
    if not 0.0 < p < 2.0:
        raise ParameterError(f"p must lie in (0, 2), got {p}")
    if trials < 10**4:
        raise ParameterError("estimate_medp needs at least 10^4 trials")
    key = (float(p), int(trials), seed)
    if key not in _MEDP_CACHE:
        rng = np.random.default_rng(seed)
        draws = np.abs(_cms_stable(float(p), rng, trials))
        idx = math.ceil(0.5 * trials) - 1
        _MEDP_CACHE[key] = float(np.partition(draws, idx)[idx])
    return _MEDP_CACHE[key]


def sketch_apply(S: StableSketch, M: DenseMatrix) -> DenseMatrix:
    if S.n != M.rows:
        raise ContractError(f"sketch has {S.n} columns, matrix has {M.rows} rows")
    return DenseMatrix(S.entries @ M.astype_float(), REAL)


def embedding_trial(U: DenseMatrix, p, m, trials, eps, seed) -> float:
    """Fraction of random subspace vectors whose sketched median estimate
    lands in the (1 +- eps) band around the true lp mass.

    Draws one fresh sketch for the call, then per trial t draws a coefficient
    vector from the stream seed + t, forms x = U y, and checks the band:
    med(Sx)/med_p against ||x||_p for p >= 1, the p-th powers for p < 1.
    Zero vectors count as in-band.
    """
    n, k = U.rows, U.cols
    S = sample_sketch(m, n, p, derive_seed("embedding-sketch", seed))
    medp = 1.0 if p == 1.0 else estimate_medp(p)
    Uf = U.astype_float()
    hits = 0
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        y = rng.standard_normal(k)
        x = Uf @ y
        true_p = float(np.sum(np.abs(x) ** p))
        if true_p == 0.0:
            hits += 1
            continue
        estimate = med(S.entries @ x) / medp
        if p >= 1.0:
            truth = true_p ** (1.0 / p)
        else:
            estimate = estimate**p
            truth = true_p
        if (1.0 - eps) * truth <= estimate <= (1.0 + eps) * truth:
            hits += 1
    return hits / trials
