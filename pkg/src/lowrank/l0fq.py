"""The F_q l0 sketch: nested level subsampling, pairwise-independent
hashing into block counters, the level estimator and its bank, and the
desk-scale rank-k solver that exhaustively guesses sketched factors.

Level membership is realized by one uniform real per coordinate
(coordinate j is in level i iff u_j < 2^-i), which induces exactly the
nested joint distribution of the leading-one construction.  Bucket contents
are field sums, so the sketch is linear over F_q; hashed nonzero-bucket
counts can only undercount the unhashed level supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gf, kernels
from .core import (
    BudgetExceededError,
    ContractError,
    DenseMatrix,
    FactorPair,
    ParameterError,
    derive_seed,
)
from .sketch import quantile

DEFAULT_C = 16.0
DEFAULT_K_INSTANCES = 9

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def least_prime_at_least(n: int) -> int:
    c = max(2, int(n))
    while not _is_prime(c):
        c += 1
    return c


@dataclass(frozen=True)
class LevelCounts:
    """Per-level nonzero counts; hashed counts may dip below the nested
    unhashed supports but never exceed them."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.counts, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)


class NestedSampler:
    """Nested level subsampling of [n]: level i keeps coordinate j iff
    u_j < 2^-i, so level sets shrink monotonically and level 0 is [n]."""

    __slots__ = ("n", "levels", "u", "seed")

    def __init__(self, n, seed):
        if n < 1:
            raise ParameterError("dimension must be >= 1")
        rng = np.random.default_rng(seed)
        u = rng.random(n)
        u.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "levels", max(1, math.ceil(math.log2(n))) if n > 1 else 1)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "seed", seed)

    def __setattr__(self, name, value):
        raise AttributeError("NestedSampler is immutable")

    def level_of(self):
        """Deepest level each coordinate belongs to (int array)."""
        with np.errstate(divide="ignore"):
            lev = np.floor(-np.log2(np.maximum(self.u, 1e-300))).astype(np.int64)
        return np.clip(lev, 0, self.levels - 1)


class SketchInstance:
    """One nested sampler plus one affine pairwise-independent hash
    h(j) = ((a j + b) mod P) mod B, P the least prime >= max(n, B)."""

    __slots__ = ("sampler", "q", "B", "P", "a", "b", "bucket", "coord_level")

    def __init__(self, n, q, B, seed):
        sampler = NestedSampler(n, derive_seed("nested", seed))
        rng = np.random.default_rng(derive_seed("hash", seed))
        P = least_prime_at_least(max(n, B))
        a = int(rng.integers(1, P))
        b = int(rng.integers(0, P))
        if a * (n - 1) + b < 2**62:
            bucket = ((a * np.arange(n, dtype=np.int64) + b) % P) % B
        else:
            bucket = (((a * np.arange(n, dtype=object) + b) % P) % B).astype(np.int64)
        bucket.setflags(write=False)
        coord_level = sampler.level_of()
        coord_level.setflags(write=False)
        object.__setattr__(self, "sampler", sampler)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "B", int(B))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "bucket", bucket)
        object.__setattr__(self, "coord_level", coord_level)

    def __setattr__(self, name, value):
        raise AttributeError("SketchInstance is immutable")

    @property
    def levels(self):
        return self.sampler.levels

    def bucket_sums(self, x):
        """Sparse field sums per (level, bucket) of the selected coordinates.

        Returns a dict {(level, bucket): field value}; zero sums are kept so
        linearity over F_q can be checked bucket-wise.
        """
        F = gf.field(self.q)
        x = np.asarray(x, dtype=np.int64)
        nz = np.nonzero(x)[0]
        out: dict[tuple[int, int], int] = {}
        coord_level = self.coord_level[nz]
        buckets = self.bucket[nz]
        for lev in range(self.levels):
            sel = coord_level >= lev
            bs, vs = buckets[sel], x[nz[sel]]
            for b, v in zip(bs, vs):
                key = (lev, int(b))
                out[key] = int(F.add[out.get(key, 0), int(v)])
        return out

    def level_counts(self, x):
        """(hashed, unhashed) LevelCounts of a length-n F_q vector."""
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.sampler.n,):
            raise ContractError(f"expected a length-{self.sampler.n} vector")
        nz = np.nonzero(x)[0]
        coord_level = self.coord_level[nz]
        unhashed = np.array(
            [(coord_level >= lev).sum() for lev in range(self.levels)], dtype=np.int64
        )
        F = gf.field(self.q)
        hashed = np.zeros(self.levels, dtype=np.int64)
        buckets = self.bucket[nz]
        vals = x[nz]
        for lev in range(self.levels):
            sel = coord_level >= lev
            if not sel.any():
                continue
            bs = buckets[sel]
            order = np.argsort(bs, kind="stable")
            bs_sorted = bs[order]
            vs_sorted = vals[sel][order]
            starts = np.r_[0, np.nonzero(np.diff(bs_sorted))[0] + 1]
            ends = np.r_[starts[1:], bs_sorted.size]
            nonzero_buckets = 0
            for s, e in zip(starts, ends):
                if int(F.sum_axis(vs_sorted[s:e], axis=0)) != 0:
                    nonzero_buckets += 1
            hashed[lev] = nonzero_buckets
        return LevelCounts(hashed), LevelCounts(unhashed)

    def dense_bucket_sums(self, x):
        """(levels, B) int16 field sums; only sensible for small B."""
        F = gf.field(self.q)
        x = np.asarray(x, dtype=np.int64)
        out = np.zeros((self.levels, self.B), dtype=np.int64)
        nz = np.nonzero(x)[0]
        coord_level = self.coord_level[nz]
        for lev in range(self.levels):
            sel = nz[coord_level >= lev]
            if sel.size == 0:
                continue
            if F.e == 1:
                acc = np.bincount(self.bucket[sel], weights=x[sel].astype(np.float64), minlength=self.B)
                out[lev] = acc.astype(np.int64) % self.q
            else:
                for j in sel:
                    out[lev, self.bucket[j]] = F.add[out[lev, self.bucket[j]], x[j]]
        return out.astype(np.int16)


class HashedBank:
    """K independent sketch instances with the threshold parameters of the
    level estimator.

    tau = ceil(C / eps^4); the bucket count is ceil(C' / eps^8) raised to
    the collision floor (4 tau)^2 so the perfect-hash argument goes
    through.  All parameters stay configurable."""

    __slots__ = ("K", "instances", "eps", "tau", "C", "Cprime", "B", "q", "n", "seed")

    def __init__(self, n, q, eps=0.25, K=DEFAULT_K_INSTANCES, C=DEFAULT_C, Cprime=None, B=None, seed=0):
        if not 0 < eps < 1:
            raise ParameterError("eps must lie in (0, 1)")
        Cprime = 4.0 * C * C if Cprime is None else Cprime
        tau = math.ceil(C / eps**4)
        if B is None:
            B = max(math.ceil(Cprime / eps**8), (4 * tau) ** 2)
        instances = tuple(
            SketchInstance(n, q, B, derive_seed("bank", seed, i)) for i in range(K)
        )
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "instances", instances)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Cprime", Cprime)
        object.__setattr__(self, "B", int(B))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "seed", seed)

    def __setattr__(self, name, value):
        raise AttributeError("HashedBank is immutable")


def est(v, gamma) -> float:
    """Level estimate: value at the deepest level whose count strictly
    exceeds gamma, rescaled by the inverse sampling rate; level 0 when no
    level qualifies."""
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    counts = np.asarray(v.counts if isinstance(v, LevelCounts) else v, dtype=np.float64)
    above = np.nonzero(counts > gamma)[0]
    j = int(above[-1]) if above.size else 0
    return float(counts[j] * (2.0**j))


def estimate_l0(bank: HashedBank, x, gamma=None) -> np.ndarray:
    """One level estimate per bank instance (hashed counts)."""
    g = bank.tau if gamma is None else gamma
    return np.array(
        [est(inst.level_counts(x)[0], g) for inst in bank.instances], dtype=np.float64
    )


def med_l0(bank: HashedBank, x, gamma=None) -> float:
    return quantile(estimate_l0(bank, x, gamma), 0.5)


# --------------------------------------------------------------------------
# desk-scale rank-k solver over F_q


def _solver_plan(q, k, levels, budget, K=None, buckets=None):
    """Pick (K, B) so the guessed-entry count G = K * k * levels * B keeps
    q^G within the enumeration budget.

    Default policy is one instance with as many buckets as the budget
    affords: at desk scale hash collisions hurt far more than the missing
    median robustness (measured against the brute-force oracle)."""
    gmax = int(math.floor(math.log(budget, q))) if budget >= q else 0
    per_bucket = k * levels
    if K is None and buckets is None:
        K = 1
        buckets = gmax // per_bucket
    elif K is None:
        K = gmax // (per_bucket * buckets)
    elif buckets is None:
        buckets = gmax // (per_bucket * K)
    min_required = q ** (per_bucket * 2)
    if K < 1 or buckets < 2:
        raise BudgetExceededError(min_required, budget, "sketched-factor guessing")
    G = K * per_bucket * buckets
    if q**G > budget:
        raise BudgetExceededError(q**G, budget, "sketched-factor guessing")
    return K, buckets, G


def fq_rank_k_approx(
    A: DenseMatrix,
    k: int,
    eps: float = 0.25,
    budget: int = 1 << 12,
    K=None,
    buckets=None,
    gamma=None,
    seed=0,
) -> FactorPair:
    """Guess-a-sketch rank-k solver over F_q at desk scale.

    Enumerates every assignment of field values to the K x k x levels x B
    counter slots of the sketched left factor.  Per guess, each column of A
    picks the candidate V-column minimizing the bank-median level estimate
    of the sketched residual (sketches are linear, so residual counters are
    formed by table arithmetic); U is then fitted by exact best-response
    rows and the globally cheapest exact-cost pair wins.  A rank check runs
    first so exactly rank-<=-k inputs return cost 0 without enumeration.
    """
    if A.domain.kind != "fq":
        raise ContractError("fq_rank_k_approx needs an F_q matrix")
    q = A.domain.q
    F = gf.field(q)

    exact = F.exact_factorization(A.data, k)
    if exact is not None:
        U, V = exact
        return FactorPair(DenseMatrix(U, A.domain), DenseMatrix(V, A.domain), 0.0)

    n, d = A.rows, A.cols
    levels = max(1, math.ceil(math.log2(n))) if n > 1 else 1
    K_, B, G = _solver_plan(q, k, levels, budget, K, buckets)
    tau = math.ceil(DEFAULT_C / eps**4)
    g = float(tau if gamma is None else gamma)

    instances = [
        SketchInstance(n, q, B, derive_seed("fq-solver", seed, i)) for i in range(K_)
    ]
    phiA = np.stack(
        [
            np.stack([inst.dense_bucket_sums(A.data[:, j]) for j in range(d)])
            for inst in instances
        ]
    )  # (K, d, levels, B) int16

    ucands = np.stack(
        [[(c // q**e) % q for e in range(k - 1, -1, -1)] for c in range(q**k)]
    ).astype(np.int16)
    pinv = 2.0 ** np.arange(levels)

    n_guesses = q**G
    slot_shape = (K_, k, levels, B)
    best = None
    guess = np.zeros(G, dtype=np.int16)
    for code in range(n_guesses):
        c = code
        for s in range(G - 1, -1, -1):
            guess[s] = c % q
            c //= q
        gtensor = guess.reshape(slot_shape)
        vchoice = kernels.fq_score_columns(
            phiA, gtensor, F.add, F.mul, F.sub, ucands, pinv, g
        )
        V = ucands[vchoice].T.astype(np.int16)  # (k, d)
        cand_rows = F.matmul(ucands, V)
        rows, cost = kernels.best_rows_given_candrows(A.data, cand_rows)
        if best is None or cost < best[0]:
            best = (cost, ucands[rows].copy(), V.copy())
    cost, U, V = best
    return FactorPair(DenseMatrix(U, A.domain), DenseMatrix(V, A.domain), float(cost))
