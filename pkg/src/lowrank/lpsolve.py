"""Guess-a-sketch PTAS for entrywise lp low-rank approximation, 0 < p < 2,
at desk scale: a p-stable sketch of the left factor is rounded to a finite
grid and enumerated; per guess each column of V is fitted by the sketched
median objective, the left factor is refitted exactly (convex p) or through
an independent right-side sketch (p < 1), and the cheapest exact-cost pair
wins.

The theory discretization (n^{-Theta(k)} steps, n^{Theta(k)} bounds) is
unenumerable even at n = 3, so the grid is caller-supplied and
discretization_params only reports the theory-shaped suggestion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    BudgetExceededError,
    ContractError,
    DenseMatrix,
    FactorPair,
    ParameterError,
    REAL,
    derive_seed,
)
from .eigen import rank_and_row_basis
from .sketch import sample_sketch

_CHUNK = 2048
_MAX_CANDIDATES = 1 << 20


@dataclass(frozen=True)
class LpConfig:
    """Knobs of the enumeration: stability index p, target eps, sketch rows
    m, symmetric grid {-B, -B+step, ..., B}, guess budget, RNG seed."""

    p: float = 1.0
    eps: float = 0.5
    m: int = 6
    grid_step: float = 1.0
    grid_bound: float = 2.0
    budget: int = 1 << 20
    seed: int = 0
    m_right: int | None = None  # p < 1 scoring sketch; never enumerated

    def __post_init__(self):
        if not 0.0 < self.p < 2.0:
            raise ParameterError(f"p must lie in (0, 2), got {self.p}")
        if self.grid_step <= 0.0:
            raise ParameterError("grid step must be positive")
        if self.grid_step > self.grid_bound:
            raise ParameterError("grid step must not exceed the grid bound")
        if self.m < 1 or self.budget < 1:
            raise ParameterError("sketch rows and budget must be >= 1")

    def grid(self) -> np.ndarray:
        count = int(math.floor(2.0 * self.grid_bound / self.grid_step + 1e-9)) + 1
        return -self.grid_bound + self.grid_step * np.arange(count)


def _cartesian_grid(G, k):
    """All of G^k in lexicographic order, shape (|G|^k, k)."""
    if len(G) ** k > _MAX_CANDIDATES:
        raise ParameterError(f"grid^{k} has {len(G) ** k} points; too many to materialize")
    mesh = np.meshgrid(*([G] * k), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _med_along(arr, axis=-1):
    """Vectorized quantile-0.5 of absolute values (ceil(m/2)-th smallest)."""
    m = arr.shape[axis]
    idx = math.ceil(0.5 * m) - 1
    return np.partition(np.abs(arr), idx, axis=axis).take(idx, axis=axis)


def _weighted_median_rows(vals, weights):
    """Per-row exact minimizer of sum_j w_j |u - vals_j| (smallest optimal
    point).  vals, weights: (..., d).  Rows with zero total weight get 0."""
    order = np.argsort(vals, axis=-1, kind="stable")
    sv = np.take_along_axis(vals, order, axis=-1)
    sw = np.take_along_axis(weights, order, axis=-1)
    cw = np.cumsum(sw, axis=-1)
    total = cw[..., -1:]
    hit = cw >= 0.5 * total
    first = np.argmax(hit, axis=-1)
    out = np.take_along_axis(sv, first[..., None], axis=-1)[..., 0]
    return np.where(total[..., 0] > 0.0, out, 0.0)


def _ternary_rows(Af, v, p, iters=100):
    """Vectorized 1-D convex fits: per (guess, row), the u minimizing
    sum_j |u v_j - a_j|^p for p >= 1.  v: (c, d); returns (c, n)."""
    n = Af.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(v[:, None, :] != 0.0, Af[None, :, :] / v[:, None, :], np.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-zero v rows
        lo = np.nanmin(ratios, axis=2)
        hi = np.nanmax(ratios, axis=2)
    degenerate = np.isnan(lo)
    lo = np.where(degenerate, 0.0, lo)
    hi = np.where(degenerate, 0.0, hi)

    def f(u):
        return np.sum(np.abs(u[:, :, None] * v[:, None, :] - Af[None, :, :]) ** p, axis=2)

    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        smaller = f(m1) <= f(m2)
        hi = np.where(smaller, m2, hi)
        lo = np.where(smaller, lo, m1)
    return 0.5 * (lo + hi)


def fit_U_given_V(A: DenseMatrix, V, p: float) -> DenseMatrix:
    """Exact row-separable minimization of ||U V - A||_p over U for convex
    p >= 1: IRLS to subgradient norm 1e-9 (500-iteration cap) followed by a
    cyclic coordinate polish for k <= 4 (weighted median at p = 1, ternary
    search otherwise)."""
    if p < 1.0:
        raise ContractError("p < 1 is non-convex; use the right-sketch path")
    Vf = V.astype_float() if isinstance(V, DenseMatrix) else np.asarray(V, dtype=np.float64)
    k, d = Vf.shape
    Af = A.astype_float()
    if Af.shape[1] != d:
        raise ContractError("V and A column counts differ")
    U = np.empty((Af.shape[0], k))
    for i in range(Af.shape[0]):
        U[i] = _fit_row(Af[i], Vf, p)
    return DenseMatrix(U, REAL)


def _fit_row(a, V, p):
    k, d = V.shape
    if p == 1.0 and k == 1:
        v = V[0]
        nz = v != 0.0
        if not nz.any():
            return np.zeros(1)
        return np.array([_weighted_median_rows((a[nz] / v[nz])[None, :], np.abs(v[nz])[None, :])[0]])

    u, *_ = np.linalg.lstsq(V.T, a, rcond=None)
    floor = 1e-12
    for _ in range(500):
        r = u @ V - a
        w = np.maximum(np.abs(r), floor) ** (p - 2.0)
        Vw = V * w[None, :]
        try:
            u_new = np.linalg.solve(Vw @ V.T, Vw @ a)
        except np.linalg.LinAlgError:
            break
        u = u_new
        r = u @ V - a
        grad = (p * np.sign(r) * np.abs(r) ** (p - 1.0)) @ V.T
        if np.linalg.norm(grad) <= 1e-9:
            break
    if k <= 4:
        u = _coordinate_polish(u, a, V, p)
    return u


def _obj_row(u, a, V, p):
    return float(np.sum(np.abs(u @ V - a) ** p))


def _coordinate_polish(u, a, V, p, passes=30, tol=1e-12):
    u = u.copy()
    k = V.shape[0]
    best = _obj_row(u, a, V, p)
    for _ in range(passes):
        improved = False
        for l in range(k):
            vl = V[l]
            rest = u @ V - u[l] * vl - a
            nz = vl != 0.0
            if not nz.any():
                continue
            if p == 1.0:
                cand = _weighted_median_rows((-rest[nz] / vl[nz])[None, :], np.abs(vl[nz])[None, :])[0]
            else:
                cand = _ternary_min(lambda t: float(np.sum(np.abs(rest + t * vl) ** p)), u[l])
            trial = u.copy()
            trial[l] = cand
            val = _obj_row(trial, a, V, p)
            if val < best - tol:
                u, best, improved = trial, val, True
        if not improved:
            break
    return u


def _ternary_min(f, x0, span=1.0, iters=200):
    lo, hi = x0 - span, x0 + span
    while f(lo) > f(lo + 1e-9) and hi - lo < 1e9:  # expand left bracket
        lo -= (hi - lo)
    while f(hi) > f(hi - 1e-9) and hi - lo < 1e9:
        hi += (hi - lo)
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def discretization_params(A: DenseMatrix, k: int, eps: float, floor=1e-6, cap=1e6):
    """Theory-shaped (grid step, grid bound) suggestion: step
    eps / (n k theta^k) with theta = n d gamma^2 from the singular-value
    lower bound, bound n d gamma k / eps; clipped to [floor, cap].  Purely
    advisory - the solver takes whatever the config supplies."""
    Af = A.astype_float()
    if not np.array_equal(Af, np.round(Af)):
        raise ContractError("discretization_params expects integer-valued entries")
    n, d = A.shape
    gamma = max(1.0, float(np.abs(Af).max()))
    theta = n * d * gamma * gamma
    step = max(eps / (n * k * theta**k), floor)
    bound = min(n * d * gamma * k / eps, cap)
    return step, bound


def l1_rank_k_ptas(A: DenseMatrix, k: int, cfg: LpConfig) -> FactorPair:
    if cfg.p != 1.0:
        cfg = LpConfig(1.0, cfg.eps, cfg.m, cfg.grid_step, cfg.grid_bound, cfg.budget, cfg.seed, cfg.m_right)
    return lp_rank_k_ptas(A, k, cfg)


def lp_rank_k_ptas(A: DenseMatrix, k: int, cfg: LpConfig) -> FactorPair:
    """The guess-enumeration PTAS for p in (0, 2); see the module docstring.

    Deterministic tie-breaking: guesses are scanned row-major over the
    sketched-factor grid, column candidates lexicographically, and strictly
    better cost is required to replace the incumbent.
    """
    if A.domain.kind != "real":
        raise ContractError("lp solver expects a real matrix")
    p = cfg.p
    n, d = A.rows, A.cols
    Af = A.astype_float()

    rank, basis = rank_and_row_basis(A, k)
    if rank <= k:
        U = Af @ basis
        V = basis.T
        cost = float(np.sum(np.abs(U @ V - Af) ** p))
        return FactorPair(DenseMatrix(U, REAL), DenseMatrix(V, REAL), cost)

    G = cfg.grid()
    nG = G.size
    total = nG ** (cfg.m * k)
    if total > cfg.budget:
        raise BudgetExceededError(total, cfg.budget, "sketched-factor guessing")

    S = sample_sketch(cfg.m, n, p, derive_seed("lp-left", cfg.seed))
    St = np.round(S.entries / cfg.grid_step) * cfg.grid_step
    SA = St @ Af  # (m, d)
    Vc = _cartesian_grid(G, k)  # (nc, k) lexicographic

    right = None
    if p < 1.0:
        # the right sketch is scored, never enumerated, so generous rows
        # cost nothing in guesses
        m_right = cfg.m_right if cfg.m_right is not None else max(32, cfg.m)
        S2 = sample_sketch(m_right, d, p, derive_seed("lp-right", cfg.seed))
        right = (S2.entries, Af @ S2.entries.T)  # (m2, d), (n, m2)

    best = None  # (cost, U, V)
    mk = cfg.m * k
    powers = nG ** np.arange(mk - 1, -1, -1, dtype=object)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total))
        digits = np.empty((codes.size, mk), dtype=np.int64)
        for s in range(mk):
            digits[:, s] = (codes // int(powers[s])) % nG
        SU = G[digits].reshape(codes.size, cfg.m, k)

        pred = np.einsum("cmk,vk->cvm", SU, Vc)
        sel = np.empty((codes.size, d), dtype=np.int64)
        for i in range(d):
            meds = _med_along(pred - SA[:, i][None, None, :], axis=2)
            sel[:, i] = np.argmin(meds, axis=1)

        Varr = Vc[sel].transpose(0, 2, 1)  # (c, k, d)
        Uarr = _refit_chunk(Af, Varr, G, p, right)

        # one exact alternation over the grid: columns respond exactly to
        # the refitted U, then U is refitted once more; all three pairs
        # enter the final exact-cost minimum, so this never hurts
        predU = np.einsum("cnk,vk->cvn", Uarr, Vc)
        sel2 = np.empty((codes.size, d), dtype=np.int64)
        for i in range(d):
            exact = np.sum(np.abs(predU - Af[:, i][None, None, :]) ** p, axis=2)
            sel2[:, i] = np.argmin(exact, axis=1)
        V2arr = Vc[sel2].transpose(0, 2, 1)
        U2arr = _refit_chunk(Af, V2arr, G, p, right)

        for Ua, Va in ((Uarr, Varr), (Uarr, V2arr), (U2arr, V2arr)):
            resid = np.einsum("cnk,ckd->cnd", Ua, Va) - Af[None, :, :]
            costs = np.sum(np.abs(resid) ** p, axis=(1, 2))
            j = int(np.argmin(costs))
            if best is None or costs[j] < best[0]:
                best = (float(costs[j]), Ua[j].copy(), Va[j].copy())

    cost, U, V = best
    return FactorPair(DenseMatrix(U, REAL), DenseMatrix(V, REAL), cost)


def _refit_chunk(Af, Varr, G, p, right):
    """Refit the left factor for every guess in the chunk."""
    c, k, d = Varr.shape
    n = Af.shape[0]
    if p >= 1.0:
        if p == 1.0 and k == 1:
            v = Varr[:, 0, :]  # (c, d)
            w = np.abs(v)
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.where(v[:, None, :] != 0.0, Af[None, :, :] / v[:, None, :], np.inf)
            wts = np.broadcast_to(w[:, None, :], vals.shape).copy()
            wts[~np.isfinite(vals)] = 0.0
            vals = np.where(np.isfinite(vals), vals, 0.0)
            return _weighted_median_rows(vals, wts)[:, :, None]
        if k == 1:
            return _ternary_rows(Af, Varr[:, 0, :], p)[:, :, None]
        U = np.empty((c, n, k))
        for g in range(c):
            for i in range(n):
                U[g, i] = _fit_row(Af[i], Varr[g], p)
        return U
    # p < 1: score left-factor rows on the grid through the right sketch
    S2, AS2 = right
    Ucands = _cartesian_grid(G, k)  # (vu, k)
    U = np.empty((c, n, k))
    for g in range(c):
        W = Varr[g] @ S2.T  # (k, m2)
        UW = Ucands @ W  # (vu, m2)
        meds = _med_along(UW[None, :, :] - AS2[:, None, :], axis=2)  # (n, vu)
        U[g] = Ucands[np.argmin(meds, axis=1)]
    return U
