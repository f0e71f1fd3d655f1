"""Pure-numpy implementations of the hot kernels.

This module and the compiled extension ``_kernels`` expose the same
functions with identical semantics; ``lowrank.kernels`` picks one at import
time.  Everything here is array code over small dense matrices, so the
fallback is slower mainly through per-call overhead, not asymptotics.

Shared conventions:
  * binary matrices arrive as uint8 0/1, F_q matrices as int16 residues;
  * label/code arrays are int64, mismatch indicator tables uint8;
  * every argmin breaks ties toward the smallest index, which equals the
    lexicographically smallest bit vector / candidate.
"""

from __future__ import annotations

import math

import numpy as np

IMPL = "python"


def zcounts(A, cols, labels, nlabels):
    """Per-row ones-counts of the selected columns, bucketed by label.

    Returns (Z1, sizes): Z1[i, y] counts samples (j, y) with A[i, j] = 1;
    sizes[y] is the number of samples carrying label y.  Multiplicity in
    ``cols`` is respected.
    """
    cols = np.asarray(cols, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    n = A.shape[0]
    Z1 = np.zeros((n, nlabels), dtype=np.int64)
    sizes = np.zeros(nlabels, dtype=np.int64)
    np.add.at(sizes, labels, 1)
    np.add.at(Z1.T, labels, A[:, cols].astype(np.int64).T)
    return Z1, sizes


def best_rows(Z1, sizes, neq0, neq1):
    """Exact best-response row codes given column label counts.

    cost(i, x) = sum_y (sizes[y]-Z1[i,y])*neq0[x,y] + Z1[i,y]*neq1[x,y].
    Returns (codes, total cost).
    """
    Z0 = sizes[None, :] - Z1
    E = Z0 @ neq0.astype(np.int64).T + Z1 @ neq1.astype(np.int64).T
    codes = np.argmin(E, axis=1).astype(np.int64)
    total = int(E[np.arange(E.shape[0]), codes].sum())
    return codes, total


def weighted_best_rows(Z0w, Z1w, neq0, neq1):
    """Row codes minimizing the importance-weighted estimated cost."""
    E = Z0w @ neq0.astype(np.float64).T + Z1w @ neq1.astype(np.float64).T
    return np.argmin(E, axis=1).astype(np.int64)


def best_cols(A, rowcodes, nlabels, neq0, neq1):
    """Exact best-response column codes given row codes of U."""
    rowcodes = np.asarray(rowcodes, dtype=np.int64)
    d = A.shape[1]
    W1 = np.zeros((d, nlabels), dtype=np.int64)
    cnt = np.zeros(nlabels, dtype=np.int64)
    np.add.at(cnt, rowcodes, 1)
    np.add.at(W1.T, rowcodes, A.astype(np.int64))
    W0 = cnt[None, :] - W1
    E = W0 @ neq0.astype(np.int64) + W1 @ neq1.astype(np.int64)
    codes = np.argmin(E, axis=1).astype(np.int64)
    total = int(E[np.arange(d), codes].sum())
    return codes, total


def pair_cost(A, rowcodes, colcodes, neq0, neq1):
    """Exact generalized l0 cost of the factor pair given by codes."""
    rowcodes = np.asarray(rowcodes, dtype=np.int64)
    colcodes = np.asarray(colcodes, dtype=np.int64)
    m0 = neq0.astype(np.int64)[np.ix_(rowcodes, colcodes)]
    m1 = neq1.astype(np.int64)[np.ix_(rowcodes, colcodes)]
    Ai = A.astype(np.int64)
    return int((m0 * (1 - Ai) + m1 * Ai).sum())


def min_dist_to_refs(A, live, refs):
    """For each live column, the Hamming distance to the nearest reference
    column (all indices into A's columns)."""
    live = np.asarray(live, dtype=np.int64)
    refs = np.asarray(refs, dtype=np.int64)
    X = A[:, live].T[:, None, :]
    R = A[:, refs].T[None, :, :]
    return (X != R).sum(axis=2).min(axis=1).astype(np.int64)


def best_rows_given_candrows(A, cand_rows):
    """Per row of A, the candidate row (over any discrete alphabet)
    minimizing the Hamming distance.  Returns (choice, total)."""
    mism = (A[:, None, :] != cand_rows[None, :, :]).sum(axis=2)
    choice = np.argmin(mism, axis=1).astype(np.int64)
    total = int(mism[np.arange(A.shape[0]), choice].sum())
    return choice, total


def _est_from_counts(counts, pinv, gamma):
    """Vectorized level estimator: counts[..., L] -> estimates[...].

    Picks the deepest level whose count strictly exceeds gamma and rescales
    by 1/p_level; falls back to level 0 when no level qualifies.
    """
    L = counts.shape[-1]
    mask = counts > gamma
    rev = mask[..., ::-1]
    jstar = np.where(mask.any(axis=-1), L - 1 - np.argmax(rev, axis=-1), 0)
    vals = np.take_along_axis(counts, jstar[..., None], axis=-1)[..., 0]
    return vals * pinv[jstar]

def fq_score_columns(phiA, guess, add, mul, sub, vcands, pinv, gamma):
    """Choose, per column, the candidate V-column minimizing the bank-median
    level estimate of the sketched residual.

    phiA:   (K, d, L, B) int16 bucket sums of A's columns per instance
    guess:  (K, k, L, B) int16 guessed bucket sums of the factor columns
    vcands: (C, k) int16 candidate V-columns
    add/mul/sub: field tables; pinv: (L,) inverse sampling rates.
    Returns the (d,) int64 candidate indices.
    """
    K, d, L, B = phiA.shape
    C, k = vcands.shape
    mix = np.zeros((K, C, L, B), dtype=np.int16)
    for l in range(k):
        coef = vcands[:, l].astype(np.intp)
        term = mul[coef[None, :, None, None], guess[:, l, :, :].astype(np.intp)[:, None, :, :]]
        mix = add[mix.astype(np.intp), term.astype(np.intp)]
    resid = sub[
        phiA.astype(np.intp)[:, :, None, :, :],
        mix.astype(np.intp)[:, None, :, :, :],
    ]
    counts = np.count_nonzero(resid, axis=4).astype(np.float64)  # (K, d, C, L)
    ests = _est_from_counts(counts, np.asarray(pinv, dtype=np.float64), float(gamma))
    ests.sort(axis=0)
    med = ests[int(math.ceil(K / 2)) - 1]  # (d, C)
    return np.argmin(med, axis=1).astype(np.int64)
