"""Brute-force exact solvers and recounters.

These are the reference side of every dual-route check, so they stay
deliberately independent of the kernel layer: plain enumeration with
direct mismatch counting, nothing shared with the solvers beyond the
matrix types.  Enumerations above 2^24 candidates are refused outright -
an oracle that truncates is not an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf
from .core import (
    BINARY,
    BudgetExceededError,
    ContractError,
    DenseMatrix,
    FactorPair,
    InnerProductTable,
    codes_to_bits,
)

ENUMERATION_CAP = 1 << 24


@dataclass(frozen=True)
class OracleResult:
    opt_cost: float
    witness: FactorPair
    enumerated: int


def _decode_mixed_radix(code, base, length):
    out = np.empty(length, dtype=np.int64)
    for j in range(length - 1, -1, -1):
        out[j] = code % base
        code //= base
    return out


def brute_force_binary(A: DenseMatrix, k: int, ip: InnerProductTable) -> OracleResult:
    """Exact optimum of the generalized binary problem by enumerating the
    smaller-side factor and pairing it with its exact best response."""
    if A.domain.kind != "binary":
        raise ContractError("brute_force_binary needs a binary matrix")
    n, d = A.rows, A.cols
    side = min(n, d)
    total = (1 << k) ** side
    if total > ENUMERATION_CAP:
        raise BudgetExceededError(total, ENUMERATION_CAP, "binary brute force")
    table = ip.values
    Af = A.astype_float()
    nlab = 1 << k
    transposed = n < d
    M = Af.T if transposed else Af  # enumerate codes along M's columns
    best_cost, best_codes, best_rows = None, None, None
    for code in range(total):
        colcodes = _decode_mixed_radix(code, nlab, side)
        # best response per row of M: candidate x gives row pattern table[x, colcodes]
        patterns = table[:, colcodes]  # (nlab, side)
        mism = (M[:, None, :] != patterns[None, :, :]).sum(axis=2)  # (rows, nlab)
        rows = np.argmin(mism, axis=1)
        cost = int(mism[np.arange(M.shape[0]), rows].sum())
        if best_cost is None or cost < best_cost:
            best_cost, best_codes, best_rows = cost, colcodes.copy(), rows.copy()
    if transposed:
        # M = A^T was factored as U_t V_t with <.,.>; transpose back.
        # table need not be symmetric, so keep the roles: rows of M are
        # columns of A, hence U gets best_codes and V gets best_rows only
        # when the table is symmetric; recompute directly instead.
        U = codes_to_bits(best_rows, k)
        V = codes_to_bits(best_codes, k).T
        # (U_t V_t)^T has entries <U_t[j], V_t[:,i]> = table[rowcode_j, colcode_i]
        prod = table[np.ix_(best_rows, best_codes)].T
        cost = int((Af != prod).sum())
        pair = FactorPair(
            DenseMatrix(codes_to_bits(best_codes, k), BINARY),
            DenseMatrix(codes_to_bits(best_rows, k).T, BINARY),
            float(cost),
        )
        assert cost == best_cost
    else:
        pair = FactorPair(
            DenseMatrix(codes_to_bits(best_rows, k), BINARY),
            DenseMatrix(codes_to_bits(best_codes, k).T, BINARY),
            float(best_cost),
        )
    return OracleResult(float(best_cost), pair, total)


def brute_force_fq(A: DenseMatrix, k: int) -> OracleResult:
    """Exact minimum of ||A - U V||_0 over F_q factors: V enumerated, U by
    per-row best response over the q^k candidate rows."""
    if A.domain.kind != "fq":
        raise ContractError("brute_force_fq needs an F_q matrix")
    q = A.domain.q
    F = gf.field(q)
    n, d = A.rows, A.cols
    total = q ** (k * d)
    if total > ENUMERATION_CAP:
        raise BudgetExceededError(total, ENUMERATION_CAP, "F_q brute force")
    ucands = np.stack(
        [_decode_mixed_radix(c, q, k) for c in range(q**k)]
    ).astype(np.int16)  # (q^k, k)
    Aint = A.data.astype(np.int64)
    best_cost, best_V, best_rows = None, None, None
    for code in range(total):
        flat = _decode_mixed_radix(code, q, k * d)
        V = flat.reshape(k, d).astype(np.int16)
        cand_rows = F.matmul(ucands, V)  # (q^k, d)
        mism = (Aint[:, None, :] != cand_rows[None, :, :]).sum(axis=2)
        rows = np.argmin(mism, axis=1)
        cost = int(mism[np.arange(n), rows].sum())
        if best_cost is None or cost < best_cost:
            best_cost, best_V, best_rows = cost, V.copy(), rows.copy()
    U = ucands[best_rows]
    pair = FactorPair(
        DenseMatrix(U, A.domain), DenseMatrix(best_V, A.domain), float(best_cost)
    )
    return OracleResult(float(best_cost), pair, total)


def brute_force_l1_grid(A: DenseMatrix, k: int, grid) -> OracleResult:
    """Exact minimum of ||U V - A||_1 over factor pairs with every entry on
    the grid.  V is enumerated; U rows are scanned over the grid too, so the
    optimum is grid-restricted on both sides."""
    if A.domain.kind != "real":
        raise ContractError("brute_force_l1_grid needs a real matrix")
    G = np.asarray(sorted(float(g) for g in grid))
    if G.size == 0:
        raise ContractError("empty grid")
    n, d = A.rows, A.cols
    total = G.size ** (k * (n + d))
    if total > ENUMERATION_CAP:
        raise BudgetExceededError(total, ENUMERATION_CAP, "grid brute force")
    Af = A.astype_float()
    ucands_idx = [
        _decode_mixed_radix(c, G.size, k) for c in range(G.size**k)
    ]
    ucands = np.stack([G[idx] for idx in ucands_idx])  # (|G|^k, k)
    n_v = G.size ** (k * d)
    best_cost, best_V, best_rows = None, None, None
    for code in range(n_v):
        idx = _decode_mixed_radix(code, G.size, k * d)
        V = G[idx].reshape(k, d)
        cand_rows = ucands @ V  # (|G|^k, d)
        err = np.abs(Af[:, None, :] - cand_rows[None, :, :]).sum(axis=2)
        rows = np.argmin(err, axis=1)
        cost = float(err[np.arange(n), rows].sum())
        if best_cost is None or cost < best_cost:
            best_cost, best_V, best_rows = cost, V.copy(), rows.copy()
    from .core import REAL

    pair = FactorPair(
        DenseMatrix(ucands[best_rows], REAL), DenseMatrix(best_V, REAL), best_cost
    )
    return OracleResult(best_cost, pair, n_v * len(ucands))


def expected_estimator(
    i, x, A: DenseMatrix, V_true: DenseMatrix, t: int, ip: InnerProductTable, alpha=None
) -> float:
    """Closed-form expectation of the estimated row cost under the sampling
    distribution.

    For clusters below t the summand is exact.  At or above t each of the t
    with-replacement draws is uniform, so E[Z~] = t * Z / |C_y| and the
    weighted summand collapses to (alpha_y / t) * t * Z / |C_y|; with exact
    alpha this equals the exact row cost, and inflating alpha by (1 + delta)
    scales the corresponding summands.  alpha may override the exact sizes
    (dict label -> value)."""
    if A.domain.kind != "binary" or V_true.domain.kind != "binary":
        raise ContractError("expected_estimator works on binary instances")
    k = V_true.rows
    weights = 1 << np.arange(k - 1, -1, -1)
    assignment = (V_true.data.T.astype(np.int64) @ weights).astype(np.int64)
    xcode = int(np.asarray(x, dtype=np.int64) @ weights)
    row = A.data[i].astype(np.int64)
    total = 0.0
    for y in range(1 << k):
        members = assignment == y
        size = int(members.sum())
        if size == 0:
            continue
        if size >= t and size > 12:
            raise ContractError("closed form assumes cluster sizes <= 12 once >= t")
        ones = int(row[members].sum())
        val = ip.values[xcode, y]
        z_neq = (size - ones) * (val != 0.0) + ones * (val != 1.0)
        a = float(alpha[y]) if alpha is not None else float(size)
        if size < t:
            total += (a / size) * z_neq
        else:
            total += (a / t) * (t * z_neq / size)
    return float(total)
