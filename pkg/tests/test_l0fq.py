import numpy as np
import pytest

from lowrank import gf
from lowrank.core import BudgetExceededError, fq_matrix
from lowrank.l0fq import (
    HashedBank,
    NestedSampler,
    SketchInstance,
    est,
    estimate_l0,
    fq_rank_k_approx,
    least_prime_at_least,
    med_l0,
)
from lowrank.oracle import brute_force_fq


# ------------------------------------------------------------------ fields


def test_prime_power_factoring():
    assert gf.factor_prime_power(7) == (7, 1)
    assert gf.factor_prime_power(243) == (3, 5)
    assert gf.factor_prime_power(256) == (2, 8)
    with pytest.raises(ValueError):
        gf.factor_prime_power(12)


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9, 25, 27])
def test_field_axioms(q):
    F = gf.field(q)
    idx = np.arange(q)
    assert np.array_equal(F.add, F.add.T)  # commutative
    assert np.array_equal(F.mul, F.mul.T)
    assert np.array_equal(F.add[0], idx)  # additive identity
    assert np.array_equal(F.mul[1], idx)  # multiplicative identity
    assert np.array_equal(F.add[idx, F.neg[idx]], np.zeros(q))
    for a in range(1, q):
        assert F.mul[a, F.inv[a]] == 1
    rng = np.random.default_rng(q)
    for _ in range(25):
        a, b, c = rng.integers(0, q, 3)
        assert F.add[F.add[a, b], c] == F.add[a, F.add[b, c]]
        assert F.mul[F.mul[a, b], c] == F.mul[a, F.mul[b, c]]
        assert F.mul[a, F.add[b, c]] == F.add[F.mul[a, b], F.mul[a, c]]


def test_field_char_divides_addition():
    F = gf.field(4)  # characteristic 2: x + x = 0
    for a in range(4):
        assert F.add[a, a] == 0


def test_row_reduce_and_exact_factorization():
    F = gf.field(3)
    rng = np.random.default_rng(0)
    U = rng.integers(0, 3, (5, 2)).astype(np.int16)
    V = rng.integers(0, 3, (2, 6)).astype(np.int16)
    M = F.matmul(U, V)
    assert F.rank(M) <= 2
    fact = F.exact_factorization(M, 2)
    assert fact is not None
    U2, V2 = fact
    assert np.array_equal(F.matmul(U2, V2), M)
    full = rng.integers(0, 3, (4, 4)).astype(np.int16)
    if F.rank(full) > 2:
        assert F.exact_factorization(full, 2) is None


def test_least_prime():
    assert least_prime_at_least(8) == 11
    assert least_prime_at_least(11) == 11
    assert least_prime_at_least(268435456) == 268435459


# ------------------------------------------------------------ level sketch


def test_nested_sampler_levels():
    s = NestedSampler(64, seed=1)
    assert s.levels == 6
    lev = s.level_of()
    # level 0 contains everything; deeper levels are nested by construction
    assert (lev >= 0).all()
    sets = [(s.u < 2.0**-i) for i in range(s.levels)]
    assert sets[0].all()
    for i in range(1, s.levels):
        assert not (sets[i] & ~sets[i - 1]).any()


def test_level_counts_trivial():
    inst = SketchInstance(16, 2, B=64, seed=0)
    zero = np.zeros(16, dtype=np.int16)
    hashed, unhashed = inst.level_counts(zero)
    assert not hashed.counts.any() and not unhashed.counts.any()
    e1 = np.zeros(16, dtype=np.int16)
    e1[0] = 1
    hashed, unhashed = inst.level_counts(e1)
    deepest = inst.coord_level[0]
    for lev in range(inst.levels):
        expect = 1 if lev <= deepest else 0
        assert unhashed.counts[lev] == expect
        assert hashed.counts[lev] == expect


def test_level_counts_match_direct_recount():
    rng = np.random.default_rng(2)
    inst = SketchInstance(64, 3, B=997, seed=3)
    x = np.zeros(64, dtype=np.int16)
    sup = rng.choice(64, 8, replace=False)
    x[sup] = rng.integers(1, 3, 8)
    hashed, unhashed = inst.level_counts(x)
    assert unhashed.counts[0] == 8
    for lev in range(inst.levels):
        members = [j for j in sup if inst.coord_level[j] >= lev]
        assert unhashed.counts[lev] == len(members)
        sums = {}
        F = gf.field(3)
        for j in members:
            b = int(inst.bucket[j])
            sums[b] = int(F.add[sums.get(b, 0), int(x[j])])
        assert hashed.counts[lev] == sum(1 for v in sums.values() if v != 0)


def test_nestedness_and_hash_never_inflates():
    rng = np.random.default_rng(4)
    inst = SketchInstance(128, 2, B=4096, seed=5)
    for _ in range(500):
        x = np.zeros(128, dtype=np.int16)
        sup = rng.choice(128, int(rng.integers(0, 40)), replace=False)
        x[sup] = 1
        hashed, unhashed = inst.level_counts(x)
        assert (np.diff(unhashed.counts) <= 0).all()
        assert (hashed.counts <= unhashed.counts).all()


def test_bucket_sum_linearity():
    rng = np.random.default_rng(6)
    for q in (2, 3, 4):
        F = gf.field(q)
        inst = SketchInstance(32, q, B=64, seed=q)
        for _ in range(20):
            x = rng.integers(0, q, 32).astype(np.int16)
            y = rng.integers(0, q, 32).astype(np.int16)
            xy = F.vadd(x, y).astype(np.int16)
            sx, sy, sxy = inst.bucket_sums(x), inst.bucket_sums(y), inst.bucket_sums(xy)
            keys = set(sx) | set(sy) | set(sxy)
            for key in keys:
                assert sxy.get(key, 0) == int(F.add[sx.get(key, 0), sy.get(key, 0)])


# --------------------------------------------------------------- estimator


def test_est_examples():
    assert est(np.array([10, 6, 2]), 4) == 12  # index 1, 6 / (1/2)
    assert est(np.array([3, 1]), 4) == 3  # fallback to level 0
    assert est(np.array([10, 6, 5]), 4) == 20  # index 2, 5 / (1/4)


def test_estimate_l0_zero_and_perfect_hash():
    bank = HashedBank(32, 2, eps=0.25, K=5, seed=0)
    zero = np.zeros(32, dtype=np.int16)
    assert not estimate_l0(bank, zero).any()
    # support far below tau with a huge bucket range: perfect hash gives the
    # exact support size at level 0
    x = np.zeros(32, dtype=np.int16)
    x[[1, 7, 19]] = 1
    assert med_l0(bank, x) == 3.0


def test_bank_median_band_small():
    rng = np.random.default_rng(7)
    n, nnz = 256, 50
    hits = 0
    for b in range(20):
        bank = HashedBank(n, 2, eps=0.25, K=7, seed=100 + b)
        x = np.zeros(n, dtype=np.int16)
        x[rng.choice(n, nnz, replace=False)] = 1
        if 0.7 * nnz <= med_l0(bank, x) <= 1.3 * nnz:
            hits += 1
    assert hits >= 14  # 70%


def test_tail_bound_markov():
    # exceedance of M * ||x||_0 at M = 4 should be rare (<= 0.35 with slack)
    rng = np.random.default_rng(8)
    n, nnz, M = 256, 40, 4
    exceed = 0
    for trial in range(200):
        inst = SketchInstance(n, 2, B=2048, seed=5000 + trial)
        x = np.zeros(n, dtype=np.int16)
        x[rng.choice(n, nnz, replace=False)] = 1
        hashed, _ = inst.level_counts(x)
        if est(hashed, gamma=8.0) > M * nnz:
            exceed += 1
    assert exceed / 200 <= 0.35


# ------------------------------------------------------------------ solver


def test_fq_solver_rank_k_is_exact():
    F = gf.field(2)
    rng = np.random.default_rng(9)
    U = rng.integers(0, 2, (4, 1)).astype(np.int16)
    V = rng.integers(0, 2, (1, 4)).astype(np.int16)
    A = fq_matrix(F.matmul(U, V), 2)
    pair = fq_rank_k_approx(A, 1, budget=1 << 12, seed=0)
    assert pair.cost == 0
    assert np.array_equal(F.matmul(pair.U.data, pair.V.data), A.data)


def test_fq_solver_full_rank_allowed():
    rng = np.random.default_rng(10)
    A = fq_matrix(rng.integers(0, 3, (4, 4)), 3)
    pair = fq_rank_k_approx(A, 4, budget=1 << 12, seed=0)
    assert pair.cost == 0


def test_fq_solver_budget_refusal():
    A = fq_matrix(np.eye(16, dtype=int), 2)
    with pytest.raises(BudgetExceededError) as exc:
        fq_rank_k_approx(A, 1, budget=4, seed=0)
    assert exc.value.required > 4


def test_fq_solver_within_one_of_oracle():
    rng = np.random.default_rng(11)
    hits = 0
    for idx in range(20):
        A = fq_matrix(rng.integers(0, 2, (4, 4)), 2)
        opt = brute_force_fq(A, 1).opt_cost
        pair = fq_rank_k_approx(A, 1, budget=1 << 12, seed=idx)
        assert pair.cost >= opt
        hits += pair.cost <= opt + 1
    assert hits >= 18


def test_fq_solver_q3():
    rng = np.random.default_rng(12)
    A = fq_matrix(rng.integers(0, 3, (3, 3)), 3)
    pair = fq_rank_k_approx(A, 1, budget=3**8, seed=1)
    opt = brute_force_fq(A, 1).opt_cost
    assert opt <= pair.cost <= opt + 3
