import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowrank.core import ContractError, DenseMatrix, ParameterError, REAL, real_matrix
from lowrank.sketch import (
    QuantileSpec,
    StableSketch,
    embedding_trial,
    estimate_medp,
    med,
    med_matrix,
    quantile,
    sample_sketch,
    sketch_apply,
)


def test_sketch_determinism_and_reproducibility():
    a = sample_sketch(2, 2, 1.0, 42)
    b = sample_sketch(2, 2, 1.0, 42)
    assert np.array_equal(a.entries, b.entries)
    again = StableSketch(a.m, a.n, a.p, a.seed)
    assert np.array_equal(a.entries, again.entries)
    assert not np.array_equal(a.entries, sample_sketch(2, 2, 1.0, 43).entries)


def test_sketch_parameter_errors():
    with pytest.raises(ParameterError):
        sample_sketch(2, 2, 0.0, 1)
    with pytest.raises(ParameterError):
        sample_sketch(2, 2, 2.5, 1)
    with pytest.raises(ParameterError):
        sample_sketch(0, 2, 1.0, 1)


def test_cauchy_median_of_abs_is_one():
    s = sample_sketch(1000, 1000, 1.0, 7)
    assert med(s.entries.ravel()) == pytest.approx(1.0, abs=0.01)


def _cms_reference(p, rng, size):
    # independent re-coding of the closed-form sampler, used as the
    # two-sampler agreement oracle
    theta = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.exponential(1.0, size)
    a = np.sin(p * theta) / np.cos(theta) ** (1 / p)
    b = (np.cos((1 - p) * theta) / w) ** ((1 - p) / p)
    return a * b


def _ks_distance(x, y):
    allv = np.sort(np.concatenate([x, y]))
    cx = np.searchsorted(np.sort(x), allv, side="right") / x.size
    cy = np.searchsorted(np.sort(y), allv, side="right") / y.size
    return float(np.abs(cx - cy).max())


def test_p_half_matches_reference_sampler():
    draws = sample_sketch(1000, 1000, 0.5, 3).entries.ravel()
    ref = _cms_reference(0.5, np.random.default_rng(1234), 10**6)
    assert _ks_distance(draws, ref) < 0.01


def test_p1_paths_agree_in_distribution():
    cauchy = sample_sketch(1000, 500, 1.0, 5).entries.ravel()
    rng = np.random.default_rng(6)
    cms = np.tan(rng.uniform(-math.pi / 2, math.pi / 2, cauchy.size))
    assert _ks_distance(cauchy, cms) < 0.01


# ---------------------------------------------------------------- quantiles


def test_quantile_examples():
    assert quantile([3, -1, 2], QuantileSpec(0.5)) == 2
    assert quantile([5], 0.1) == 5
    assert quantile([5], 0.99) == 5
    assert quantile([-4, 1, -2, 3], 0.75) == 3
    with pytest.raises(ContractError):
        quantile([], 0.5)
    with pytest.raises(ParameterError):
        QuantileSpec(0.0)


def test_med_examples():
    assert med([1, 2, 3]) == 2
    # forced by the ceil(alpha m) index rule: med of a 2-vector is the
    # smaller absolute value, so med_matrix(I_2) = 0
    assert med_matrix(np.eye(2)) == 0
    assert med_matrix(np.ones((3, 1))) == 1


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=30),
    st.floats(0.01, 1.0),
    st.floats(0.01, 1.0),
)
def test_quantile_monotone_in_alpha(vals, a1, a2):
    lo, hi = min(a1, a2), max(a1, a2)
    assert quantile(vals, lo) <= quantile(vals, hi)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=30),
    st.floats(0.01, 1.0),
    st.floats(-4, 4),
)
def test_quantile_scale_equivariance(vals, alpha, c):
    lhs = quantile([c * v for v in vals], alpha)
    assert lhs == pytest.approx(abs(c) * quantile(vals, alpha), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------- med_p


def test_medp_p1_is_one():
    assert estimate_medp(1.0 + 1e-9, 10**6, 0) == pytest.approx(1.0, abs=0.01)


def test_medp_caching_and_determinism():
    a = estimate_medp(1.5, 10**4, 9)
    b = estimate_medp(1.5, 10**4, 9)
    assert a == b


def test_medp_seed_stability():
    a = estimate_medp(1.5, 10**6, 1)
    b = estimate_medp(1.5, 10**6, 2)
    assert abs(a - b) / a < 0.005


def test_medp_contract():
    with pytest.raises(ParameterError):
        estimate_medp(1.5, 100, 0)
    with pytest.raises(ParameterError):
        estimate_medp(2.0, 10**4, 0)


# ---------------------------------------------------------------- apply


def test_sketch_apply_identity_and_ones():
    M = real_matrix([[1.0, 2.0], [3.0, 4.0]])
    S = sample_sketch(2, 2, 1.0, 0)
    object.__setattr__(S, "entries", np.eye(2))  # test constructor: identity sketch
    assert np.array_equal(sketch_apply(S, M).data, M.data)
    object.__setattr__(S, "entries", np.ones((1, 2)))
    assert np.array_equal(sketch_apply(S, real_matrix(np.eye(2))).data, [[1.0, 1.0]])


def test_sketch_apply_matches_naive_product():
    rng = np.random.default_rng(0)
    S = sample_sketch(3, 4, 1.0, 1)
    M = real_matrix(rng.uniform(-2, 2, (4, 2)))
    out = sketch_apply(S, M).data
    naive = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for l in range(4):
                naive[i, j] += S.entries[i, l] * M.data[l, j]
    assert np.allclose(out, naive, atol=1e-12)
    with pytest.raises(ContractError):
        sketch_apply(S, real_matrix(np.eye(3)))


def test_sketch_additivity_is_exact():
    rng = np.random.default_rng(8)
    S = sample_sketch(5, 6, 1.0, 2)
    A = real_matrix(rng.uniform(-1, 1, (6, 3)))
    B = real_matrix(rng.uniform(-1, 1, (6, 3)))
    AB = real_matrix(A.data + B.data)
    lhs = sketch_apply(S, AB).data
    rhs = sketch_apply(S, A).data + sketch_apply(S, B).data
    assert np.allclose(lhs, rhs, atol=1e-12)


# ---------------------------------------------------------------- trials


def test_embedding_trial_k1():
    U = DenseMatrix(np.eye(20)[:, :1], REAL)
    frac = embedding_trial(U, 1.0, 200, 200, 0.2, 123)
    assert frac >= 0.9


def test_embedding_trial_degenerate_band_and_zero_matrix():
    rng = np.random.default_rng(3)
    U = real_matrix(rng.standard_normal((10, 2)))
    assert embedding_trial(U, 1.0, 100, 50, 1.0, 5) == 1.0
    Z = DenseMatrix.zeros(10, 2)
    assert embedding_trial(Z, 1.0, 50, 30, 0.2, 5) == 1.0


def test_fixed_matrix_concentration_and_quantile_tail():
    # 10x10 entries U[-1,1], eps = 0.25, m = ceil(eps^-3) = 64
    eps = 0.25
    m = math.ceil(eps**-3)
    rng = np.random.default_rng(99)
    M = rng.uniform(-1, 1, (10, 10))
    l1 = np.abs(M).sum()
    med_hits = 0
    tail_hits = 0
    for trial in range(100):
        S = sample_sketch(m, 10, 1.0, 10_000 + trial)
        SM = S.entries @ M
        mval = med_matrix(SM)
        if (1 - 2 * eps) * l1 <= mval <= (1 + 2 * eps) * l1:
            med_hits += 1
        qsum = sum(quantile(SM[:, i], 1 - eps / 2) for i in range(10))
        if qsum <= (8 / eps) * l1:
            tail_hits += 1
    assert med_hits >= 80
    assert tail_hits >= 80
