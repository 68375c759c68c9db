import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scflow.errors import DomainError
from scflow.scspace import (
    BUNDLED_FAMILIES,
    IndexMode,
    ScVector,
    WeightFamily,
    basis_suite,
    inner_e0,
    interpolation_gap,
    interpolation_rhs,
    interpolation_triples,
    kahan_sum,
    level_norm,
    level_norms,
    random_suite,
    random_vector,
    shift_map,
    vector_seeds,
    weight_eval,
)

SQ = WeightFamily.poly_square()
N = 16

families = st.sampled_from(BUNDLED_FAMILIES).map(WeightFamily.parse)
seeds = st.integers(min_value=0, max_value=2**64 - 1)


def vec(w, coeffs, n=N):
    return ScVector.from_coeffs(w, n, coeffs)


# --- worked examples -------------------------------------------------------


@pytest.mark.parametrize(
    "w, n, expected",
    [
        (SQ, 3, 9.0),
        (WeightFamily.poly_shifted(), 0, 1.0),
        (WeightFamily.sobolev_like(2), 8, 8.0),
        (WeightFamily.poly_shifted(), -3, 10.0),
        (WeightFamily.sobolev_like(1), 4, 16.0),
    ],
)
def test_weight_eval_examples(w, n, expected):
    assert weight_eval(w, n) == expected


@pytest.mark.parametrize(
    "w, n",
    [(SQ, 0), (SQ, -1), (WeightFamily.poly_shifted(IndexMode.NATURAL_FROM_ONE), 0), (WeightFamily.custom([1, 2]), 3)],
)
def test_weight_eval_out_of_range(w, n):
    with pytest.raises(DomainError):
        weight_eval(w, n)


def test_parse_round_trip():
    for name in BUNDLED_FAMILIES + ("PolyShifted(NaturalFromOne)",):
        assert WeightFamily.parse(name).name == name
    with pytest.raises(DomainError):
        WeightFamily.parse("Exponential")


def test_custom_weights_must_be_positive():
    with pytest.raises(DomainError):
        WeightFamily.custom([1.0, 0.0])


def test_level_norm_examples():
    assert level_norm(vec(SQ, {2: 1.0}), 1) == 2.0
    assert level_norm(vec(SQ, {1: 1.0, 2: 1.0}), 1) == math.sqrt(5.0)
    for k in range(6):
        assert level_norm(ScVector.zeros(SQ, N), k) == 0.0


def test_integer_indexed_space():
    w = WeightFamily.poly_shifted()
    x = vec(w, {-2: 1.0, 0: 1.0, 2: 1.0}, n=4)
    assert x.dim == 9
    assert level_norm(x, 1) == math.sqrt(5 + 1 + 5)


def test_inner_e0_examples():
    e1, e2 = vec(SQ, {1: 1.0}), vec(SQ, {2: 1.0})
    assert inner_e0(e1, e2) == 0.0
    assert inner_e0(e1, e1) == 1.0
    assert inner_e0(vec(SQ, {1: 1.0, 2: 2.0}), vec(SQ, {2: 3.0})) == 6.0


def test_inner_e0_mismatched_families():
    with pytest.raises(DomainError):
        inner_e0(vec(SQ, {1: 1.0}), vec(WeightFamily.sobolev_like(1), {1: 1.0}))
    with pytest.raises(DomainError):
        inner_e0(vec(SQ, {1: 1.0}), vec(SQ, {1: 1.0}, n=N + 1))


def test_shift_map_examples():
    e2 = vec(SQ, {2: 1.0})
    assert np.array_equal(shift_map(e2, 2).values, (e2 * 4.0).values)
    x = random_vector(SQ, N, 7)
    assert np.array_equal(shift_map(x, 0).values, x.values)
    with pytest.raises(DomainError):
        shift_map(x, -1)


def test_interpolation_gap_ordering():
    x = vec(SQ, {1: 1.0})
    for bad in [(1, 1, 2), (2, 1, 3), (0, 3, 3), (-1, 0, 1)]:
        with pytest.raises(DomainError):
            interpolation_gap(x, *bad)


def test_interpolation_gap_zero_vector_is_domain_error():
    with pytest.raises(DomainError):
        interpolation_gap(ScVector.zeros(SQ, N), 0, 1, 2)


def test_interpolation_rhs_by_hand():
    # ||x||_0 = 1, ||x||_2 = 16 at (i,j,k) = (0,1,2) gives 16^(1/2) * 1^(1/2).
    assert interpolation_rhs(1.0, 16.0, 0, 1, 2) == 4.0


def test_triples_count():
    t = interpolation_triples(10)
    assert len(t) == 165
    assert all(i < j < k for i, j, k in t)


def test_kahan_sum_recovers_cancelled_digits():
    terms = np.array([1.0, 1e-16, 1e-16, 1e-16, 1e-16])
    assert kahan_sum(terms) == math.fsum(terms)
    assert np.sum(terms) != math.fsum(terms)


def test_vector_seeds_are_deterministic_u64():
    a, b = vector_seeds(123, 5), vector_seeds(123, 5)
    assert a.dtype == np.uint64 and np.array_equal(a, b)
    assert not np.array_equal(a, vector_seeds(124, 5))


def test_random_vector_is_reproducible():
    assert np.array_equal(random_vector(SQ, N, 5).values, random_vector(SQ, N, 5).values)


# --- suites ----------------------------------------------------------------


@pytest.mark.parametrize("name", BUNDLED_FAMILIES)
def test_random_suite_has_no_violations(name):
    suite = random_suite(WeightFamily.parse(name), 64, 300, seed=11)
    assert suite.violations(1e-12) == 0
    assert suite.lhs.shape == (300, 165)


@pytest.mark.parametrize("name", BUNDLED_FAMILIES)
def test_basis_vectors_give_equality(name):
    suite = basis_suite(WeightFamily.parse(name), 64)
    assert np.max(np.abs(suite.relative_gap())) <= 1e-13


def test_wrong_exponent_is_detected():
    suite = random_suite(SQ, 64, 50, seed=0, level_shift=1)
    assert suite.violations(1e-12) > 0


# --- properties ------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(w=families, seed=seeds, m=st.integers(0, 5), k=st.integers(0, 5))
def test_shift_map_is_isometry(w, seed, m, k):
    x = random_vector(w, 32, seed)
    assert math.isclose(level_norm(shift_map(x, m), k), level_norm(x, k + m), rel_tol=1e-13)


@settings(max_examples=200, deadline=None)
@given(w=families, seed=seeds)
def test_norms_increase_with_level(w, seed):
    norms = level_norms(random_vector(w, 32, seed), range(11))
    assert np.all(np.diff(norms) >= -1e-15 * norms[1:])


@settings(max_examples=300, deadline=None)
@given(w=families, seed=seeds)
def test_step_one_inequality(w, seed):
    x = random_vector(w, 64, seed)
    n0, n1, n2 = level_norms(x, [0, 1, 2])
    assert n1 <= math.sqrt(n2) * math.sqrt(n0) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(w=families, seed=seeds, ijk=st.sampled_from(interpolation_triples(10)))
def test_general_interpolation(w, seed, ijk):
    x = random_vector(w, 64, seed)
    gap = interpolation_gap(x, *ijk)
    n = level_norms(x, [ijk[0], ijk[2]])
    assert gap >= -1e-12 * interpolation_rhs(n[0], n[1], *ijk)


coeff_arrays = st.lists(
    st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False), min_size=N, max_size=N
).map(np.array)


@settings(max_examples=200, deadline=None)
@given(a=coeff_arrays, b=coeff_arrays)
def test_cauchy_schwarz(a, b):
    x, y = ScVector(SQ, N, a), ScVector(SQ, N, b)
    assert abs(inner_e0(x, y)) <= level_norm(x, 0) * level_norm(y, 0) * (1 + 1e-12) + 1e-300


@settings(max_examples=200, deadline=None)
@given(a=coeff_arrays, b=coeff_arrays, c=coeff_arrays, t=st.floats(-10, 10))
def test_inner_bilinear_and_symmetric(a, b, c, t):
    x, y, z = (ScVector(SQ, N, v) for v in (a, b, c))
    assert inner_e0(x, y) == inner_e0(y, x)
    lhs = inner_e0(x * t + y, z)
    rhs = t * inner_e0(x, z) + inner_e0(y, z)
    scale = (abs(t) * level_norm(x, 0) + level_norm(y, 0)) * level_norm(z, 0)
    assert abs(lhs - rhs) <= 1e-12 * scale + 1e-300
