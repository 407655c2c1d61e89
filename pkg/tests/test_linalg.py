import itertools

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from matsn import linalg as la
from matsn.errors import (
    DimensionTooLarge,
    NonFiniteValue,
    NonPositiveDiagonal,
    NotPositiveDefinite,
    NotSymmetric,
    ShapeMismatch,
)
from strategies import matrices, spd, symmetric


def column_stack_loop(m):
    n, p = m.shape
    out = np.empty(n * p)
    for j in range(p):
        for i in range(n):
            out[i + n * j] = m[i, j]
    return out


def grid_min(a, resolution):
    """Brute-force simplex minimum of x'ax on a 1/resolution lattice."""
    d = a.shape[0]
    best = np.inf
    for head in itertools.product(range(resolution + 1), repeat=d - 1):
        if sum(head) > resolution:
            continue
        x = np.array(head + (resolution - sum(head),)) / resolution
        best = min(best, x @ a @ x)
    return best


# vec / kron ------------------------------------------------------------------


def test_vec_small_example():
    assert la.vec([[1, 2], [3, 4]]).tolist() == [1, 3, 2, 4]


def test_vec_of_column_is_itself():
    col = np.arange(5.0)[:, None]
    assert np.array_equal(la.vec(col), col[:, 0])


def test_vec_of_product_is_kronecker_action(rng):
    B, C, D = rng.normal(size=(2, 3)), rng.normal(size=(3, 2)), rng.normal(size=(2, 2))
    assert np.allclose(la.vec(B @ C @ D), la.kron(D.T, B) @ la.vec(C), atol=1e-12)


@given(st.integers(1, 8), st.integers(1, 8), st.data())
def test_vec_matches_loop_and_unvec_inverts(n, p, data):
    m = data.draw(matrices(n, p))
    v = la.vec(m)
    assert np.array_equal(v, column_stack_loop(m))
    assert np.array_equal(la.unvec(v, n, p), m)
    assert np.array_equal(la.vec(la.unvec(v, n, p)), v)


def test_vec_handles_stacks(rng):
    stack = rng.normal(size=(4, 2, 3))
    assert np.array_equal(la.vec(stack), np.stack([column_stack_loop(m) for m in stack]))


def test_unvec_rejects_wrong_length():
    with pytest.raises(ShapeMismatch):
        la.unvec(np.zeros(5), 2, 3)


def test_kron_identity_and_scalar(rng):
    assert np.array_equal(la.kron(np.eye(2), np.eye(3)), np.eye(6))
    M = rng.normal(size=(3, 2))
    assert np.array_equal(la.kron([[2.0]], M), 2 * M)


@given(st.data())
def test_kron_mixed_product_and_transpose(data):
    dims = data.draw(st.lists(st.integers(1, 3), min_size=6, max_size=6))
    a, b, c, d, e, f = dims
    el = st.floats(-1, 1, allow_nan=False)
    A, B = data.draw(matrices(a, b, el)), data.draw(matrices(b, c, el))
    C, D = data.draw(matrices(d, e, el)), data.draw(matrices(e, f, el))
    lhs = la.kron(A, C) @ la.kron(B, D)
    assert np.max(np.abs(lhs - la.kron(A @ B, C @ D))) < 1e-12
    assert np.array_equal(la.kron(A, C).T, la.kron(A.T, C.T))


# correlation -------------------------------------------------------------------


def test_corr_decompose_examples():
    d = la.corr_decompose(np.eye(3))
    assert np.array_equal(d.scale_diag, np.ones(3)) and np.array_equal(d.correlation, np.eye(3))
    d = la.corr_decompose(np.diag([4.0, 9.0]))
    assert np.allclose(d.scale_diag, [2, 3]) and np.allclose(d.correlation, np.eye(2))
    d = la.corr_decompose([[4.0, 2.0], [2.0, 4.0]])
    assert np.allclose(d.scale_diag, [2, 2]) and np.allclose(d.correlation, [[1, 0.5], [0.5, 1]])


def test_corr_decompose_rejects_nonpositive_diagonal():
    with pytest.raises(NonPositiveDiagonal):
        la.corr_decompose([[0.0, 0.0], [0.0, 1.0]])


@given(st.integers(1, 5).flatmap(spd))
def test_corr_decompose_reconstructs(omega):
    d = la.corr_decompose(omega)
    assert np.allclose(np.diag(d.correlation), 1.0, atol=1e-12)
    assert np.max(np.abs(d.reconstruct() - omega)) <= 1e-10 * np.max(np.abs(omega))


@given(st.integers(2, 4).flatmap(spd), st.integers(2, 4).flatmap(spd))
def test_kron_correlation_identity(v, sigma):
    assert la.kron_corr_check(v, sigma)


def test_kron_corr_check_identity_pair():
    assert la.kron_corr_check(np.eye(2), np.eye(3))


# validation -------------------------------------------------------------------


def test_as_spd_errors():
    with pytest.raises(NotSymmetric):
        la.as_spd([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NotPositiveDefinite):
        la.as_spd([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NonFiniteValue):
        la.as_spd([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ShapeMismatch):
        la.as_spd(np.zeros((2, 3)))


# PSD ------------------------------------------------------------------------------


def test_is_psd_examples():
    assert la.is_psd(np.eye(3)) == (True, None)
    assert la.is_psd(np.zeros((2, 2)))[0]
    ok, z = la.is_psd([[0.0, 1.0], [1.0, 0.0]])
    assert not ok
    assert np.isclose(abs(z @ np.array([1.0, -1.0])) / np.sqrt(2), 1.0)
    assert np.isclose(z @ np.array([[0.0, 1.0], [1.0, 0.0]]) @ z, -1.0)


def test_is_psd_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        la.is_psd([[0.0, 1.0], [0.0, 0.0]])


@given(st.integers(1, 5).flatmap(symmetric))
def test_is_psd_agrees_with_eigenvalues(a):
    ok, z = la.is_psd(a, tol=1e-8)
    lo = np.linalg.eigvalsh(a)[0]
    scale = max(1.0, np.max(np.abs(a)))
    assert ok == (lo >= -1e-8 * scale)
    if not ok:
        assert z @ a @ z < 0


def test_is_psd_accepts_singular_psd():
    u = np.array([1.0, 2.0, -1.0])
    assert la.is_psd(np.outer(u, u))[0]


# copositivity ------------------------------------------------------------------------


def test_copositive_examples():
    v = la.is_copositive([[0.0, 1.0], [1.0, 0.0]])
    assert v.status == "Copositive" and v.min_value == 0.0
    v = la.is_copositive([[1.0, -2.0], [-2.0, 1.0]])
    assert v.status == "NotCopositive"
    assert np.allclose(v.witness, [0.5, 0.5]) and np.isclose(v.min_value, -0.5)


def test_copositive_rejects_large_dimension():
    with pytest.raises(DimensionTooLarge):
        la.is_copositive(np.eye(17))


@given(st.integers(1, 5).flatmap(spd))
def test_psd_implies_copositive(a):
    assert la.is_copositive(a).copositive


@given(st.integers(2, 6).flatmap(symmetric))
def test_copositivity_verdict_invariants(a):
    v = la.is_copositive(a)
    scale = max(1.0, np.max(np.abs(a)))
    if v.copositive:
        assert v.witness is None and v.min_value >= -1e-8 * scale
    else:
        w = v.witness
        assert np.all(w >= 0) and np.isclose(w.sum(), 1.0)
        assert np.isclose(w @ a @ w, v.min_value) and v.min_value < -1e-8 * scale
    if la.is_psd(a)[0]:
        assert v.copositive


@given(st.integers(2, 3).flatmap(symmetric))
def test_copositivity_agrees_with_grid_oracle(a):
    resolution = 40
    low = grid_min(a, resolution)
    # lattice minimum overshoots the true minimum by at most ~ 4 max|a| d / resolution
    assume(abs(low) > max(4 * np.max(np.abs(a)) * a.shape[0] / resolution, 1e-6))
    assert la.is_copositive(a).copositive == (low > 0)


def test_copositive_min_value_is_global(rng):
    for _ in range(30):
        a = rng.uniform(-1, 1, size=(3, 3))
        a = 0.5 * (a + a.T)
        v = la.is_copositive(a)
        assert v.min_value <= grid_min(a, 60) + 1e-12


def test_copositive_not_psd_example():
    a = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    assert not la.is_psd(a)[0]
    assert la.is_copositive(a).copositive


# comparisons ---------------------------------------------------------------------------


def test_kron_equal_up_to_scale_examples(rng):
    V, S = np.array([[2.0, 0.3], [0.3, 1.0]]), np.array([[1.0, -0.2], [-0.2, 0.5]])
    a = la.kron_equal_up_to_scale(V, S, 2 * V, S / 2)
    assert a == pytest.approx(0.5)
    assert np.allclose(la.kron(V, S), la.kron(2 * V, S / 2))
    assert la.kron_equal_up_to_scale(V, S, V, S) == 1.0
    assert la.kron_equal_up_to_scale(np.eye(2), np.eye(2), np.eye(2), 2 * np.eye(2)) is None


@given(st.integers(1, 3).flatmap(spd), st.integers(1, 3).flatmap(spd), st.floats(0.1, 10.0))
def test_kron_scale_iff_products_equal(v, s, a):
    found = la.kron_equal_up_to_scale(a * v, s / a, v, s, tol=1e-9)
    assert found == pytest.approx(a, rel=1e-12)
    assert np.allclose(la.kron(a * v, s / a), la.kron(v, s))


def test_elementwise_leq_examples(rng):
    M = rng.normal(size=(2, 3))
    assert la.elementwise_leq(np.zeros((2, 2)), np.abs(rng.normal(size=(2, 2))))
    assert la.elementwise_leq(M, M)
    assert not la.elementwise_leq([[1, 5]], [[2, 4]])
    with pytest.raises(ShapeMismatch):
        la.elementwise_leq(np.zeros((2, 2)), np.zeros((2, 3)))


def test_first_violation_reports_largest_excess():
    assert la.first_violation([[1, 5, 9]], [[2, 4, 3]]) == (0, 2)
    assert la.first_violation([1.0, 2.0], [1.0, 2.0]) is None
