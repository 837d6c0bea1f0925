import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hitsndiffs import dense
from hitsndiffs.errors import ConfigInvalid, DegenerateDeflation, NonSquare, TooLarge, ZeroIterate
from hitsndiffs.matrix import abh_shifted_matvec, u_matvec, udiff_matvec, ut_matvec
from hitsndiffs.spectral import (
    PowerConfig,
    dense_eig_oracle,
    power_iteration,
    random_start,
    second_eigvec_hotelling,
    sign_normalize,
)

TIGHT = PowerConfig(tol=1e-12, max_iter=100_000)
INV_SQRT2 = 1 / np.sqrt(2)


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        PowerConfig(tol=0)
    with pytest.raises(ConfigInvalid):
        PowerConfig(max_iter=0)
    assert PowerConfig().tol == 1e-5 and PowerConfig().max_iter == 1000


def test_sign_normalize():
    np.testing.assert_array_equal(sign_normalize(np.array([0.0, -2.0, 1.0])), [0.0, 2.0, -1.0])
    np.testing.assert_array_equal(sign_normalize(np.array([0.0, 3.0])), [0.0, 3.0])


def test_power_diagonal():
    A = np.diag([3.0, 1.0])
    res = power_iteration(lambda v: A @ v, 2, PowerConfig(seed=7))
    assert res.converged
    assert res.eigenvalue == pytest.approx(3.0, abs=1e-8)
    np.testing.assert_allclose(res.eigenvector, [1.0, 0.0], atol=1e-5)


def test_power_udiff_ex1(ex1):
    res = power_iteration(lambda d: udiff_matvec(ex1, d), 2, TIGHT)
    assert res.eigenvalue == pytest.approx(0.75, abs=1e-12)
    np.testing.assert_allclose(res.eigenvector, [INV_SQRT2, INV_SQRT2], atol=1e-10)


def test_power_abh_ex1(ex1):
    res = power_iteration(lambda d: abh_shifted_matvec(ex1, d, 4.0), 2, TIGHT)
    assert res.eigenvalue == pytest.approx(3.0, abs=1e-10)
    np.testing.assert_allclose(res.eigenvector, [INV_SQRT2, INV_SQRT2], atol=1e-10)


def test_power_zero_operator():
    with pytest.raises(ZeroIterate):
        power_iteration(lambda v: 0 * v, 3)


def test_power_stops_at_max_iter():
    # eigenvalues +1 and -1: the iterate flips between two directions forever
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    res = power_iteration(lambda v: A @ v, 2, PowerConfig(max_iter=3))
    assert res.iterations == 3 and not res.converged


def test_hotelling_diagonal():
    A = np.diag([3.0, 2.0, 1.0])
    res = second_eigvec_hotelling(lambda x: A @ x, lambda x: A.T @ x, 3, TIGHT)
    assert res.eigenvalue == pytest.approx(2.0, abs=1e-9)
    np.testing.assert_allclose(np.abs(res.eigenvector), [0, 1, 0], atol=1e-6)


def test_hotelling_update_matrix_ex1(ex1):
    res = second_eigvec_hotelling(
        lambda x: u_matvec(ex1, x), lambda x: ut_matvec(ex1, x), 3, TIGHT,
        known_right_dominant=np.ones(3) / np.sqrt(3), dominant_eigenvalue=1.0,
    )
    assert res.eigenvalue == pytest.approx(0.75, abs=1e-10)
    np.testing.assert_allclose(res.eigenvector, [INV_SQRT2, 0, -INV_SQRT2], atol=1e-9)


def test_hotelling_rank_one_deflates_to_zero():
    rng = np.random.default_rng(3)
    u, v = rng.uniform(0.5, 1.0, 4), rng.uniform(0.5, 1.0, 4)
    A = 2.5 * np.outer(v, u) / (u @ v)
    with pytest.raises(ZeroIterate):
        second_eigvec_hotelling(lambda x: A @ x, lambda x: A.T @ x, 4, TIGHT)


def test_hotelling_orthogonal_dominants():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises((DegenerateDeflation, ZeroIterate)):
        second_eigvec_hotelling(lambda x: A @ x, lambda x: A.T @ x, 2, PowerConfig(max_iter=50),
                                known_right_dominant=np.array([1.0, 0.0]), dominant_eigenvalue=1.0)


def test_dense_oracle_examples(ex1):
    vals, _ = dense_eig_oracle(np.diag([2.0, 5.0]))
    np.testing.assert_array_equal(vals, [5, 2])
    vals, _ = dense_eig_oracle(dense.update_matrix(ex1))
    np.testing.assert_allclose(vals, [1, 0.75, 0.25], atol=1e-12)
    vals, vecs = dense_eig_oracle(dense.laplacian(ex1))
    np.testing.assert_allclose(vals, [3, 1, 0], atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(vecs, axis=0), 1.0)
    with pytest.raises(NonSquare):
        dense_eig_oracle(np.ones((2, 3)))
    with pytest.raises(TooLarge):
        dense_eig_oracle(np.eye(65))


def test_random_start_is_seeded():
    np.testing.assert_array_equal(random_start(5, 11), random_start(5, 11))
    assert not np.array_equal(random_start(5, 11), random_start(5, 12))


@st.composite
def gapped_psd(draw):
    d = draw(st.integers(2, 32))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    top = rng.uniform(1.0, 10.0)
    # second eigenvalue at most 0.8 of the first, the rest below the second
    second = top * rng.uniform(0.3, 0.8)
    rest = second * rng.uniform(0.0, 0.8, size=d - 2)
    lam = np.concatenate([[top, second], rest])
    return (Q * lam) @ Q.T, lam, seed


@settings(max_examples=40, deadline=None)
@given(gapped_psd())
def test_power_matches_dense_top(case):
    A, lam, seed = case
    res = power_iteration(lambda v: A @ v, A.shape[0], PowerConfig(seed=seed % 1000))
    vals, _ = dense_eig_oracle(A)
    assert abs(res.eigenvalue - vals[0]) <= 1e-6 * max(1.0, vals[0])
    assert np.linalg.norm(res.eigenvector) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(gapped_psd())
def test_deflated_vector_orthogonal(case):
    A, lam, _ = case
    if A.shape[0] < 3:
        return
    vals, vecs = dense_eig_oracle(A)
    res = second_eigvec_hotelling(lambda x: A @ x, lambda x: A.T @ x, A.shape[0], TIGHT)
    assert abs(res.eigenvector @ vecs[:, 0]) <= 1e-6
    assert res.eigenvalue == pytest.approx(vals[1], rel=1e-8)


def test_determinism(ex1):
    a = power_iteration(lambda d: udiff_matvec(ex1, d), 2, PowerConfig(seed=5))
    b = power_iteration(lambda d: udiff_matvec(ex1, d), 2, PowerConfig(seed=5))
    assert a.iterations == b.iterations
    assert np.array_equal(a.eigenvector, b.eigenvector)
