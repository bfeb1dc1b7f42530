import numpy as np
import pytest

from robustroa import matrixkit as mk


def random_spd(rng, n, scale=1.0):
    m = rng.standard_normal((n, n))
    return scale * (m @ m.T + n * np.eye(n))


# -- cholesky ------------------------------------------------------------------

def test_cholesky_identity():
    lo = mk.cholesky(np.eye(3))
    assert np.allclose(lo, np.eye(3))


def test_cholesky_diagonal():
    lo = mk.cholesky(np.diag([4.0, 9.0]))
    assert np.allclose(lo, np.diag([2.0, 3.0]))


def test_cholesky_rejects_indefinite():
    with pytest.raises(mk.NotPositiveDefinite):
        mk.cholesky(np.array([[0.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(mk.NotPositiveDefinite):
        mk.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite, pivots expose it


def test_cholesky_roundtrip_random():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 9))
        m = random_spd(rng, n, scale=float(rng.uniform(1e-3, 1e3)))
        lo = mk.cholesky(m)
        assert np.allclose(np.triu(lo, 1), 0.0)
        assert mk.inf_norm(lo @ lo.T - m) < 1e-10 * mk.inf_norm(m)


def test_cholesky_requires_symmetry():
    with pytest.raises(ValueError):
        mk.cholesky(np.array([[1.0, 2.0], [0.0, 1.0]]))


# -- eigensolver ---------------------------------------------------------------

def test_sym_eig_diagonal_sorted():
    r = mk.sym_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(r.values, [1.0, 2.0, 3.0])


def test_sym_eig_identity():
    r = mk.sym_eig(np.eye(4))
    assert np.allclose(r.values, 1.0)
    assert np.allclose(r.vectors @ r.vectors.T, np.eye(4))


def test_sym_eig_2x2_closed_form():
    rng = np.random.default_rng(11)
    for _ in range(25):
        a, b, c = rng.standard_normal(3) * 10.0
        m = np.array([[a, b], [b, c]])
        mean = 0.5 * (a + c)
        rad = np.hypot(0.5 * (a - c), b)
        r = mk.sym_eig(m)
        assert np.allclose(r.values, [mean - rad, mean + rad], atol=1e-12 * max(1.0, abs(mean) + rad))


def test_sym_eig_invariants_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        m = rng.standard_normal((n, n))
        m = 0.5 * (m + m.T)
        r = mk.sym_eig(m)
        scale = max(mk.inf_norm(m), 1.0)
        # eigensum = trace, eigenproduct = determinant (LU route)
        assert abs(np.sum(r.values) - np.trace(m)) < 1e-9 * n * scale
        assert abs(np.prod(r.values) - mk.det(m)) < 1e-7 * max(1.0, abs(mk.det(m)))
        # orthonormal vectors, exact reconstruction
        assert mk.inf_norm(r.vectors.T @ r.vectors - np.eye(n)) < 1e-9
        recon = r.vectors @ np.diag(r.values) @ r.vectors.T
        assert mk.inf_norm(recon - m) < 1e-9 * scale


def test_sym_eig_matches_numpy():
    rng = np.random.default_rng(5)
    m = rng.standard_normal((6, 6))
    m = m + m.T
    r = mk.sym_eig(m)
    assert np.allclose(r.values, np.linalg.eigvalsh(m), atol=1e-10)


# -- definiteness --------------------------------------------------------------

def test_is_neg_def_basic():
    assert mk.is_neg_def(-np.eye(3))
    assert mk.is_neg_def(np.diag([-1.0, -1.0]), margin=0.1)
    assert not mk.is_neg_def(np.diag([-1.0, -1e-12]), margin=1e-10)
    assert not mk.is_neg_def(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        mk.is_neg_def(-np.eye(2), margin=-1.0)


def test_is_neg_def_implies_negative_quadratic_form():
    rng = np.random.default_rng(19)
    m = -random_spd(rng, 5)
    assert mk.is_neg_def(m, margin=1e-6)
    for _ in range(100):
        v = rng.standard_normal(5)
        v /= np.linalg.norm(v)
        assert v @ m @ v < 0.0


# -- linear solve --------------------------------------------------------------

def test_solve_identity_and_diag():
    assert np.allclose(mk.solve(np.eye(3), np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])
    assert np.allclose(mk.solve(np.diag([2.0, 4.0]), np.array([2.0, 8.0])), [1.0, 2.0])


def test_solve_random_residual():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n = int(rng.integers(2, 9))
        a = rng.standard_normal((n, n)) + n * np.eye(n)
        b = rng.standard_normal(n)
        x = mk.solve(a, b)
        assert np.max(np.abs(a @ x - b)) < 1e-10 * (mk.inf_norm(a) * np.max(np.abs(x)) + 1.0)


def test_solve_matrix_rhs():
    rng = np.random.default_rng(29)
    a = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    b = rng.standard_normal((4, 3))
    x = mk.solve(a, b)
    assert np.allclose(a @ x, b, atol=1e-10)


def test_solve_singular_raises():
    with pytest.raises(mk.Singular):
        mk.solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))


def test_solve_posdef_matches_lu():
    rng = np.random.default_rng(31)
    m = random_spd(rng, 6)
    b = rng.standard_normal(6)
    assert np.allclose(mk.solve_posdef(m, b), mk.solve(m, b), atol=1e-9)


def test_det_matches_numpy():
    rng = np.random.default_rng(37)
    for _ in range(10):
        a = rng.standard_normal((5, 5))
        assert abs(mk.det(a) - np.linalg.det(a)) < 1e-9 * max(1.0, abs(np.linalg.det(a)))


def test_sqrt_posdef():
    rng = np.random.default_rng(41)
    m = random_spd(rng, 5)
    root = mk.sqrt_posdef(m)
    assert mk.inf_norm(root @ root - m) < 1e-9 * mk.inf_norm(m)
    assert mk.sym_gap(root) < 1e-10 * mk.inf_norm(root)
