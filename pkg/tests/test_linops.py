import numpy as np
import pytest
from hypothesis import given, strategies as st

from itkrmm.linops import (least_squares, masked_norm, normalize_columns, polar_orthonormalize,
                           project, project_complement, sign, truncated_svd_lowrank)

seeds = st.integers(0, 2**32 - 1)


def test_project_axis():
    np.testing.assert_allclose(project(np.array([[1.0], [0], [0]]), np.array([3.0, 2, 1])), [3, 0, 0])


def test_project_empty_span_is_zero():
    np.testing.assert_array_equal(project(np.zeros((3, 0)), np.array([1.0, 2, 3])), np.zeros(3))


def test_project_matches_normal_equations(rng):
    A = rng.standard_normal((5, 2))
    A /= np.linalg.norm(A, axis=0)
    v = rng.standard_normal(5)
    # independent oracle: solve the normal equations directly
    x = np.linalg.solve(A.T @ A, A.T @ v)
    np.testing.assert_allclose(project(A, v), A @ x, atol=1e-12)


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        project(np.eye(3), np.ones(4))


def test_complement_examples(rng):
    np.testing.assert_allclose(project_complement(np.array([[1.0], [0], [0]]), np.array([3.0, 2, 1])),
                               [0, 2, 1])
    A = rng.standard_normal((6, 3))
    np.testing.assert_allclose(project_complement(A, A @ [1.0, -2, 0.5]), 0, atol=1e-12)
    v = rng.standard_normal(6)
    np.testing.assert_allclose(project(A, project_complement(A, v)), 0, atol=1e-10)


def test_least_squares_examples(rng):
    np.testing.assert_allclose(least_squares(np.array([[2.0], [0]]), np.array([4.0, 0])), [2.0])
    col = rng.standard_normal(4)
    x = least_squares(np.column_stack([col, col]), 3 * col)
    np.testing.assert_allclose(x, [1.5, 1.5])
    A, b = rng.standard_normal((6, 3)), rng.standard_normal(6)
    np.testing.assert_allclose(A @ least_squares(A, b), project(A, b), atol=1e-10)


def test_polar_examples(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    np.testing.assert_allclose(polar_orthonormalize(Q), Q, atol=1e-12)
    np.testing.assert_allclose(polar_orthonormalize(2 * np.eye(4)), np.eye(4), atol=1e-12)
    G = polar_orthonormalize(rng.standard_normal((8, 8)))
    np.testing.assert_allclose(G.T @ G, np.eye(8), atol=1e-10)


def test_polar_rank_deficient():
    B = np.ones((3, 3))
    with pytest.raises(np.linalg.LinAlgError):
        polar_orthonormalize(B)
    assert polar_orthonormalize(B, allow_rank_deficient=True).shape == (3, 3)


def test_masked_norm_examples():
    a = np.array([3.0, 4.0, 12.0])
    assert masked_norm(np.ones(3, bool), a) == pytest.approx(13.0)
    assert masked_norm(np.zeros(3, bool), a) == 0.0
    d = 64
    flat = np.full(d, 1 / np.sqrt(d))
    mask = np.zeros(d, bool)
    mask[:16] = True
    assert masked_norm(mask, flat) == pytest.approx(np.sqrt(16 / 64))


def test_truncated_svd_examples(rng):
    u = rng.standard_normal(6)
    u /= np.linalg.norm(u)
    G = truncated_svd_lowrank(np.outer(u, [1.0, -2, 3, 0.5]), 1)
    assert abs(abs(G[:, 0] @ u) - 1) < 1e-12
    Y = np.zeros((5, 3))
    Y[0, 0], Y[2, 1], Y[4, 2] = 1.0, 5.0, 3.0
    G = truncated_svd_lowrank(Y, 2)
    np.testing.assert_allclose(np.abs(G[[2, 4]]), np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        truncated_svd_lowrank(Y, 4)


def test_truncated_svd_beats_random_subspaces(rng):
    Y = rng.standard_normal((10, 3)) @ rng.standard_normal((3, 200)) + 0.01 * rng.standard_normal((10, 200))
    G = truncated_svd_lowrank(Y, 3)
    best = np.sum((G.T @ Y) ** 2)
    for _ in range(50):
        Q, _ = np.linalg.qr(rng.standard_normal((10, 3)))
        assert np.sum((Q.T @ Y) ** 2) <= best + 1e-9


def test_sign_and_normalize():
    np.testing.assert_array_equal(sign(np.array([-2.0, 0.0, 3.0])), [-1, 1, 1])
    A = normalize_columns(np.array([[3.0, 0], [4, 0]]))
    np.testing.assert_allclose(A, [[0.6, 0], [0.8, 0]])


@given(seeds, st.integers(1, 8), st.integers(0, 6))
def test_projection_properties(seed, d, m):
    r = np.random.default_rng(seed)
    A = r.standard_normal((d, min(m, d)))
    v = r.standard_normal(d)
    p = project(A, v)
    np.testing.assert_allclose(project(A, p), p, atol=1e-10)
    np.testing.assert_allclose(p + project_complement(A, v), v, atol=1e-12)
    assert np.linalg.norm(p) <= np.linalg.norm(v) + 1e-12


@given(seeds, st.integers(1, 10))
def test_polar_orthonormal_property(seed, d):
    r = np.random.default_rng(seed)
    m = int(r.integers(1, d + 1))
    G = polar_orthonormalize(r.standard_normal((d, m)))
    assert np.max(np.abs(G.T @ G - np.eye(m))) < 1e-10


@given(seeds, st.integers(1, 20))
def test_masked_norm_split(seed, d):
    r = np.random.default_rng(seed)
    a, mask = r.standard_normal(d), r.random(d) < 0.5
    total = masked_norm(mask, a) ** 2 + masked_norm(~mask, a) ** 2
    assert total == pytest.approx(a @ a, rel=1e-12)
