import numpy as np
import pytest

from corrspectra.linalg import (
    Spectrum,
    SpectrumKind,
    check_additive_perturbation,
    check_mult_perturbation,
    check_weyl,
    singular_values,
    spectral_norm,
    sym_eigvals,
)


def charpoly_faddeev_leverrier(M):
    """Characteristic polynomial coefficients (leading 1) from matrix products only."""
    n = M.shape[0]
    coeffs = [1.0]
    Mk = np.zeros_like(M)
    c = 1.0
    for k in range(1, n + 1):
        Mk = M @ Mk + c * np.eye(n)
        c = -np.trace(M @ Mk) / k
        coeffs.append(c)
    return np.array(coeffs)


def power_iteration_norm(A, iters=5000):
    G = A.T @ A
    v = np.ones(G.shape[0]) / np.sqrt(G.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = G @ v
        lam_new = np.linalg.norm(w)
        v = w / lam_new
        if abs(lam_new - lam) <= 1e-15 * lam_new:
            break
        lam = lam_new
    return np.sqrt(v @ G @ v)


def test_identity_and_diagonal():
    assert np.array_equal(sym_eigvals(np.eye(3)).values, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(sym_eigvals(np.diag([2.0, 1.0, 0.0])).values, [2, 1, 0], atol=1e-15)


def test_eigvals_match_charpoly_roots():
    rng = np.random.default_rng(5)
    A = rng.integers(-5, 6, size=(5, 5)).astype(float)
    M = A + A.T
    roots = np.sort(np.roots(charpoly_faddeev_leverrier(M)).real)[::-1]
    np.testing.assert_allclose(sym_eigvals(M).values, roots, rtol=0, atol=1e-8)


def test_eigenvectors_reconstruct():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((7, 7))
    M = A + A.T
    spec, Q = sym_eigvals(M, vectors=True)
    R = M - Q @ np.diag(spec.values) @ Q.T
    assert np.linalg.norm(R) <= 1e-8 * (1 + np.linalg.norm(M))
    assert np.all(np.diff(spec.values) <= 0)


def test_trace_equals_eigen_sum():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = rng.integers(1, 12)
        A = rng.standard_normal((n, n))
        M = A + A.T
        total = np.sum(sym_eigvals(M).values)
        assert abs(total - np.trace(M)) <= 1e-8 * max(1.0, np.abs(np.diag(M)).sum())


def test_symmetrizes_rounding_asymmetry():
    M = np.array([[2.0, 1.0 + 1e-13], [1.0, 2.0]])
    np.testing.assert_allclose(sym_eigvals(M).values, [3.0, 1.0], atol=1e-12)


@pytest.mark.parametrize(
    "bad, msg",
    [
        (np.ones((2, 3)), "square"),
        (np.array([[1.0, 2.0], [0.0, 1.0]]), "symmetric"),
        (np.array([[np.nan, 0.0], [0.0, 1.0]]), "non-finite"),
        (np.zeros((0, 0)), "empty"),
        (np.array([[1.0, 1j], [-1j, 1.0]]), "complex"),
    ],
)
def test_sym_eigvals_rejects(bad, msg):
    with pytest.raises(ValueError, match=msg):
        sym_eigvals(bad)


def test_singular_values_examples():
    np.testing.assert_allclose(singular_values(np.diag([3.0, -4.0])).values, [4.0, 3.0])
    assert np.all(singular_values(np.zeros((3, 2))).values == 0)
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 6))
    oracle = np.sqrt(np.clip(sym_eigvals(A @ A.T).values, 0, None))
    np.testing.assert_allclose(singular_values(A).values, oracle, rtol=1e-8)
    s = singular_values(A)
    assert s.kind == SpectrumKind.SINGULAR_VALUES and s.source_dims == (4, 6)
    with pytest.raises(ValueError):
        singular_values(np.array([[np.inf]]))


def test_spectral_norm():
    assert spectral_norm(np.eye(6)) == pytest.approx(1.0)
    u = np.array([1.0, 2.0, 2.0])
    v = np.array([3.0, 4.0])
    assert spectral_norm(np.outer(u, v)) == pytest.approx(3.0 * 5.0, rel=1e-12)
    A = np.random.default_rng(4).standard_normal((3, 3))
    assert spectral_norm(A) == pytest.approx(power_iteration_norm(A), rel=1e-8)


def test_spectrum_invariants():
    with pytest.raises(ValueError, match="descending"):
        Spectrum(np.array([1.0, 2.0]), SpectrumKind.EIGENVALUES_SYMMETRIC, (2, 2))
    with pytest.raises(ValueError, match="nonnegative"):
        Spectrum(np.array([1.0, -1.0]), SpectrumKind.SINGULAR_VALUES, (2, 2))
    s = Spectrum(np.array([3.0, 1.0]), SpectrumKind.SINGULAR_VALUES, (2, 2))
    np.testing.assert_array_equal(s.padded(4), [3.0, 1.0, 0.0, 0.0])


def test_mult_perturbation_examples():
    rng = np.random.default_rng(6)
    B = rng.standard_normal((3, 4))
    rep = check_mult_perturbation(np.eye(3), B)
    assert rep.ok
    rep = check_mult_perturbation(2 * np.eye(2), np.diag([1.0, 3.0]))
    assert rep.ok
    np.testing.assert_allclose(singular_values(2 * np.eye(2) @ np.diag([1.0, 3.0])).values, [6.0, 2.0])
    with pytest.raises(ValueError, match="inner"):
        check_mult_perturbation(np.eye(2), np.eye(3))


def _random_pair(rng, same_shape=False):
    m, n, p = rng.integers(1, 9, size=3)
    scale = 10.0 ** rng.uniform(-3, 3)
    A = scale * rng.standard_normal((m, n))
    B = rng.standard_normal((m, n) if same_shape else (n, p))
    if rng.random() < 0.2:
        # rank-deficient factor
        A[:, 0] = 0.0
    return A, B


def test_mult_perturbation_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        A, B = _random_pair(rng)
        assert check_mult_perturbation(A, B).ok


def test_mult_perturbation_row_index_form_fails_for_wide_A():
    A = np.array([[1.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    rows = check_mult_perturbation(A, B, lower_factor="rows")
    assert not rows.ok
    assert rows.violations[0][:3] == (1, 1.0, 0.0)
    assert check_mult_perturbation(A, B).ok
    # the two forms coincide for square A
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = rng.integers(1, 7)
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, rng.integers(1, 7)))
        assert check_mult_perturbation(A, B, lower_factor="rows").ok


def test_additive_perturbation():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((4, 3))
    rep = check_additive_perturbation(A, np.zeros_like(A))
    assert rep.ok and rep.checked == 3
    B = rng.standard_normal((4, 3))
    assert check_additive_perturbation(np.zeros_like(B), B).ok
    for _ in range(200):
        A, B = _random_pair(rng, same_shape=True)
        assert check_additive_perturbation(A, B).ok
    with pytest.raises(ValueError, match="shape"):
        check_additive_perturbation(np.eye(2), np.eye(3))


def test_weyl_exhaustive_small():
    rng = np.random.default_rng(10)
    for _ in range(100):
        n = rng.integers(1, 9)
        N = rng.standard_normal((n, n))
        H = rng.standard_normal((n, n))
        rep = check_weyl(N + N.T, H + H.T)
        assert rep.ok
        assert rep.checked == n * (n + 1) // 2

