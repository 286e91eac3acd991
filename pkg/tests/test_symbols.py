"""Unit tests for the operator-valued symbol calculus."""

import numpy as np
import pytest

from shiftindex.symbols import (
    FirstOrderCoefficient,
    ShiftOperatorSpec,
    SymbolDomainError,
    TorusIsometry,
    WindowError,
    a_symbol,
    a_symbol_fiber,
    cylinder_product_symbol,
    evaluate_symbol,
    external_product,
    homogenize,
    orbit_symbol,
    weight_vector,
    window_indices,
)
from shiftindex.assembly import assemble_on_torus


def circle_spec(b=0.0, theta=0.3):
    terms = {0: FirstOrderCoefficient.constant([1.0])}
    if b:
        terms[1] = FirstOrderCoefficient.constant([b])
    return ShiftOperatorSpec.from_terms(TorusIsometry(1, (theta,)), terms)


def test_isometry_translates_mod_one():
    iso = TorusIsometry(2, (0.25, 0.7))
    x = np.array([0.9, 0.5])
    assert np.allclose(iso.translate(x), [0.15, 0.2])
    assert np.allclose(iso.translate(x, -1), [0.65, 0.8])


def test_codifferential_leaves_covectors_alone():
    iso = TorusIsometry(1, (0.3,))
    x2, xi2 = iso.codifferential([0.1], [2.5], n=4)
    assert np.allclose(xi2, [2.5])
    assert np.allclose(x2, [(0.1 + 4 * 0.3) % 1.0])


def test_constant_symbol_is_diagonal_i_xi():
    spec = circle_spec()
    M = evaluate_symbol(spec, [0.2], [1.0], N=4)
    assert np.allclose(M, 1j * np.eye(9))


def test_window_entries_follow_orbit_points():
    # entry [n, n+k] must be the k-th term's symbol at x + n theta
    coeff = FirstOrderCoefficient.from_dict(1, {(1, (1,)): 2.0})
    spec = ShiftOperatorSpec.from_terms(
        TorusIsometry(1, (0.3,)), {1: coeff, 0: FirstOrderCoefficient.constant([1.0])})
    N = 3
    x, xi = 0.11, 0.7
    M = evaluate_symbol(spec, [x], [xi], N=N)
    ns = window_indices(N)
    for row, n in enumerate(ns):
        want = 2.0 * np.exp(2j * np.pi * (x + n * 0.3)) * (1j * xi)
        if 0 <= row + 1 < 2 * N + 1:
            assert np.isclose(M[row, row + 1], want)


def test_zero_covector_rejected():
    with pytest.raises(SymbolDomainError):
        evaluate_symbol(circle_spec(), [0.0], [0.0], N=4)


def test_window_smaller_than_shift_rejected():
    spec = ShiftOperatorSpec.from_terms(
        TorusIsometry(1, (0.3,)), {3: FirstOrderCoefficient.constant([1.0])})
    with pytest.raises(WindowError):
        evaluate_symbol(spec, [0.0], [1.0], N=2)


def test_formal_adjoint_matches_matrix_adjoint_constant_coeffs():
    # for constant coefficients the adjoint has no zero-order part, so the
    # Fourier matrix of the adjoint spec is exactly the conjugate transpose
    spec = circle_spec(b=0.4 + 0.2j)
    K = 6
    M = assemble_on_torus(spec, K).matrix
    Madj = assemble_on_torus(spec.formal_adjoint(), K).matrix
    assert np.max(np.abs(Madj - M.conj().T)) < 1e-12


def test_formal_adjoint_matches_symbol_adjoint():
    # with x-dependent coefficients the adjoint acquires a zero-order part
    # that the principal symbol drops; at the symbol level the window of the
    # adjoint spec equals the conjugate transpose window (interior rows)
    coeffs = FirstOrderCoefficient.from_dict(
        1, {(1, (0,)): 1.0, (1, (1,)): 0.2 + 0.1j, (1, (-1,)): 0.15})
    spec = ShiftOperatorSpec.from_terms(
        TorusIsometry(1, (0.3,)),
        {0: coeffs, 1: FirstOrderCoefficient.constant([0.4])})
    S = evaluate_symbol(spec, [0.17], [0.9], N=6)
    Sa = evaluate_symbol(spec.formal_adjoint(), [0.17], [0.9], N=6)
    cut = slice(1, -1)
    assert np.max(np.abs(Sa[cut, cut] - S.conj().T[cut, cut])) < 1e-12


def test_adjoint_is_involutive():
    spec = circle_spec(b=0.5)
    back = spec.formal_adjoint().formal_adjoint()
    M1 = evaluate_symbol(spec, [0.2], [1.3], N=5)
    M2 = evaluate_symbol(back, [0.2], [1.3], N=5)
    assert np.allclose(M1, M2)


def test_line_symbol_values():
    assert a_symbol(0.5, 2.0) == 0.5 + 2j
    assert np.allclose(a_symbol_fiber(0.5, 2.0, [-1, 0, 1]), [-0.5 + 2j, 0.5 + 2j, 1.5 + 2j])


def test_external_product_block_layout():
    s1 = np.array([[1.0 + 1j]])
    s2 = np.array([[2.0 - 1j]])
    B = external_product(s1, s2)
    assert np.allclose(B, [[1 + 1j, 2 - 1j], [-2 - 1j, 1 - 1j]])


def test_external_product_lower_bound():
    # B*B = diag(|s1|^2 + |s2|^2, ...) for commuting scalar blocks, so the
    # smallest singular value is sqrt(|s1|^2 + |s2|^2)
    rng = np.random.default_rng(0)
    s1 = complex(*rng.standard_normal(2)) * np.eye(3)
    s2 = complex(*rng.standard_normal(2)) * np.eye(3)
    B = external_product(s1, s2)
    sv = np.linalg.svd(B, compute_uv=False)
    assert np.isclose(sv[-1], np.sqrt(abs(s1[0, 0]) ** 2 + abs(s2[0, 0]) ** 2))


def test_orbit_symbol_blocks():
    spec = circle_spec(b=0.3)
    N = 4
    S = orbit_symbol(spec, [0.1], [1.0], 0.25, 0.5, N)
    W = 2 * N + 1
    assert S.shape == (2 * W, 2 * W)
    assert np.allclose(np.diag(S[:W, W:]), a_symbol_fiber(0.25, 0.5, window_indices(N)))
    assert np.allclose(S[W:, :W], -np.diag(a_symbol_fiber(0.25, 0.5, window_indices(N))).conj())
    assert np.allclose(S[W:, W:], S[:W, :W].conj().T)


def test_cylinder_product_uses_scalar_line_symbol():
    spec = circle_spec()
    N = 3
    S = cylinder_product_symbol(spec, [0.0], [1.0], 0.5, 0.25, N)
    W = 2 * N + 1
    assert np.allclose(S[:W, W:], (0.5 + 0.25j) * np.eye(W))


def test_homogenized_symbol_constant_along_rays():
    spec = circle_spec(b=0.3)
    sym = homogenize(spec, R=2.0, N=4)
    a = sym([0.1], [1.0], 0.0, 1.0)
    b = sym([0.1], [5.0], 0.0, 5.0)
    assert np.allclose(a, b)


def test_weight_vector_formula():
    w = weight_vector(4.0, 2)
    assert np.allclose(w, np.sqrt(1.0 + 4.0 + np.array([4, 1, 0, 1, 4])))
    with pytest.raises(ValueError):
        weight_vector(-1.0, 2)
