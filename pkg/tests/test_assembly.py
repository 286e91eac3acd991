"""Tests for spectral assembly and SVD-based index extraction."""

import numpy as np
import pytest
from scipy.linalg import expm

from shiftindex.assembly import (
    DimensionCapError,
    EdgeFilter,
    FourierTruncation,
    TruncationError,
    assemble_A,
    assemble_cylinder_product,
    assemble_on_torus,
    hermite_shift_matrix,
    numerical_index,
    s_independence_check,
)
from shiftindex.symbols import FirstOrderCoefficient, ShiftOperatorSpec, TorusIsometry


def circle_spec(b=0.0, theta=0.3):
    terms = {0: FirstOrderCoefficient.constant([1.0])}
    if b:
        terms[1] = FirstOrderCoefficient.constant([b])
    return ShiftOperatorSpec.from_terms(TorusIsometry(1, (theta,)), terms)


def test_fourier_truncation_indexing_roundtrip():
    ft = FourierTruncation(2, 3)
    modes = ft.modes
    assert np.array_equal(ft.index(modes), np.arange(ft.size))
    assert ft.edge_score.max() == 1.0 and ft.edge_score.min() == 0.0


def test_ladder_matrix_and_singular_values():
    H = 8
    op = assemble_A(H)
    # entries sqrt(2n) one step above the diagonal
    want = np.diag(np.sqrt(2.0 * np.arange(1, H)), k=1)
    assert np.allclose(op.matrix, want)
    sv = np.sort(np.linalg.svd(op.matrix, compute_uv=False))
    assert np.allclose(sv, np.sort(np.concatenate([[0.0], np.sqrt(2.0 * np.arange(1, H))])))


def test_ladder_index_one_with_ground_state_kernel():
    for H in (8, 16, 32):
        rep = numerical_index(assemble_A(H))
        assert (rep.ker_dim, rep.coker_dim, rep.index) == (1, 0, 1)
        assert rep.gap >= 1e3
        v = rep.kernel_vectors[0]
        assert abs(v[0]) > 0.999  # the h_0 coefficient carries all the mass


def test_hermite_displacement_matches_exponential():
    # oracle: d/dt acts on the ladder pair as (A - A^T)/2, so the shift by
    # eps is the matrix exponential of eps (A - A^T)/2; the closed-form
    # Laguerre expression must agree away from the truncation edge
    H = 24
    eps = 0.7
    A = assemble_A(H).matrix
    ref = expm(eps * (A - A.conj().T) / 2.0)
    got = hermite_shift_matrix(eps, H)
    cut = slice(0, H // 2)
    assert np.max(np.abs(got[cut, cut] - ref[cut, cut])) < 1e-10


def test_hermite_displacement_is_unitary():
    U = hermite_shift_matrix(0.4, 40)
    cut = slice(0, 20)
    err = np.max(np.abs((U.conj().T @ U)[cut, cut] - np.eye(40)[cut, cut]))
    assert err < 1e-10


def test_torus_assembly_derivative_diagonal():
    op = assemble_on_torus(circle_spec(), K=4)
    want = np.diag(2j * np.pi * np.arange(-4, 5))
    assert np.allclose(op.matrix, want)


def test_torus_assembly_requires_room_for_bands():
    coeff = FirstOrderCoefficient.from_dict(1, {(1, (2,)): 1.0, (1, (0,)): 1.0})
    spec = ShiftOperatorSpec.from_terms(TorusIsometry(1, (0.3,)), {0: coeff})
    with pytest.raises(TruncationError):
        assemble_on_torus(spec, K=2)


def test_derivative_index_zero():
    rep = numerical_index([assemble_on_torus(circle_spec(), K) for K in (8, 12)])
    assert (rep.ker_dim, rep.coker_dim, rep.index) == (1, 1, 0)
    assert rep.status == "ok"


def test_block_operator_kernel_factorizes_at_eps_zero():
    spec = circle_spec(b=0.3)
    repD = numerical_index(assemble_on_torus(spec, 12))
    repB = numerical_index(assemble_cylinder_product(spec, 12, 16, 0.0))
    assert (repB.ker_dim, repB.coker_dim) == (repD.ker_dim, repD.coker_dim)


def test_block_operator_index_constant_in_eps():
    spec = circle_spec(b=0.3)
    idx = []
    for eps in (0.0, 0.5, 1.0):
        rep = numerical_index(assemble_cylinder_product(spec, 12, 16, eps))
        assert rep.status == "ok"
        idx.append((rep.ker_dim, rep.coker_dim, rep.index))
    assert len(set(idx)) == 1


def test_no_gap_is_inconclusive():
    from shiftindex.assembly import AssembledOperator, BasisDescriptor
    n = 12
    mat = np.diag(np.geomspace(1e-9, 1.0, n)).astype(complex)
    basis = BasisDescriptor("flat", n, np.zeros(n))
    rep = numerical_index(AssembledOperator(mat, basis, basis))
    assert rep.status == "inconclusive"


def test_dimension_cap_enforced():
    spec = ShiftOperatorSpec.from_terms(
        TorusIsometry(2, (0.25, 0.125)),
        {0: FirstOrderCoefficient.constant([1.0, 1.0j])})
    with pytest.raises(DimensionCapError):
        numerical_index(assemble_cylinder_product(spec, 16, 16, 1.0))


def test_edge_filter_flags_boundary_mass():
    f = EdgeFilter()
    score = np.linspace(0.0, 1.0, 10)
    artifact = np.zeros(10)
    artifact[-1] = 1.0
    interior = np.zeros(10)
    interior[0] = 1.0
    assert f.is_artifact(artifact, score)
    assert not f.is_artifact(interior, score)


def test_index_stability_required_across_levels():
    # a sequence whose last two levels disagree must come back inconclusive
    spec = circle_spec(b=0.3)
    good = assemble_on_torus(spec, 12)
    from shiftindex.assembly import AssembledOperator, BasisDescriptor
    n = good.matrix.shape[0]
    forged = AssembledOperator(np.eye(n, dtype=complex),
                               BasisDescriptor("flat", n, np.zeros(n)),
                               BasisDescriptor("flat", n, np.zeros(n)))
    rep = numerical_index([forged, good])
    assert rep.status == "inconclusive"


def test_sobolev_order_does_not_change_index():
    ok, reports = s_independence_check(circle_spec(b=0.3), K=12)
    assert ok
    triples = {(r.ker_dim, r.coker_dim, r.index) for r in reports.values()}
    assert triples == {(1, 1, 0)}
