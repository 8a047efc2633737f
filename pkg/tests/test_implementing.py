import itertools

import numpy as np
import pytest
from math import comb

from degencft import fock, implementing
from degencft.boundary import BoundaryFunction
from degencft.fock import car_annihilator


def _rand(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


# block maps -------------------------------------------------------------------
def test_block_map_shape_and_blocks():
    with pytest.raises(ValueError):
        implementing.BlockMap(np.eye(4), 2)
    r = implementing.BlockMap(np.arange(25).reshape(5, 5), 2)
    assert r.block(True, True).shape == (3, 3)
    assert r.block(False, True).shape == (2, 3)
    # frequencies -2, -1 are the negative half
    assert r.block(False, False)[0, 0] == 0 and r.block(True, True)[0, 0] == 12
    np.testing.assert_array_equal(r.column(-2).data, r.matrix[:, 0])


def test_diagonal_expectation_drops_off_diagonal_blocks():
    rng = np.random.default_rng(0)
    r = implementing.BlockMap(_rand(rng, 7), 3)
    e = implementing.diagonal_expectation(r)
    assert not e.block(True, False).any() and not e.block(False, True).any()
    np.testing.assert_array_equal(e.block(True, True), r.block(True, True))


def test_admissible_decomposition():
    rng = np.random.default_rng(1)
    r = implementing.BlockMap(2 * _rand(rng, 7), 3)
    rep = implementing.admissible_decompose(r)
    E = implementing.diagonal_expectation(r).matrix
    np.testing.assert_allclose(rep.contraction_part + rep.trace_part, E, atol=1e-12)
    assert np.linalg.norm(rep.contraction_part, 2) <= 1 + 1e-12
    assert rep.offdiag_trace_norm == pytest.approx(
        np.linalg.svd(r.block(True, False), compute_uv=False).sum())
    # a contraction needs no trace-class correction
    small = implementing.admissible_decompose(0.1 * np.eye(3))
    assert small.trace_part_norm == 0.0


# exterior powers ----------------------------------------------------------------
def test_compound_matrix_cauchy_binet():
    rng = np.random.default_rng(2)
    A, B = _rand(rng, 5), _rand(rng, 5)
    for k in range(6):
        Ck = implementing.compound_matrix(A @ B, k)
        assert Ck.shape == (comb(5, k),) * 2
        np.testing.assert_allclose(Ck, implementing.compound_matrix(A, k) @ implementing.compound_matrix(B, k),
                                   rtol=1e-10, atol=1e-10)


def test_compound_of_diagonal():
    d = np.array([2.0, 0.5, 3.0, 1.5])
    C = implementing.compound_matrix(np.diag(d), 2)
    expect = [d[i] * d[j] for i, j in itertools.combinations(range(4), 2)]
    np.testing.assert_allclose(np.diag(C), expect)


def test_exterior_norms_are_partial_singular_products():
    rng = np.random.default_rng(3)
    s = _rand(rng, 5)
    norms, top = implementing.exterior_power_norm(s)
    sig = np.sort(np.linalg.svd(s, compute_uv=False))[::-1]
    np.testing.assert_allclose(norms, [np.prod(sig[:k]) for k in range(6)], rtol=1e-10)
    assert top == pytest.approx(implementing.singular_value_bound(s), rel=1e-10)
    with pytest.raises(ValueError):
        implementing.exterior_power_norm(s, 6)


# vacuum solver ------------------------------------------------------------------
def test_vacuum_of_standard_polarization_is_omega():
    space = fock.enumerate_basis(3)
    om = implementing.vacuum_solve(implementing.positive_projection(3), space, 3)
    assert abs(om.vector[()] - 1) < 1e-12
    assert sum(abs(v) ** 2 for v in om.vector.values()) == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [0.4, 1.0])
def test_two_mode_vacuum(alpha):
    """The rotated vacuum is cos(a) Omega + sin(a) (hole at -1, particle at 0)."""
    space = fock.enumerate_basis(2)
    qp = implementing.two_mode_rotation(alpha, 2)
    om = implementing.vacuum_solve(qp, space, 2)
    support = {k: v for k, v in om.vector.items() if abs(v) > 1e-12}
    assert set(support) == {(), (-1, 0)}
    assert abs(support[()]) == pytest.approx(np.cos(alpha), abs=1e-12)
    assert abs(support[(-1, 0)]) == pytest.approx(np.sin(alpha), abs=1e-12)
    # annihilated by a(f) for f in the range of q'
    out = fock.enumerate_basis(4)
    vec = om.to_array(out)
    w, v = np.linalg.eigh(qp)
    for k in np.flatnonzero(w > 0.5):
        f = BoundaryFunction(v[:, k], 2)
        assert np.linalg.norm(car_annihilator(f, out).matrix @ vec) < 1e-12


def test_vacuum_outside_cutoff_is_reported():
    band, a = 5, 0.3
    u = np.eye(2 * band + 1, dtype=complex)
    i, j = band + 2, band - 3
    u[np.ix_([i, j], [i, j])] = [[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]
    qp = u @ implementing.positive_projection(band) @ u.conj().T
    # the pair (hole -3, particle 2) has energy 5
    with pytest.raises(implementing.VacuumSolverError):
        implementing.vacuum_solve(qp, fock.enumerate_basis(1), band)
    assert implementing.vacuum_kernel(qp, fock.enumerate_basis(5), band).kernel_dim == 1


# implementers ---------------------------------------------------------------------
def test_identity_is_second_quantized_to_identity():
    space = fock.enumerate_basis(2)
    U, defect = implementing.second_quantize_unitary(np.eye(5), space, 2)
    assert defect == 0.0
    np.testing.assert_array_equal(U.toarray(), np.eye(space.dim))


def test_implementer_intertwines_modes():
    space = fock.enumerate_basis(3)
    big = 9
    u = implementing.rotation_unitary(0.7, big)
    U, defect = implementing.second_quantize_unitary(u, space, big)
    assert defect < 1e-12
    M = U.toarray()
    f = BoundaryFunction.from_dict({0: 1.0, 1: 0.5j}, big)
    uf = BoundaryFunction(u @ f.data, big)
    A = car_annihilator(f, space).matrix.toarray()
    B = car_annihilator(uf, space).matrix.toarray()
    np.testing.assert_allclose(M @ A @ M.conj().T, B, atol=1e-12)


def test_phase_aligned_residual():
    A = np.diag([1.0, 2.0])
    assert implementing.phase_aligned_residual(np.exp(0.3j) * A, A) < 1e-15
    assert implementing.phase_aligned_residual(A, -A) < 1e-15
