import numpy as np
import pytest

from degencft import fock, voa
from degencft.voa import PSI, PSI_STAR, VoaState

PSI_STAR_STATE = {(0,): 1.0}   # a(1)^* Omega
PSI_STATE = {(-1,): 1.0}       # a(z^-1) Omega


def dense(vec, space):
    return space.vector(vec)


def test_generator_modes_are_fermion_modes():
    space = fock.enumerate_basis(3)
    for n in range(-3, 3):
        # Y(a(1)^* Omega, x) = sum a(z^(-n-1))^* x^(-n-1)
        m = voa.mode(PSI_STAR_STATE, n, space).op.toarray()
        assert np.allclose(m, space.mode_matrix(-n - 1, True).toarray())
        # Y(a(z^-1) Omega, x) = sum a(z^n) x^(-n-1)
        m = voa.mode(PSI_STATE, n, space).op.toarray()
        assert np.allclose(m, space.mode_matrix(n).toarray())


def test_vacuum_and_creation_axioms():
    space = fock.enumerate_basis(3)
    vac = {(): 1.0}
    for s in space.states[:12]:
        a = {s: 1.0}
        assert voa.mode_apply(a, -1, vac) == pytest.approx(a)
        for n in range(0, 3):
            assert not voa.vec_clean(voa.mode_apply(a, n, vac), 1e-14)
        for n in range(-3, 3):
            got = voa.vec_clean(voa.mode_apply(vac, n, a), 1e-14)
            assert got == (a if n == -1 else {})


def test_translation_covariance():
    # (L_-1 a)_(n) = -n a_(n-1)
    space = fock.enumerate_basis(3)
    rng = np.random.default_rng(4)
    a = voa.random_homogeneous(rng, space, 2, 0).vector
    La = voa.virasoro_apply(-1, a)
    for n in range(-2, 3):
        lhs = voa.mode(La, n, space).op.toarray()
        rhs = -n * voa.mode(a, n - 1, space).op.toarray()
        idx = space.window(space.cutoff2 - 4)
        assert np.abs((lhs - rhs)[np.ix_(idx, idx)]).max() < 1e-12


def test_l0_is_energy():
    space = fock.enumerate_basis(4)
    L0 = voa.virasoro_mode(0, space).op.toarray()
    assert np.allclose(L0, np.diag(space.energies2 / 2))


def test_borcherds_identities_and_a_broken_variant():
    a, b, c = PSI_STAR_STATE, PSI_STATE, {(-1, 0): 1.0}
    for m in range(-2, 3):
        for k in range(-2, 3):
            assert voa.commutator_formula_residual(a, b, c, m, k) < 1e-12
            assert voa.product_formula_residual(a, b, c, m, k) < 1e-12
    # dropping the super sign breaks the commutator formula
    lhs = dict(voa.mode_apply(a, 0, voa.mode_apply(b, -1, c)))
    voa.vec_add(lhs, voa.mode_apply(b, -1, voa.mode_apply(a, 0, c)), -1.0)
    rhs = {}
    for j in range(0, 3):
        ab = voa.mode_apply(a, j, b)
        if ab:
            voa.vec_add(rhs, voa.mode_apply(ab, -1 - j, c), voa.binom(0, j))
    d = dict(lhs)
    voa.vec_add(d, rhs, -1.0)
    assert max(abs(x) for x in d.values()) > 0.5


def test_borcherds_suite_random():
    res = voa.borcherds_suite(fock.enumerate_basis(3), trials=10, seed=3)
    assert max(res.values()) < 1e-9


def test_binom_negative_upper():
    assert voa.binom(-1, 3) == -1
    assert voa.binom(-2, 2) == 3
    assert voa.binom(4, 2) == 6
    assert voa.binom(3, -1) == 0


def test_vertex_operator_domain():
    with pytest.raises(voa.DomainError):
        voa.vertex_apply(PSI_STAR_STATE, 1.2, {(): 1.0}, 2)


def test_vertex_operator_on_vacuum_is_translation():
    # Y(a, w) Omega = e^{w L_-1} a, componentwise
    a = {(0,): 1.0}
    w = 0.3
    got = voa.vertex_apply(a, w, {(): 1.0}, 4).vector
    # a(1)^* translates to sum_k w^k a(z^k)^* Omega
    for k in range(4):
        assert got.get((k,), 0) == pytest.approx(w ** k)


def test_pct_is_antiunitary_involution():
    space = fock.enumerate_basis(3)
    rng = np.random.default_rng(5)
    v = voa.random_homogeneous(rng, space, 3, 1).vector
    u = voa.random_homogeneous(rng, space, 3, 1).vector
    tv, tu = voa.pct(v).vector, voa.pct(u).vector
    assert voa.inner(tv, tu) == pytest.approx(np.conj(voa.inner(v, u)))
    back = voa.pct(tv).vector
    diff = dict(back)
    voa.vec_add(diff, v, -1.0)
    assert max(abs(x) for x in diff.values()) < 1e-12


def test_invariant_form_plus_convention():
    a = {(0,): 1.0}
    b = {(-1,): 1.0}
    c = {(): 1.0}
    assert voa.invariance_check(a, b, c, 0.4, +1) < 1e-12


def test_tensor_mode_of_vacuum_factor():
    # (a (x) Omega)_(n) = a_(n) (x) 1
    space = fock.enumerate_basis(2)
    tsp = fock.tensor_space(space)
    a = {(0,): 1.0}
    T = voa.tensor_mode(a, {(): 1.0}, -1, tsp).op.toarray()
    A = fock.tensor_car(None, None, tsp).toarray() * 0
    for j, (u, v) in enumerate(tsp.pairs):
        for t, x in voa.mode_apply(a, -1, {u: 1.0}).items():
            i = tsp.index.get((t, v))
            if i is not None:
                A[i, j] += x
    assert np.allclose(T, A)
