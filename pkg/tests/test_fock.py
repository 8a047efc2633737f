import numpy as np
import pytest

from degencft import fock
from degencft.boundary import BoundaryFunction


def test_energy_and_parity():
    assert fock.energy2(()) == 0
    assert fock.energy2((0,)) == 1           # a(1)^* Omega has weight 1/2
    assert fock.energy2((-1,)) == 1          # a(z^-1) Omega
    assert fock.energy2((-2, 0, 1)) == 3 + 1 + 3
    assert fock.parity((-1, 0)) == 0


def test_basis_counts_and_order():
    space = fock.enumerate_basis(3)
    assert space.states[0] == ()
    assert list(space.energies2) == sorted(space.energies2)
    assert sum(space.level_dims()) == space.dim
    assert len(set(space.states)) == space.dim


def test_capacity_error():
    with pytest.raises(fock.CapacityError):
        fock.enumerate_basis(10, max_dim=100)
    with pytest.raises(ValueError):
        fock.enumerate_basis(1.3)


def test_number_operators_count_occupation():
    # sign conventions drop out of c^* c, so this is an oracle independent of word order
    space = fock.enumerate_basis(3)
    for m in range(-3, 3):
        if m >= 0:
            num = (space.mode_matrix(m, True) @ space.mode_matrix(m)).toarray()
        else:
            num = (space.mode_matrix(m) @ space.mode_matrix(m, True)).toarray()
        idx = space.window(space.cutoff2 - abs(2 * m + 1))
        occ = np.array([m in s for s in space.states], float)
        assert np.allclose(np.diag(num)[idx], occ[idx])
        off = num - np.diag(np.diag(num))
        assert np.abs(off).max() == 0


def test_car_suite_small():
    assert max(fock.anticommutator_residuals(fock.enumerate_basis(3), 6).values()) < 1e-12


def test_car_detects_a_broken_sign():
    space = fock.enumerate_basis(2)
    A = space.mode_matrix(0).toarray()
    B = space.mode_matrix(1, True).toarray()
    broken = A @ B - B @ A  # commutator instead of anticommutator
    assert np.abs(broken).max() > 0.5


def test_field_linearity():
    space = fock.enumerate_basis(3)
    f = BoundaryFunction.from_dict({-1: 1 + 2j, 0: 0.5, 2: -1j}, 3)
    g = BoundaryFunction.from_dict({1: 2.0, -2: 1j}, 3)
    a = lambda h: fock.car_annihilator(h, space).toarray()
    s = lambda h: fock.car_creator(h, space).toarray()
    lam = 0.3 - 0.7j
    assert np.allclose(a(f + lam * g), a(f) + lam * a(g))
    assert np.allclose(s(f + lam * g), s(f) + np.conj(lam) * s(g))
    assert np.allclose(s(f), a(f).conj().T)


def test_car_vacuum():
    space = fock.enumerate_basis(2)
    v = space.basis_vector(())
    for m in range(0, 3):
        assert np.allclose(space.mode_matrix(m) @ v, 0)        # no particles to remove
    for m in range(-3, 0):
        assert np.allclose(space.mode_matrix(m, True) @ v, 0)  # no holes to fill


def test_l0_and_grading():
    space = fock.enumerate_basis(3)
    L0 = fock.l0_diagonal(space).toarray()
    G = fock.grading(space).toarray()
    assert np.allclose(np.diag(L0), space.energies2 / 2)
    assert np.allclose(np.diag(G), (-1.0) ** space.parities)


def test_exact_window():
    assert fock.exact_window(8, [3, -1]) == 6
    assert fock.exact_window(8, [-1, 3]) == 5


def test_tensor_factorize_is_a_signed_bijection():
    table = fock.tensor_factorize(2)
    pairs = [p for _, p in table.values()]
    assert len(set(pairs)) == len(pairs)
    assert all(s in (1, -1) for s, _ in table.values())
    tsp = fock.tensor_space(fock.enumerate_basis(2))
    assert set(pairs) == set(tsp.pairs)


def test_tensor_car_anticommute_across_slots():
    tsp = fock.tensor_space(fock.enumerate_basis(2))
    h = BoundaryFunction.monomial(0, 3)
    A = fock.tensor_car(h, None, tsp).toarray()
    B = fock.tensor_car(None, h, tsp, dagger=True).toarray()
    idx = tsp.window(2)
    assert np.abs((A @ B + B @ A)[np.ix_(idx, idx)]).max() < 1e-14


def test_operator_container_roundtrip(tmp_path):
    space = fock.enumerate_basis(2)
    op = fock.car_annihilator(BoundaryFunction.from_dict({0: 1j, -1: 2.0}), space)
    fock.save_operator(tmp_path / "a.op", op, space.cutoff2)
    back, c2 = fock.load_operator(tmp_path / "a.op", space, space)
    assert c2 == space.cutoff2
    assert back.parity == op.parity
    assert np.array_equal(back.toarray(), op.toarray())
