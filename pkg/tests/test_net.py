import numpy as np
import pytest

from degencft import fock, geometry, net, segal
from degencft.boundary import BoundaryFunction
from degencft.voa import VoaState


@pytest.fixture(scope="module")
def pants():
    X = segal.DegenerateSurface(geometry.cayley_germ(), 0.5, "pants", -0.7, 0.15)
    return X, segal.pants_operator(X, 4)


@pytest.fixture(scope="module")
def contact():
    G = geometry.contact_germ()
    X = segal.DegenerateSurface(G, 0.3, w=0.75 * np.exp(-1.2j), s=0.15)
    return X, net.contact_pair(G, 0.3)


def test_cyclic_span_fills_low_levels(pants):
    X, T = pants
    dims = [net.cyclic_span_dim(X, 4, M, T=T) for M in (0, 0.5, 1, 1.5, 2)]
    cumulative = np.cumsum(fock.enumerate_basis(4).level_dims()[:5]).tolist()
    assert dims == cumulative


@pytest.mark.parametrize("kind", ["whole", "even", "virasoro"])
def test_compression(pants, kind):
    X, T = pants
    L = net.localized_operator(X, VoaState({(-1, 0): 1.0}), 4, T=T)
    res = net.compression_check(kind, L, pants=T)
    assert res.left < 1e-14 and res.right < 1e-14


def test_virasoro_subspace_dimensions():
    # L_{-1} kills the vacuum, so the first new vector sits at level 2
    B = net.virasoro_subspace(fock.enumerate_basis(4))
    assert B.shape[1] == 1 + 1 + 1 + 2  # levels 0, 2, 3, 4
    np.testing.assert_allclose(B.conj().T @ B, np.eye(B.shape[1]), atol=1e-12)


def test_unknown_subalgebra():
    with pytest.raises(ValueError, match="unsupported"):
        net.subspace_projection("lattice", fock.enumerate_basis(2))


def test_rotation_covariance(pants):
    X, _ = pants
    assert net.rotation_covariance_residual(X, 0.7, {(-1, 0): 1.0}, 3) < 1e-13


def test_rotation_pair_conjugates_by_energy(pants):
    X, T = pants
    xi = VoaState({(-1, 0): 1.0})
    L0 = net.localized_operator(X, xi, 4, T=T).toarray()
    Lr = net.localized_operator(X, xi, 4, reparam=net.RotationPair(0.3, 0.5), T=T)
    E = T.rows.energies2 / 2
    expect = np.diag(np.exp(-0.3j * E)) @ L0 @ np.diag(np.exp(0.5j * E))
    np.testing.assert_allclose(Lr.toarray(), expect, atol=1e-15)
    assert Lr.parity == 0


def test_contact_pair_arcs(contact):
    X, pair = contact
    z = np.exp(1j * np.linspace(*pair.arc_in, 50))
    assert np.abs(np.abs(geometry.phi_t(X.germ, X.t, z)) - 1).max() < 1e-5
    assert pair.arc_out[0] < pair.arc_in[0] and pair.arc_out[1] < pair.arc_in[1]


def test_wrong_pair_is_rejected(contact):
    X, _ = contact
    bad = net.ContactPair((0.7, 1.5), (0.7, 1.5))
    with pytest.raises(net.LocalizationError):
        net.localized_operator(X, VoaState({(): 1.0}), 2, reparam=bad)


def test_rational_approximants_fit_the_bump(contact):
    X, pair = contact
    fits = [net.rational_approximant(X, pair, d) for d in (4, 8, 12)]
    errs = [r.parts["fit_error"] for r in fits]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert max(r.leakage for r in fits[1:]) < 0.1 * fits[0].leakage
    for r in fits:
        assert r.leakage == max(r.parts["leakage_parts"].values())


def test_bump_support():
    th = np.array([-0.1, 0.0, 0.5, 1.0, 1.2])
    b = net.bump(th, (0.0, 1.0))
    assert b[2] == 1.0
    assert not b[[0, 1, 3, 4]].any()


def test_locality_of_disjoint_identity_slot(contact):
    """With xi = Omega the operator is E itself; a(f) for f supported away from
    the contact arc still fails to commute, which is what the negative control sees."""
    X, pair = contact
    L = net.localized_operator(X, VoaState({(): 1.0}), 2, reparam=pair)
    res = net.locality_residual(L, net.bump_function((2.0, 3.5)), M=1, f0=BoundaryFunction.zero(64))
    assert res.residual > 1e-2
    assert res.ratio == np.inf
