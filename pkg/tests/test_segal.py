import numpy as np
import pytest

from degencft import geometry, segal, virasoro
from degencft.boundary import circle_points


@pytest.fixture(scope="module")
def surface():
    # a disk far enough from the image of the semigroup to pass the geometry check
    return segal.DegenerateSurface(geometry.cayley_germ(), 0.5, "pants", -0.7, 0.15)


@pytest.fixture(scope="module")
def T4(surface):
    return segal.pants_operator(surface, 4)


def test_geometry_check(surface):
    surface.check()
    with pytest.raises(segal.SurfaceGeometryError):
        segal.builtin_pants().check()
    with pytest.raises(segal.SurfaceGeometryError):
        segal.DegenerateSurface(geometry.cayley_germ(), 0.5, "pants", -0.9, 0.15).check()
    with pytest.raises(segal.SurfaceGeometryError):
        segal.DegenerateSurface(geometry.cayley_germ(), -1.0, "annulus").check()


def test_semigroup_image_membership():
    germ = geometry.cayley_germ()
    inside = segal.in_semigroup_image(germ, 0.5, [0.0, 0.9j, -0.95])
    # phi_t fixes 0 and 1, so 0 is inside and points near -1 are not
    assert inside[0] and not inside[2]


def test_vacuum_slot_reproduces_annulus(surface, T4):
    """With Omega in the disk slot the vertex operator is the identity."""
    space, tspace = T4.rows, T4.cols
    E = virasoro.exp_semigroup(surface.germ.rho, surface.t, space).op.matrix.toarray()
    A = T4.toarray()
    cols = [(j, b) for j, (a, b) in enumerate(tspace.pairs) if a == ()]
    assert cols
    for j, b in cols:
        np.testing.assert_array_equal(A[:, j], E[:, space.index[b]])


def test_annulus_operator_scaling(surface):
    A1 = segal.annulus_operator(surface, 4).toarray()
    A2 = segal.annulus_operator(surface, 4, 2.0)
    e2 = A2.rows.energies2
    np.testing.assert_allclose(A2.toarray(), (2.0 ** (-e2 / 2))[:, None] * A1, atol=1e-15)
    with pytest.raises(ValueError):
        segal.annulus_operator(surface, 4, 0.5)


def test_laurent_outer_pole_oracle():
    w = 0.3 + 0.2j
    f = segal.laurent_outer_pole(w, 2, 40)
    z = circle_points(64)
    np.testing.assert_allclose(f(z), (z - w) ** -2, atol=1e-12)


def test_hardy_tuple_labels_and_windows(surface):
    hs = segal.hardy_tuples(surface, 3)
    assert [h.source for h in hs][:7] == [f"z^{n}" for n in range(-3, 4)]
    exps = {h.source: h.exponent for h in hs}
    assert exps["(z - w)^-2"] == -2 and exps["z^3"] == 3
    z3 = next(h for h in hs if h.source == "z^3")
    assert not z3.exact_on(1.5, 4) and z3.exact_on(0.5, 4)


def test_hardy_tuples_need_convergent_expansion():
    X = segal.DegenerateSurface(geometry.cayley_germ(), 0.5, "pants", -0.1, 0.15)
    with pytest.raises(segal.ExpansionDomainError):
        segal.hardy_tuples(X, 2)


def test_certificates_exact_tuples(surface, T4):
    hs = segal.hardy_tuples(surface, 3)
    for h, c in zip(hs, segal.commutation_residual(T4, hs, 1.5)):
        if h.exact_on(1.5, 4):
            assert c.residual < 1e-12, c.source


def test_certificates_detect_perturbation(surface, T4):
    z0 = next(h for h in segal.hardy_tuples(surface, 2) if h.source == "z^0")
    c = segal.commutation_residual(T4, [z0.perturbed(0.1, 0)], 1.5)[0]
    assert c.residual > 1e-3
    assert "on the disk" in c.source


def test_convergence_study(surface):
    rows = segal.convergence_study(surface, [2.0, 1.5, 1.2, 1.0])
    devs = [max(r.probe_deviation.values()) for r in rows]
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert devs[-1] == 0.0
    svs = [r.top_singular_value for r in rows]
    assert all(b >= a for a, b in zip(svs, svs[1:]))
    with pytest.raises(ValueError):
        segal.convergence_study(surface, [1.0, 1.5])


def test_top_singular_values_grow_with_cutoff(surface):
    svs = segal.top_singular_values(surface, [2, 3, 4])
    assert all(b >= a - 1e-12 for a, b in zip(svs, svs[1:]))
