import math

import numpy as np
import pytest

from degencft import geometry as g
from degencft.boundary import circle_points


def cayley_w_oracle(t, n, m):
    """Coefficient of z^m in W z^n for phi_t = q z / (1 - (1 - q) z), q = e^-t:
    W z^n = q^(n + 1/2) z^n (1 - (1 - q) z)^-(n + 1)."""
    q = math.exp(-t)
    if m < n:
        return 0.0
    k = m - n
    return q ** (n + 0.5) * math.comb(n + k, k) * (1 - q) ** k


def test_cayley_rho_and_phi():
    G = g.cayley_germ()
    assert G.rho.as_dict(1e-14) == {0: 1.0, 1: -1.0}
    z = 0.5 * circle_points(16)
    phi = g.phi_t(G, 0.7, z)
    assert np.allclose(G.sigma(phi), np.exp(-0.7) * G.sigma(z))


def test_composition_matrix_against_closed_form():
    G = g.cayley_germ()
    W = g.composition_operator(G, 0.4, 12, samples=1024)
    for n in range(0, 4):
        for m in range(0, 8):
            assert W.entry(m, n) == pytest.approx(cayley_w_oracle(0.4, n, m), abs=1e-10)


def test_exp_germ_validates():
    rep = g.validate_semigroup(g.exp_germ(0.2))
    assert rep.ok
    assert rep.semigroup_defect < 1e-10
    assert rep.min_re_rho > 0


def test_series_germ_matches_exp_germ():
    eps = 0.2
    coeffs = [eps ** k / math.factorial(k) for k in range(30)]
    S = g.series_germ(coeffs)
    E = g.exp_germ(eps)
    z = 0.6 * circle_points(12)
    assert np.allclose(g.phi_t(S, 0.3, z), g.phi_t(E, 0.3, z), atol=1e-10)
    assert np.allclose(S.rho.data, E.rho.data, atol=1e-10)


def test_non_starlike_series_rejected():
    # sigma = z + 0.9 z^2 has sigma' vanishing inside the disk
    with pytest.raises(g.GeometryError):
        g.series_germ([1.0, 0.9])


def test_exp_germ_parameter_guard():
    with pytest.raises(g.GeometryError):
        g.exp_germ(1.5)


def test_germ_from_spec():
    assert g.germ_from_spec("cayley").name == "cayley"
    assert g.germ_from_spec("exp:0.3").params["eps"] == 0.3
    assert g.germ_from_spec("1, 0.1").series is not None
    with pytest.raises(g.GeometryError):
        g.germ_from_spec("banana")


def test_sqrt_branch_positive_at_origin():
    G = g.exp_germ(0.3)
    z = circle_points(256)
    ph = g.phi_t(G, 0.5, z)
    root = g.sqrt_derivative(g.phi_t_prime(G, 0.5, z, ph))
    assert np.allclose(root ** 2, g.phi_t_prime(G, 0.5, z, ph))
    assert root.mean().real > 0


def test_composition_operator_is_a_contraction_on_hardy_space():
    for G, t in ((g.cayley_germ(), 0.5), (g.exp_germ(0.2), 0.3)):
        W = g.composition_operator(G, t, 24)
        s, _ = g.approx_numbers(W, 5)
        assert s[0] <= 1 + 1e-8
        assert np.all(np.diff(s) <= 1e-12)


@pytest.fixture(scope="module")
def contact():
    return g.contact_germ()


def test_contact_germ_is_starlike_with_interval_contact(contact):
    assert contact.params["min_re_rho"] > -1e-4
    assert contact.params["tail"] < 1e-8
    zc, pc = g.contact_arc(contact, 0.3, 2048, 1e-6)
    assert zc.size > 100  # a whole arc, not a point
    assert np.allclose(np.abs(pc), 1, atol=1e-6)
    # the image arc moves clockwise along the circle
    assert np.angle(pc).min() < np.angle(zc).min()


def test_contact_germ_semigroup_property(contact):
    z = 0.8 * circle_points(24)
    lhs = g.phi_t(contact, 0.1, g.phi_t(contact, 0.2, z))
    assert np.allclose(lhs, g.phi_t(contact, 0.3, z), atol=1e-9)


def test_cayley_touches_in_one_point_only():
    zc, _ = g.contact_arc(g.cayley_germ(), 0.5, 2048, 1e-9)
    assert zc.size <= 1
