"""Semigroups of univalent self-maps of the disk and their composition operators.

A germ is given by a Koenigs map sigma with sigma(0) = 0, sigma'(0) = 1.  The
semigroup is phi_t = sigma^{-1}(e^{-t} sigma) and its generator is encoded by
rho = sigma / (z sigma').  The weighted composition operator is
(W f)(z) = phi'(z)^{1/2} f(phi(z)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .boundary import BoundaryFunction, circle_points, from_samples

NEWTON_TOL = 1e-12
NEWTON_ITERS = 50
# accepted residual when the root lies on the circle, where a truncated
# Koenigs series converges slowly and the target cannot be met exactly
BOUNDARY_TOL = 1e-6


class GeometryError(ValueError):
    pass


class InversionError(GeometryError):
    pass


@dataclass(frozen=True, eq=False)
class KoenigsSeries:
    taylor: np.ndarray  # c_1, c_2, ... of sigma(z) = sum_k c_k z^k

    def __post_init__(self):
        c = np.asarray(self.taylor, dtype=complex)
        if c.size == 0 or c[0] == 0:
            raise GeometryError("Koenigs series needs sigma'(0) != 0")
        object.__setattr__(self, "taylor", c)

    @property
    def degree(self) -> int:
        return self.taylor.size

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in self.taylor[::-1]:
            acc = (acc + c) * z
        return acc

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        k = np.arange(1, self.degree + 1)
        acc = np.zeros_like(z)
        for kk, c in zip(k[::-1], self.taylor[::-1]):
            acc = acc * z + kk * c
        return acc


@dataclass(frozen=True, eq=False)
class SemigroupGerm:
    name: str
    sigma: Callable
    dsigma: Callable
    rho: BoundaryFunction
    inverse: Callable | None = None  # closed-form sigma^{-1} when known
    series: KoenigsSeries | None = None
    newton_tol: float = NEWTON_TOL
    params: dict = field(default_factory=dict)

    def rho_at(self, z):
        z = np.asarray(z, dtype=complex)
        return self.sigma(z) / (z * self.dsigma(z))


# built-in germs -----------------------------------------------------------------
def _make(name, sigma, dsigma, band, inverse=None, series=None, params=None, check=True):
    rho = _rho_boundary(sigma, dsigma, band)
    if check:
        _check_rho(rho)
    return SemigroupGerm(name, sigma, dsigma, rho, inverse, series, NEWTON_TOL, params or {})


def identity_germ(band: int = 16) -> SemigroupGerm:
    return _make("identity", lambda z: np.asarray(z, complex), lambda z: np.ones_like(np.asarray(z, complex)),
                 band, inverse=lambda w: np.asarray(w, complex))


def cayley_germ(band: int = 16) -> SemigroupGerm:
    """sigma = z/(1-z); phi_t are Moebius maps fixing the boundary point 1."""
    def sigma(z):
        z = np.asarray(z, complex)
        return z / (1 - z)

    def dsigma(z):
        z = np.asarray(z, complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1 / (1 - z) ** 2

    rho = BoundaryFunction.from_dict({0: 1.0, 1: -1.0}, band)
    return SemigroupGerm("cayley", sigma, dsigma, rho, inverse=lambda w: np.asarray(w, complex) / (1 + np.asarray(w, complex)))


def exp_germ(eps: float = 0.1, band: int = 16) -> SemigroupGerm:
    """sigma = z e^{eps z}; rho = 1/(1 + eps z)."""
    if abs(eps) >= 1:
        raise GeometryError("exp germ is starlike only for |eps| < 1")

    def sigma(z):
        z = np.asarray(z, complex)
        return z * np.exp(eps * z)

    def dsigma(z):
        z = np.asarray(z, complex)
        return (1 + eps * z) * np.exp(eps * z)

    return _make("exp", sigma, dsigma, band, params={"eps": eps})


def series_germ(coeffs, band: int = 16, name: str = "series", check: bool = True) -> SemigroupGerm:
    ser = KoenigsSeries(np.asarray(coeffs, complex) / complex(coeffs[0]))
    return _make(name, ser, ser.derivative, band, series=ser, check=check)


def herglotz_germ(density: Callable, terms: int = 1024, band: int = 16, samples: int = 1 << 15,
                  name: str = "herglotz") -> SemigroupGerm:
    """Starlike germ whose z sigma'/sigma has boundary real part ``density``.

    ``density`` is a nonnegative function of the angle; it is rescaled to mean 1.
    Where it vanishes on an arc, sigma maps that arc onto a radial segment, so
    the semigroup touches the circle along an interval.
    """
    tau = 2 * np.pi * np.arange(samples) / samples
    m = np.asarray(density(tau), float)
    if np.any(m < 0):
        raise GeometryError("Herglotz density must be nonnegative")
    m = m / m.mean()
    mu = np.fft.fft(m) / samples  # mu[n] = mean of e^{-in tau} m
    n = np.arange(1, samples // 2)
    g = np.zeros(samples, complex)
    g[n] = 2 * mu[n] / n  # log(sigma/z) = sum 2 mu_n z^n / n
    vals = np.exp(np.fft.ifft(g) * samples)
    taylor = np.fft.fft(vals) / samples
    coeffs = taylor[:terms]
    ser = KoenigsSeries(coeffs / coeffs[0])
    germ = _make(name, ser, ser.derivative, band, series=ser, check=False)
    # rho on the circle directly from p = 1 + 2 sum mu_n z^n, avoiding series tails
    p = np.zeros(samples, complex)
    p[0] = 1
    p[n] = 2 * mu[n]
    pb = np.fft.ifft(p) * samples
    rho = from_samples(1 / pb, band)
    # 1/p is holomorphic in the disk; negative frequencies are sampling noise
    rho = BoundaryFunction(np.where(rho.freqs >= 0, rho.data, 0), band)
    object.__setattr__(germ, "rho", rho)
    germ.params.update({"boundary_p": pb, "tail": float(abs(coeffs[-1])),
                        "min_re_rho": float((1 / pb).real.min())})
    # the band-limited rho may ring slightly negative; the sampled trace only
    # carries discretisation error at kinks of the density
    if (1 / pb).real.min() < -1e-4:
        raise GeometryError("Re rho < 0 on the boundary: sigma is not starlike")
    return germ


def contact_germ(arc=(-0.6, 0.6), skew: float = 6.0, band: int = 16) -> SemigroupGerm:
    """Herglotz germ whose density vanishes on ``arc``.

    On the support (position x in (0, 1), counterclockwise from the arc's end)
    the density is x (1-x)^(1/4) e^{-skew x}.  Piling mass next to the arc's
    counterclockwise end keeps Im p of one sign along the arc, so sigma maps
    the arc monotonically onto a radial segment and p stays away from zero.
    """
    a0, a1 = arc
    width = 2 * np.pi - (a1 - a0)

    def density(tau):
        x = np.mod(tau - a1, 2 * np.pi) / width
        out = np.zeros_like(x)
        inside = (x > 0) & (x < 1)
        xi = x[inside]
        out[inside] = xi * (1 - xi) ** 0.25 * np.exp(-skew * xi)
        return out

    germ = herglotz_germ(density, band=band, name="contact")
    germ.params.update({"arc": (a0, a1), "skew": skew})
    return germ


def germ_from_spec(spec: str, band: int = 16) -> SemigroupGerm:
    """'identity', 'cayley', 'exp' or 'exp:0.2', 'contact', or a comma separated
    coefficient list 'c1,c2,...' (complex literals allowed)."""
    spec = spec.strip()
    head, _, arg = spec.partition(":")
    if head == "identity":
        return identity_germ(band)
    if head == "cayley":
        return cayley_germ(band)
    if head == "exp":
        return exp_germ(float(arg) if arg else 0.1, band)
    if head == "contact":
        return contact_germ(band=band)
    try:
        coeffs = [complex(x.replace(" ", "")) for x in spec.split(",")]
    except ValueError as exc:
        raise GeometryError(f"unrecognized germ description {spec!r}") from exc
    return series_germ(coeffs, band)


# rho --------------------------------------------------------------------------
def _rho_boundary(sigma, dsigma, band, samples=None):
    samples = samples or max(256, 1 << int(np.ceil(np.log2(16 * band + 16))))
    z = circle_points(samples)
    ds = dsigma(z)
    if np.min(np.abs(ds)) < 1e-12:
        raise GeometryError("sigma' vanishes on the boundary grid")
    return from_samples(sigma(z) / (z * ds), band)


def _check_rho(rho: BoundaryFunction, samples: int = 512, tol: float = 1e-10):
    re = rho.samples(samples).real
    if re.min() < -tol:
        raise GeometryError(f"Re rho reaches {re.min():.3e} < 0: sigma is not starlike")


def rho_from_sigma(sigma: KoenigsSeries | Callable, band: int, dsigma: Callable | None = None) -> BoundaryFunction:
    """Boundary trace of sigma/(z sigma'), keeping frequencies >= 0."""
    if dsigma is None:
        dsigma = sigma.derivative
    # sigma' must not vanish on the closed disk
    r = np.linspace(0.0, 1.0, 33)[1:]
    th = circle_points(256)
    zz = (r[:, None] * th[None, :]).ravel()
    if np.min(np.abs(dsigma(zz))) < 1e-10 or abs(dsigma(np.array([0j]))[0]) < 1e-10:
        raise GeometryError("sigma' vanishes in the closed disk: rho is singular")
    rho = _rho_boundary(sigma, dsigma, band)
    _check_rho(rho)
    return BoundaryFunction(np.where(rho.freqs >= 0, rho.data, 0), band)


# phi_t ------------------------------------------------------------------------
def _newton(germ: SemigroupGerm, target, guess, tol):
    """Vectorised Newton solve of sigma(u) = target, iterates kept in the closed disk."""
    u = np.array(guess, dtype=complex)
    scale = np.maximum(1.0, np.abs(target))
    done = np.zeros(u.shape, bool)
    for _ in range(NEWTON_ITERS):
        act = ~done
        res = germ.sigma(u[act]) - target[act]
        conv = np.abs(res) <= tol * scale[act]
        idx = np.flatnonzero(act)
        done[idx[conv]] = True
        if done.all():
            break
        idx = idx[~conv]
        step = res[~conv] / germ.dsigma(u[idx])
        nu = u[idx] - step
        big = np.abs(nu) > 1
        nu[big] = nu[big] / np.abs(nu[big])
        u[idx] = nu
    return u, done


def phi_t(germ: SemigroupGerm, t: float, z) -> np.ndarray:
    """phi_t(z) for points of the closed disk.

    With no closed-form inverse, sigma is inverted by Newton's method continued
    in t from phi_0 = id.
    """
    if t < 0:
        raise GeometryError("t must be nonnegative")
    z = np.atleast_1d(np.asarray(z, complex))
    if t == 0:
        return z.copy()
    if germ.inverse is not None:
        return _phi_closed(germ, t, z)
    sz = germ.sigma(z)
    u = z.copy()
    steps = max(8, int(np.ceil(40 * t)))
    for s in np.linspace(0, t, steps + 1)[1:]:
        u, ok = _newton(germ, np.exp(-s) * sz, u, germ.newton_tol)
    if not ok.all():
        res = np.abs(germ.sigma(u[~ok]) - np.exp(-t) * sz[~ok])
        ok[~ok] = res <= BOUNDARY_TOL * np.maximum(1.0, np.abs(sz[~ok]))
    if not ok.all():
        bad = z[~ok][0]
        raise InversionError(f"Newton inversion of sigma failed at {bad:.6f} (t={t})")
    return u


def _phi_closed(germ, t, z):
    if germ.name == "cayley":
        # e^{-t} z / (1 - z + e^{-t} z), regular at z = 1
        q = np.exp(-t)
        return q * z / (1 - z + q * z)
    return germ.inverse(np.exp(-t) * germ.sigma(z))


def phi_t_prime(germ: SemigroupGerm, t: float, z, phi=None) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, complex))
    if phi is None:
        phi = phi_t(germ, t, z)
    if germ.name == "cayley":
        q = np.exp(-t)
        return q / (1 - z + q * z) ** 2
    return np.exp(-t) * germ.dsigma(z) / germ.dsigma(phi)


def phi_t_boundary(germ: SemigroupGerm, t: float, samples: int) -> np.ndarray:
    return phi_t(germ, t, circle_points(samples))


# validation ---------------------------------------------------------------------
@dataclass
class ValidationReport:
    semigroup_defect: float
    generator_defect: float
    univalent: bool
    min_re_rho: float
    grid: int
    flags: dict

    @property
    def ok(self) -> bool:
        return all(self.flags.values())


def _self_intersects(pts: np.ndarray) -> bool:
    """Whether the closed polygon through ``pts`` crosses itself."""
    a = pts
    b = np.roll(pts, -1)
    n = len(pts)
    ax, ay, bx, by = a.real, a.imag, b.real, b.imag
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        cx, cy, dx, dy = ax[j], ay[j], bx[j], by[j]
        d1 = (dx - cx) * (ay[i] - cy) - (dy - cy) * (ax[i] - cx)
        d2 = (dx - cx) * (by[i] - cy) - (dy - cy) * (bx[i] - cx)
        d3 = (bx[i] - ax[i]) * (cy - ay[i]) - (by[i] - ay[i]) * (cx - ax[i])
        d4 = (bx[i] - ax[i]) * (dy - ay[i]) - (by[i] - ay[i]) * (dx - ax[i])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


def validate_semigroup(germ: SemigroupGerm, grid: int = 64, times=(0.25, 0.5), h: float = 1e-6,
                       radius: float = 0.9) -> ValidationReport:
    """Numerical checks of the semigroup axioms on a circle of the given radius."""
    z = radius * circle_points(grid)
    flags = {}
    try:
        img = germ.sigma(circle_points(4 * grid) * (1 - 1e-9))
        univalent = not _self_intersects(img) and np.all(np.isfinite(img))
        zz = (np.linspace(0.05, 1.0, 20)[:, None] * circle_points(grid)[None, :]).ravel()
        univalent = univalent and np.min(np.abs(germ.dsigma(zz))) > 1e-10
    except FloatingPointError:
        univalent = False
    flags["univalent"] = bool(univalent)
    if "boundary_p" in germ.params:
        min_re = float((1 / germ.params["boundary_p"]).real.min())
    else:
        min_re = float(germ.rho.samples(4 * grid).real.min())
    flags["starlike"] = min_re >= -1e-4 if "boundary_p" in germ.params else min_re >= -1e-10
    sg = gen = np.inf
    if univalent:
        try:
            sg = 0.0
            for t in times:
                for s in times:
                    lhs = phi_t(germ, t, phi_t(germ, s, z))
                    rhs = phi_t(germ, t + s, z)
                    sg = max(sg, float(np.abs(lhs - rhs).max()))
            # Richardson-extrapolated forward difference, O(h^2)
            d1 = (phi_t(germ, h, z) - z) / h
            d2 = (phi_t(germ, 2 * h, z) - z) / (2 * h)
            gen = float(np.abs(2 * d1 - d2 + germ.sigma(z) / germ.dsigma(z)).max())
        except InversionError:
            sg = gen = np.inf
    flags["semigroup"] = sg < 1e-8
    flags["generator"] = gen < 1e-4
    return ValidationReport(sg, gen, bool(univalent), min_re, grid, flags)


# composition operators ------------------------------------------------------------
class BranchError(GeometryError):
    pass


@dataclass(frozen=True, eq=False)
class CompositionMatrix:
    entries: np.ndarray  # entries[m + band, n + band] = coefficient of z^m in W z^n
    band: int
    sqrt_branch: str = "phi'(0)^(1/2) > 0"

    @property
    def freqs(self):
        return np.arange(-self.band, self.band + 1)

    def entry(self, m: int, n: int) -> complex:
        return complex(self.entries[m + self.band, n + self.band])

    def apply(self, f: BoundaryFunction) -> BoundaryFunction:
        g = f.with_band(self.band)
        return BoundaryFunction(self.entries @ g.data, self.band)

    def tilde(self) -> "CompositionMatrix":
        """c W c, with (c z^k) = z^(-k-1); one frequency narrower."""
        b = self.band - 1
        m = np.arange(-b, b + 1)
        src = -m - 1 + self.band
        return CompositionMatrix(np.conj(self.entries[np.ix_(src, src)]), b, self.sqrt_branch)

    def restrict(self, band: int) -> "CompositionMatrix":
        s = slice(self.band - band, self.band + band + 1)
        return CompositionMatrix(self.entries[s, s], band, self.sqrt_branch)


def sqrt_derivative(phi_prime: np.ndarray) -> np.ndarray:
    """Continuous square root of boundary samples of phi', normalised so that its
    holomorphic extension is positive at 0 (the sample mean is its value there)."""
    if np.min(np.abs(phi_prime)) == 0:
        raise BranchError("phi' vanishes on the boundary grid")
    ang = np.unwrap(np.angle(np.append(phi_prime, phi_prime[0])))
    winding = (ang[-1] - ang[0]) / (2 * np.pi)
    ang = ang[:-1]
    if abs(winding) > 0.5:
        raise BranchError(f"phi' winds {winding:.2f} times around 0; no continuous square root")
    root = np.sqrt(np.abs(phi_prime)) * np.exp(0.5j * ang)
    if root.mean().real < 0:
        root = -root
    return root


def composition_matrix(phi_boundary, phi_prime_boundary, band: int) -> CompositionMatrix:
    """Matrix of W f = phi'^{1/2} (f o phi) on frequencies [-band, band]."""
    phi = np.asarray(phi_boundary, complex)
    root = sqrt_derivative(np.asarray(phi_prime_boundary, complex))
    ns = np.arange(-band, band + 1)
    cols = [from_samples(root * phi ** n, band).data for n in ns]
    return CompositionMatrix(np.array(cols).T, band)


def composition_operator(germ: SemigroupGerm, t: float, band: int, samples: int = 1024) -> CompositionMatrix:
    z = circle_points(samples)
    ph = phi_t(germ, t, z)
    return composition_matrix(ph, phi_t_prime(germ, t, z, ph), band)


def approx_numbers(W: CompositionMatrix, count: int):
    """Leading singular values of the compression of W to H^2 (frequencies
    0..band) and partial products of max(1, a_n)."""
    b = W.band
    s = np.linalg.svd(W.entries[b:, b:], compute_uv=False)[:count]
    return s, np.cumprod(np.maximum(1.0, s))


def contact_arc(germ: SemigroupGerm, t: float, samples: int = 4096, tol: float = 1e-9):
    """Boundary points z with |phi_t(z)| = 1 (within tol): returns (z, phi_t(z)) on
    the contact set, the boundary arc of phi_t(S^1) lying on S^1."""
    z = circle_points(samples)
    ph = phi_t(germ, t, z)
    mask = np.abs(np.abs(ph) - 1) < tol
    return z[mask], ph[mask]
