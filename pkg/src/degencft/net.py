"""Localized vertex operators and finite-cutoff locality experiments.

``T_xi eta = T(xi (x) eta)`` for a pants ``T``.  Locality is tested in the
standard boundary frame: for ``f`` (approximately) supported in the contact
image arc ``I'``, the reparametrization pair that identifies the outgoing
boundary with the incoming one along the contact is absorbed into the test
function, turning ``a(f) T_xi = (-1)^{p(xi)} T_xi a(f)`` into
``a(f) T_xi = (-1)^{p(xi)} T_xi a(f0)`` with ``f0 = psi_t (f o phi_t)`` on
the contact arc and ``0`` elsewhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import geometry
from .boundary import BoundaryFunction, circle_points, from_samples
from .fock import FockSpace, SparseOperator, car_annihilator, car_creator, energy2
from .segal import DegenerateSurface, pants_operator
from .virasoro import virasoro_matrix
from .voa import VoaState


class LocalizationError(ValueError):
    pass


def _angle_in(theta, arc) -> np.ndarray:
    a0, a1 = arc
    return np.mod(np.asarray(theta) - a0, 2 * np.pi) <= np.mod(a1 - a0, 2 * np.pi)


# reparametrization pairs ---------------------------------------------------------
@dataclass(frozen=True)
class RotationPair:
    """gamma_1 = rotation by theta_out, gamma_2 = rotation by theta_in."""
    theta_out: float = 0.0
    theta_in: float = 0.0


@dataclass(frozen=True, eq=False)
class ContactPair:
    """gamma_2 = id and gamma_1 = phi_t on the contact arc.

    ``arc_in`` is the contact arc (points with |phi_t| = 1) and ``arc_out``
    its image; both are (start, end) angles read counterclockwise.
    """
    arc_in: tuple
    arc_out: tuple
    contact_tol: float = 1e-6


def contact_pair(germ, t: float, samples: int = 2048, tol: float = 1e-6, margin: float = 0.0) -> ContactPair:
    zc, pc = geometry.contact_arc(germ, t, samples, tol)
    if zc.size < 3:
        raise LocalizationError("phi_t(S^1) meets S^1 in fewer than three grid points; no interval contact")
    a_in = np.angle(zc)
    a_out = np.angle(pc)
    # contact arcs here never straddle the branch cut of angle()
    arc_in = (float(a_in.min()) + margin, float(a_in.max()) - margin)
    arc_out = (float(a_out.min()) + margin, float(a_out.max()) - margin)
    return ContactPair(arc_in, arc_out, tol)


def _check_pair(X: DegenerateSurface, pair, samples: int = 256):
    if pair is None or isinstance(pair, RotationPair):
        return
    z = np.exp(1j * np.linspace(*pair.arc_in, samples))
    ph = geometry.phi_t(X.germ, X.t, z)
    if np.abs(np.abs(ph) - 1).max() > max(pair.contact_tol, 1e-6) * 10:
        raise LocalizationError("gamma_1 = phi_t o gamma_2 fails on the declared arc: phi_t leaves the circle")
    inside = _angle_in(np.angle(ph), pair.arc_out)
    if not inside.all():
        raise LocalizationError("phi_t does not carry the contact arc into the declared image arc")


# localized operators --------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LocalizedOperator:
    surface: DegenerateSurface
    state: VoaState
    op: SparseOperator
    reparam: object = None
    interval: tuple | None = None

    @property
    def parity(self):
        return self.state.parity

    def toarray(self) -> np.ndarray:
        return self.op.toarray()

    @property
    def space(self) -> FockSpace:
        return self.op.rows


def _rotation(space: FockSpace, theta: float) -> np.ndarray:
    return np.exp(1j * theta * space.energies2 / 2.0)


def slice_matrix(T, xi: VoaState) -> sp.csr_matrix:
    """eta -> T(xi (x) eta) on F_{<=N}; columns whose pair leaves the cutoff are zero."""
    space, tspace = T.rows, T.cols
    Tm = T.matrix.matrix.tocsc()
    rows, cols, vals = [], [], []
    for a, ca in xi.vector.items():
        if ca == 0:
            continue
        for j, b in enumerate(space.states):
            k = tspace.index.get((a, b))
            if k is None:
                continue
            col = Tm.getcol(k).tocoo()
            rows.extend(col.row)
            cols.extend([j] * col.nnz)
            vals.extend(ca * col.data)
    return sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(space.dim, space.dim))


def localized_operator(X: DegenerateSurface, xi, N: float = 4, reparam=None, T=None,
                       check: bool = True) -> LocalizedOperator:
    """U(gamma_1)^* T_xi U(gamma_2); rotations act as e^{i theta L0}."""
    xi = xi if isinstance(xi, VoaState) else VoaState(dict(xi))
    if check:
        _check_pair(X, reparam)
    T = T or pants_operator(X, N, check=check)
    mat = slice_matrix(T, xi)
    if isinstance(reparam, RotationPair):
        space = T.rows
        mat = sp.diags(np.conj(_rotation(space, reparam.theta_out))) @ mat @ sp.diags(_rotation(space, reparam.theta_in))
    par = {0: "even", 1: "odd", None: "mixed"}[xi.parity]
    interval = reparam.arc_out if isinstance(reparam, ContactPair) else None
    return LocalizedOperator(X, xi, SparseOperator(sp.csr_matrix(mat), T.rows, T.rows, par), reparam, interval)


# test functions ---------------------------------------------------------------------
def bump(theta, arc) -> np.ndarray:
    """Smooth bump exp(-1/(1 - x^2)) supported on the arc."""
    a0, a1 = arc
    width = np.mod(a1 - a0, 2 * np.pi)
    x = 2 * np.mod(np.asarray(theta) - a0, 2 * np.pi) / width - 1
    out = np.zeros_like(x, dtype=float)
    inside = np.abs(x) < 1
    out[inside] = np.exp(1 - 1 / (1 - x[inside] ** 2))
    return out


@dataclass
class RationalTestFunction:
    f: BoundaryFunction          # F on the outer circle
    f0: BoundaryFunction         # psi_t (F o phi_t), cut to the contact arc
    leakage: float
    degree: int
    target_arc: tuple
    parts: dict = field(default_factory=dict)


def rational_approximant(X: DegenerateSurface, pair: ContactPair, degree: int, target_arc=None,
                         band: int = 64, samples: int = 2048, margin: float = 0.2,
                         pole_radius: float = 0.9) -> RationalTestFunction:
    """Least-squares rational F close to a bump on ``target_arc`` of the outer
    circle and close to zero on the rest of the circle, on w + sS^1 and on
    phi_t(S^1) off the contact arc.

    Poles sit at 0, infinity and w (orders <= degree), plus simple poles at
    ``pole_radius * e^{i a}`` and ``e^{i a} / pole_radius`` for angles a across
    the target arc; the inner ones lie in phi_t(D) and the outer ones outside
    the disk, so F stays holomorphic on the surface.  The leakage is the
    largest modulus F (suitably pulled back) attains on the three sets above,
    i.e. how far (F|S^1, 0, f0) is from a Hardy triple."""
    if target_arc is None:
        target_arc = (pair.arc_out[0] + margin, pair.arc_out[1] - margin)
    w, s = X.w, X.s
    z = circle_points(samples)
    th = np.angle(z)
    ph = geometry.phi_t(X.germ, X.t, z)
    root = geometry.sqrt_derivative(geometry.phi_t_prime(X.germ, X.t, z, ph))
    on_contact = (np.abs(np.abs(ph) - 1) < pair.contact_tol * 10) & _angle_in(th, pair.arc_in)
    disk = w + s * z
    a0, a1 = pair.arc_out
    extra = [r * np.exp(1j * a) for a in np.linspace(a0, a1, max(degree // 2, 1))
             for r in (pole_radius, 1 / pole_radius)]
    inner = [p for p in extra if abs(p) < 1]
    bad = geometry.phi_t(X.germ, X.t, np.exp(1j * np.linspace(0, 2 * np.pi, 512, endpoint=False)))
    if inner and not _inside_curve(np.array(inner), bad):
        raise LocalizationError("an interior pole is not enclosed by phi_t(S^1)")

    def basis(u):
        cols = [u ** k for k in range(degree + 1)]
        cols += [(0.5 / u) ** k for k in range(1, degree + 1)]
        cols += [(s / (u - w)) ** j for j in range(1, degree // 2 + 1)]
        cols += [0.1 / (u - p) for p in extra]
        return np.stack(cols, axis=1)

    target = bump(th, target_arc)
    A = np.vstack([basis(z), np.sqrt(s) * basis(disk), root[~on_contact, None] * basis(ph[~on_contact])])
    b = np.concatenate([target, np.zeros(samples), np.zeros(np.count_nonzero(~on_contact))])
    coef, *_ = np.linalg.lstsq(A, b, rcond=1e-13)
    F_outer = basis(z) @ coef
    F_disk = np.sqrt(s) * basis(disk) @ coef
    F_ann = root * (basis(ph) @ coef)
    off_arc = ~_angle_in(th, pair.arc_out)
    leak = {
        "outer": float(np.abs(F_outer[off_arc]).max(initial=0)),
        "disk": float(np.abs(F_disk).max()),
        "annulus": float(np.abs(F_ann[~on_contact]).max(initial=0)),
    }
    f = from_samples(F_outer, band)
    f0 = from_samples(np.where(on_contact, F_ann, 0), band)
    return RationalTestFunction(f, f0, max(leak.values()), degree, target_arc,
                                {"leakage_parts": leak, "fit_error": float(np.abs(F_outer - target).max())})


def _inside_curve(pts, curve) -> np.ndarray:
    # winding number of a closed sampled curve around each point
    d = curve[None, :] - pts[:, None]
    ang = np.angle(np.roll(d, -1, axis=1) / d).sum(axis=1)
    return bool(np.all(np.abs(ang) > np.pi))


def bump_function(arc, band: int = 64, samples: int = 2048) -> BoundaryFunction:
    z = circle_points(samples)
    return from_samples(bump(np.angle(z), arc).astype(complex), band)


# locality residual --------------------------------------------------------------------
@dataclass
class LocalityResult:
    unstarred: float
    starred: float
    leakage: float
    op_norm: float

    @property
    def residual(self) -> float:
        return max(self.unstarred, self.starred)

    @property
    def ratio(self) -> float:
        return self.residual / self.leakage if self.leakage > 0 else np.inf


def _win(mat, space: FockSpace, M: float) -> float:
    idx = space.window(int(round(2 * M)))
    blk = mat[np.ix_(idx, idx)]
    return float(np.linalg.norm(blk, 2)) if blk.size else 0.0


def locality_residual(T: LocalizedOperator, f, M: float = 2, f0: BoundaryFunction | None = None,
                      leakage: float | None = None) -> LocalityResult:
    """Graded commutator residuals of a(f) and a(f)^* with T_xi on F_{<=M}.

    ``f`` is a RationalTestFunction (its pullback and leakage are used) or a
    plain BoundaryFunction together with its pullback ``f0``."""
    if isinstance(f, RationalTestFunction):
        f0 = f.f0 if f0 is None else f0
        leakage = f.leakage if leakage is None else leakage
        f = f.f
    f0 = f if f0 is None else f0
    space = T.space
    sign = -1.0 if T.parity == 1 else 1.0
    Tm = T.toarray()
    A, A0 = car_annihilator(f, space).toarray(), car_annihilator(f0, space).toarray()
    As, A0s = car_creator(f, space).toarray(), car_creator(f0, space).toarray()
    un = _win(A @ Tm - sign * Tm @ A0, space, M)
    st = _win(As @ Tm - sign * Tm @ A0s, space, M)
    return LocalityResult(un, st, float(leakage or 0.0), float(np.linalg.norm(Tm, 2)))


# cyclicity -------------------------------------------------------------------------------
def cyclic_span_dim(X: DegenerateSurface, N: float, M: float, tol: float = 1e-8, T=None) -> int:
    """Numerical rank of {T_xi Omega : xi basis of F_{<=N}} projected to F_{<=M}."""
    T = T or pants_operator(X, N)
    space, tspace = T.rows, T.cols
    cols = [tspace.index[(a, ())] for a in space.states if (a, ()) in tspace.index]
    rows = space.window(int(round(2 * M)))
    block = T.matrix.matrix[rows][:, cols].toarray()
    if block.size == 0:
        return 0
    sig = np.linalg.svd(block, compute_uv=False)
    return int(np.count_nonzero(sig > tol))


# subalgebra compression -------------------------------------------------------------------
def virasoro_subspace(space: FockSpace, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of span{L_-n1 ... L_-nk Omega} inside the cutoff."""
    N = space.cutoff2 // 2
    vecs = [space.basis_vector(())]
    frontier = [(space.basis_vector(()), 0)]
    while frontier:
        nxt = []
        for v, e in frontier:
            for n in range(2 if e == 0 else 1, N - e + 1):
                u = virasoro_matrix(-n, space) @ v
                if np.linalg.norm(u) > tol:
                    vecs.append(u)
                    nxt.append((u, e + n))
        frontier = nxt
    U, sig, _ = np.linalg.svd(np.array(vecs).T, full_matrices=False)
    return U[:, sig > tol * max(1.0, sig.max())]


def subspace_projection(kind: str, space: FockSpace) -> np.ndarray:
    if kind == "whole":
        return np.eye(space.dim)
    if kind == "even":
        return np.diag((space.parities == 0).astype(float))
    if kind == "virasoro":
        B = virasoro_subspace(space)
        return B @ B.conj().T
    raise ValueError(f"unsupported subalgebra {kind!r}; choose whole, even or virasoro")


@dataclass
class CompressionResult:
    left: float   # ||e T_xi e - T_{e xi} e||
    right: float  # ||T_{e xi} e - e T_{e xi} e||


def compression_check(kind: str, T: LocalizedOperator, M: float | None = None, pants=None) -> CompressionResult:
    space = T.space
    P = subspace_projection(kind, space)
    xi = T.state.to_array(space)
    exi = VoaState(space.as_dict(P @ xi, 1e-15))
    pants = pants or pants_operator(T.surface, space.cutoff, check=False)
    Te = slice_matrix(pants, exi).toarray() if exi.vector else np.zeros((space.dim, space.dim))
    Tx = T.toarray()
    M = space.cutoff if M is None else M
    return CompressionResult(_win(P @ Tx @ P - Te @ P, space, M), _win(Te @ P - P @ Te @ P, space, M))


# rotation covariance ------------------------------------------------------------------------
def rotated_germ(germ, theta: float):
    """sigma_theta(z) = e^{i theta} sigma(e^{-i theta} z), with rho(e^{-i theta} z)."""
    ph = np.exp(1j * theta)
    rho = BoundaryFunction(germ.rho.data * ph ** (-germ.rho.freqs.astype(float)), germ.rho.band)
    return geometry.SemigroupGerm(f"{germ.name}@{theta:g}", lambda z: ph * germ.sigma(np.asarray(z) / ph),
                                  lambda z: germ.dsigma(np.asarray(z) / ph), rho, None, None,
                                  germ.newton_tol, dict(germ.params))


def rotation_covariance_residual(X: DegenerateSurface, theta: float, xi, N: float = 4) -> float:
    """|| e^{i theta L0} T_xi e^{-i theta L0} - T'_{e^{i theta L0} xi} || for the
    rotated surface T' (centre e^{i theta} w, generator rho(e^{-i theta} .))."""
    xi = xi if isinstance(xi, VoaState) else VoaState(dict(xi))
    T = localized_operator(X, xi, N, check=False)
    Xr = DegenerateSurface(rotated_germ(X.germ, theta), X.t, X.kind, X.w * np.exp(1j * theta), X.s)
    rxi = VoaState({k: v * np.exp(1j * theta * energy2(k) / 2) for k, v in xi.vector.items()})
    Tr = localized_operator(Xr, rxi, N, check=False)
    U = np.diag(_rotation(T.space, theta))
    return float(np.abs(U @ T.toarray() @ U.conj().T - Tr.toarray()).max())
