"""Smeared Virasoro fields and the contraction semigroups they generate.

``L(f) = sum_n f_n L_n``.  For analytic ``rho`` only ``L_n`` with ``n >= 0``
occur; these lower (or keep) the energy, so ``F_{<=N}`` is invariant and the
truncated matrix exponential is the exact restriction of ``e^{-t L(rho)}``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import geometry
from .boundary import BoundaryFunction
from .fock import (FockSpace, SparseOperator, car_annihilator, car_creator, enumerate_basis,
                   exact_window)
from .voa import virasoro_mode


class ExactnessError(ValueError):
    pass


class AnalyticityError(ValueError):
    pass


class QEIPreconditionWarning(UserWarning):
    pass


def virasoro_matrix(n: int, space: FockSpace) -> sp.csr_matrix:
    """L_n on the truncated space, cached on the space."""
    cache = space.__dict__.setdefault("_virasoro", {})
    if n not in cache:
        cache[n] = virasoro_mode(n, space).matrix
    return cache[n]


@dataclass(frozen=True, eq=False)
class SmearedField:
    op: SparseOperator
    coeffs: BoundaryFunction
    hermitian_part: SparseOperator | None = None

    @property
    def window2(self) -> int:
        """Doubled input energy below which the truncated matrix is exact."""
        top = max((-n for n, _ in self.coeffs.items()), default=0)
        return exact_window(self.op.rows.cutoff2, [2 * max(top, 0)])


def _smear_matrix(f: BoundaryFunction, space: FockSpace) -> sp.csr_matrix:
    mat = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for n, c in f.items():
        if abs(n) <= space.cutoff2 // 2:  # L_n with |n| > N vanishes on F_{<=N}
            mat = mat + c * virasoro_matrix(n, space)
    return mat


def smear(f: BoundaryFunction, space: FockSpace, hermitian: bool = False) -> SmearedField:
    op = SparseOperator(_smear_matrix(f, space), space, space, "even")
    herm = None
    if hermitian:
        herm = SparseOperator(_smear_matrix(f.real_part(), space), space, space, "even")
    return SmearedField(op, f, herm)


# semigroups ----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SemigroupExponential:
    op: SparseOperator
    t: float
    rho: BoundaryFunction
    exactness_window: float
    flags: dict = field(default_factory=dict)

    def toarray(self) -> np.ndarray:
        return self.op.toarray()

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.op.toarray(), 2))


def exp_semigroup(rho: BoundaryFunction, t: float, space: FockSpace,
                  re_tol: float = 1e-10, samples: int = 512,
                  min_re: float | None = None) -> SemigroupExponential:
    """e^{-t L(rho)} on F_{<=N}, exact on every energy window.

    ``min_re`` overrides the sampled minimum of Re rho when a sharper value is
    known (band-limited rho rings near kinks of its boundary values)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not rho.is_analytic(1e-12):
        raise AnalyticityError("rho has negative Fourier frequencies; L(rho) would raise energy")
    if min_re is None:
        min_re = float(rho.samples(samples).real.min())
    flags = {"starlike": min_re >= -re_tol, "min_re_rho": min_re}
    if not flags["starlike"]:
        warnings.warn(f"Re rho reaches {min_re:.3e}; the energy bound behind the "
                      "semigroup estimate does not apply", QEIPreconditionWarning, stacklevel=2)
    L = _smear_matrix(rho, space).toarray()
    E = _blockwise_expm(-t * L, space)
    return SemigroupExponential(SparseOperator(sp.csr_matrix(E), space, space, "even"),
                                t, rho, space.cutoff, flags)


def germ_min_re(germ, tol: float = 1e-4):
    """Known lower bound for Re rho, clipped to 0 within the discretisation tolerance."""
    m = germ.params.get("min_re_rho")
    if m is None:
        return None
    return 0.0 if m > -tol else m


def _blockwise_expm(A: np.ndarray, space: FockSpace) -> np.ndarray:
    # L_n preserves the charge (#particles - #holes), so each charge sector
    # is an invariant block
    charge = np.array([sum(1 if m >= 0 else -1 for m in s) for s in space.states])
    out = np.zeros_like(A)
    for q in np.unique(charge):
        idx = np.flatnonzero(charge == q)
        out[np.ix_(idx, idx)] = sla.expm(A[np.ix_(idx, idx)])
    return out


# quantum energy inequality ----------------------------------------------------
@dataclass
class QEIResult:
    cutoff: float
    min_eigenvalue: float
    vacuum_overlap: float


def qei_spectrum(f: BoundaryFunction, cutoffs, samples: int = 1024) -> list:
    """Lowest eigenvalue of L(f) on each F_{<=N} and the overlap of its
    eigenvector with the vacuum."""
    vals = f.samples(samples)
    if np.abs(vals.imag).max() > 1e-10:
        raise ValueError("QEI needs a real-valued smearing function")
    if vals.real.min() < -1e-10:
        raise ValueError(f"QEI needs f >= 0; sample minimum is {vals.real.min():.3e}")
    out = []
    for N in cutoffs:
        space = enumerate_basis(N)
        H = _smear_matrix(f, space).toarray()
        H = 0.5 * (H + H.conj().T)
        w, v = np.linalg.eigh(H)
        out.append(QEIResult(float(N), float(w[0]), float(abs(v[space.index[()], 0]) ** 2)))
    return out


def qei_min_eigenvalue(f: BoundaryFunction, cutoffs) -> list:
    return [r.min_eigenvalue for r in qei_spectrum(f, cutoffs)]


# intertwining with composition operators -----------------------------------------
def _window_norm(mat: np.ndarray, space: FockSpace, M: float) -> float:
    idx = space.window(int(round(2 * M)))
    blk = mat[np.ix_(idx, idx)]
    return float(np.linalg.norm(blk, 2)) if blk.size else 0.0


@dataclass
class IntertwineResult:
    unstarred: float
    starred: float

    @property
    def residual(self) -> float:
        return max(self.unstarred, self.starred)


def intertwine_terms(germ, t: float, f: BoundaryFunction, N: float, M: float,
                     band: int | None = None, samples: int = 1024) -> IntertwineResult:
    """Residuals of a(f) E = E a(W f) and a(f)^* E = E a(cWc f)^* on F_{<=M},
    with E = e^{-t L(rho)} and W the weighted composition operator of phi_t."""
    if M > N:
        raise ExactnessError(f"check window {M} exceeds cutoff {N}")
    space = enumerate_basis(N)
    band = band or max(f.band, space.cutoff2) + 2
    E = exp_semigroup(germ.rho, t, space, min_re=germ_min_re(germ)).toarray()
    W = geometry.composition_operator(germ, t, band + 1, samples) if t > 0 else None
    fb = f.with_band(band)
    Wf = W.apply(fb) if W is not None else fb
    Wtf = W.tilde().apply(fb) if W is not None else fb
    A = car_annihilator(fb, space).toarray()
    B = car_annihilator(Wf, space).toarray()
    As = car_creator(fb, space).toarray()
    Bs = car_creator(Wtf, space).toarray()
    return IntertwineResult(_window_norm(A @ E - E @ B, space, M),
                            _window_norm(As @ E - E @ Bs, space, M))


def intertwine_residual(germ, t: float, f: BoundaryFunction, N: float, M: float, **kw) -> float:
    return intertwine_terms(germ, t, f, N, M, **kw).residual


def two_sided_test_function(q: float = 0.3, band: int = 40) -> BoundaryFunction:
    """f_n = q^|n|: both Fourier tails are infinite, so the truncated
    intertwining relation is not exact and its convergence in N is visible."""
    n = np.arange(-band, band + 1)
    return BoundaryFunction(q ** np.abs(n).astype(float), band)


# fermion commutation relations --------------------------------------------------
def _zmul(f: BoundaryFunction) -> BoundaryFunction:
    return f.shift(1)


def commutator_symbol(f: BoundaryFunction, g: BoundaryFunction) -> BoundaryFunction:
    """z f g' + 1/2 (z f)' g."""
    zf = _zmul(f)
    return zf * g.derivative() + 0.5 * (zf.derivative() * g)


def fermion_commutator_residual(f: BoundaryFunction, g: BoundaryFunction, space: FockSpace) -> dict:
    """Residuals of
        L(f) a(g) = a(g) L(f) - a(z f g' + 1/2 (z f)' g)
        L(f) a(g)^* = a(g)^* L(f) + a(z fbar g' + 1/2 (z fbar)' g)^*
    on the window where every truncated product is exact."""
    Lf = _smear_matrix(f, space)
    a_g = car_annihilator(g, space).matrix
    as_g = car_creator(g, space).matrix
    h = commutator_symbol(f, g)
    hs = commutator_symbol(f.pointwise_conj(), g)
    a_h = car_annihilator(h, space).matrix
    as_hs = car_creator(hs, space).matrix
    raise_L = 2 * max((-n for n, _ in f.items()), default=0)
    raise_a = max(2 * max((-n for n, _ in g.items()), default=0) - 1, 2 * max((n for n, _ in g.items()), default=0) + 1)
    # each product is exact once its first factor stays inside the cutoff;
    # output components above the cutoff are discarded on both sides alike
    w2 = space.cutoff2 - max(raise_L, raise_a, 0)
    if w2 < 0:
        raise ExactnessError("cutoff too small for the requested bands")
    idx = space.window(w2)

    def res(m):
        blk = m[:, idx]
        return float(abs(blk).max()) if blk.nnz else 0.0

    return {"unstarred": res(Lf @ a_g - a_g @ Lf + a_h),
            "starred": res(Lf @ as_g - as_g @ Lf - as_hs),
            "window": w2 / 2}


# Virasoro relations ----------------------------------------------------------------
def virasoro_bracket_residuals(space: FockSpace, max_mode: int = 3, central_charge: float = 1.0) -> dict:
    """Max residual of [L_m, L_n] - (m-n) L_{m+n} - c/12 (m^3-m) delta_{m,-n}
    over |m|, |n| <= max_mode, each on its exactness window."""
    N2 = space.cutoff2
    out = {}
    for m in range(-max_mode, max_mode + 1):
        for n in range(-max_mode, max_mode + 1):
            w = min(exact_window(N2, [-2 * m, -2 * n]), exact_window(N2, [-2 * n, -2 * m]),
                    exact_window(N2, [-2 * (m + n)]))
            if w < 0:
                continue
            idx = space.window(w)
            Lm, Ln = virasoro_matrix(m, space), virasoro_matrix(n, space)
            r = (Lm @ Ln - Ln @ Lm)[:, idx].toarray()
            if abs(m + n) <= N2 // 2:
                r -= (m - n) * virasoro_matrix(m + n, space)[:, idx].toarray()
            if m == -n:
                r[idx, np.arange(idx.size)] -= central_charge / 12 * (m ** 3 - m)
            out[(m, n)] = (float(np.abs(r).max(initial=0)), w / 2)
    return out
