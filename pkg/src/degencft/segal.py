"""Operators attached to degenerate annuli and pairs of pants.

The pants ``X = D minus (w + sD) minus phi_t(D)`` carries
``T(xi (x) eta) = Y(s^{L0} xi, w) e^{-t L(rho)} eta``.  Inputs live on pairs
of total energy at most ``N``; the first slot is the small disk, the second
the semigroup hole.  Every retained output component is exact: ``e^{-tL}``
lowers energy and each output energy of ``Y`` picks out a single mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

from . import geometry
from .boundary import BoundaryFunction, circle_points, conj_c, from_samples
from .fock import (FockSpace, SparseOperator, TensorSpace, energy2, enumerate_basis, tensor_car,
                   tensor_space)
from .virasoro import exp_semigroup, germ_min_re
from .voa import vertex_apply


class SurfaceGeometryError(ValueError):
    pass


class ExpansionDomainError(ValueError):
    pass


# surfaces -----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DegenerateSurface:
    germ: geometry.SemigroupGerm
    t: float
    kind: str = "pants"
    w: complex = 0j
    s: float = 0.0
    params: dict = field(default_factory=dict)

    def check(self, grid: int = 256) -> None:
        if self.t <= 0:
            raise SurfaceGeometryError("t must be positive")
        if self.kind == "annulus":
            return
        if self.kind != "pants":
            raise SurfaceGeometryError(f"unknown surface kind {self.kind!r}")
        if self.s <= 0 or abs(self.w) == 0 or self.s + abs(self.w) >= 1:
            raise SurfaceGeometryError(f"need s > 0, w != 0 and s + |w| < 1 (s={self.s}, |w|={abs(self.w)})")
        if self.s >= abs(self.w):
            # the disk must also avoid 0, which lies in phi_t(D)
            raise SurfaceGeometryError("disk w + sD contains 0")
        pts = np.concatenate([[self.w], self.w + self.s * circle_points(grid)])
        if np.any(in_semigroup_image(self.germ, self.t, pts)):
            raise SurfaceGeometryError("disk w + sD meets phi_t(D)")


def in_semigroup_image(germ, t: float, pts, samples: int = 4096) -> np.ndarray:
    """Whether each point lies in phi_t(D), i.e. e^t sigma(p) lies in sigma(D).

    sigma(D) is approximated by the polygon through sigma on a circle of radius
    slightly below one; a crossing-number test decides membership.
    """
    pts = np.atleast_1d(np.asarray(pts, complex))
    poly = germ.sigma(circle_points(samples) * (1 - 1e-6))
    poly = poly[np.isfinite(poly)]
    q = np.exp(t) * germ.sigma(pts)
    x, y = poly.real, poly.imag
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    inside = np.zeros(q.shape, bool)
    for k, p in enumerate(q):
        cond = (y > p.imag) != (y2 > p.imag)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x + (p.imag - y) * (x2 - x) / (y2 - y)
        inside[k] = np.count_nonzero(cond & (p.real < xc)) % 2 == 1
    return inside


def builtin_pants(N: float | None = None) -> DegenerateSurface:
    """Cayley germ, t = 0.5, disk centred at -0.5 with radius 0.15."""
    return DegenerateSurface(geometry.cayley_germ(), 0.5, "pants", -0.5, 0.15)


# Hardy tuples -------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class HardyTuple:
    outer: BoundaryFunction
    inner_disk: BoundaryFunction
    inner_annulus: BoundaryFunction
    source: str
    truncation_error: float = 0.0
    exponent: int | None = None

    def exact_on(self, M: float, N: float) -> bool:
        """Whether the leading mode z^n of the tuple (n = -j for a pole of
        order j at w) keeps a window-M vector inside the cutoff N."""
        return self.exponent is None or M + abs(self.exponent + 0.5) <= N

    def perturbed(self, eps: float = 0.1, n: int = 0) -> "HardyTuple":
        """Tuple with eps z^n added to the disk component (no longer in H^2(X))."""
        return HardyTuple(self.outer, self.inner_disk + BoundaryFunction.monomial(n, coeff=eps),
                          self.inner_annulus, self.source + f" + {eps} z^{n} on the disk",
                          self.truncation_error, self.exponent)


def _truncate(samples: np.ndarray, band: int, wide: int) -> tuple:
    full = from_samples(samples, wide)
    kept = full.with_band(band)
    return kept, float(np.sqrt(max(full.norm() ** 2 - kept.norm() ** 2, 0.0)))


def hardy_tuples(X: DegenerateSurface, degree: int, band: int = 16, samples: int = 1024) -> list:
    """Pullbacks (psi (F o gamma)) of F = z^n, |n| <= degree, and F = (z - w)^-j,
    1 <= j <= degree, to the three boundary circles."""
    if X.kind != "pants":
        raise SurfaceGeometryError("Hardy tuples are built for pants")
    w, s = X.w, X.s
    if s >= abs(w):
        raise ExpansionDomainError(f"s = {s} >= |w| = {abs(w)}: pullbacks of z^-n do not converge")
    z = circle_points(samples)
    wide = samples // 2 - 1
    ph = geometry.phi_t(X.germ, X.t, z)
    root = geometry.sqrt_derivative(geometry.phi_t_prime(X.germ, X.t, z, ph))
    disk = w + s * z
    out = []

    def build(fn, label, exponent=None):
        comps, err = [], 0.0
        for vals in (fn(z), np.sqrt(s) * fn(disk), root * fn(ph)):
            f, e = _truncate(vals, band, wide)
            comps.append(f)
            err = max(err, e)
        out.append(HardyTuple(*comps, label, err, exponent))

    for n in range(-degree, degree + 1):
        build(lambda u, n=n: u ** n, f"z^{n}", n)
    for j in range(1, degree + 1):
        build(lambda u, j=j: (u - w) ** (-j), f"(z - w)^-{j}", -j)
    return out


def laurent_outer_pole(w: complex, j: int, band: int) -> BoundaryFunction:
    """(z - w)^-j on |z| = 1 from the binomial series in w/z."""
    coeffs = {}
    for k in range(band):
        n = -j - k
        if -n > band:
            break
        coeffs[n] = comb(j + k - 1, k) * w ** k
    return BoundaryFunction.from_dict(coeffs, band)


# operators ------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SurfaceOperator:
    matrix: SparseOperator
    R: float
    surface: DegenerateSurface
    certificates: list = field(default_factory=list)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def rows(self) -> FockSpace:
        return self.matrix.rows

    @property
    def cols(self):
        return self.matrix.cols


def _r_scale(space: FockSpace, R: float) -> sp.dia_matrix:
    return sp.diags(float(R) ** (-space.energies2 / 2.0))


def annulus_operator(X: DegenerateSurface, N: float, R: float = 1.0) -> SurfaceOperator:
    if R < 1:
        raise ValueError("R must be at least 1")
    space = enumerate_basis(N)
    E = exp_semigroup(X.germ.rho, X.t, space, min_re=germ_min_re(X.germ)).op.matrix
    mat = (_r_scale(space, R) @ E).tocsr()
    return SurfaceOperator(SparseOperator(mat, space, space, "even"), float(R), X)


def vertex_matrix(space: FockSpace, tspace: TensorSpace, w: complex, s: float) -> sp.csr_matrix:
    """Columns Y(s^{L0} xi, w) c for the basis pairs (xi, c) of the tensor space."""
    cache = space.__dict__.setdefault("_vertex", {})
    key = (complex(w), float(s), tspace.cutoff2)
    if key in cache:
        return cache[key]
    rows, cols, vals = [], [], []
    for j, (xi, c) in enumerate(tspace.pairs):
        scaled = {xi: s ** (energy2(xi) / 2)}
        for t, x in vertex_apply(scaled, w, {c: 1.0}, space.cutoff).vector.items():
            i = space.index.get(t)
            if i is not None and x != 0:
                rows.append(i)
                cols.append(j)
                vals.append(x)
    mat = sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(space.dim, tspace.dim))
    cache[key] = mat
    return mat


def second_slot(tspace: TensorSpace, op: sp.spmatrix) -> sp.csr_matrix:
    """1 (x) op on the tensor space, for an even energy-lowering operator."""
    space = tspace.factor
    op = sp.csr_matrix(op)
    rows, cols, vals = [], [], []
    for j, (a, b) in enumerate(tspace.pairs):
        jb = space.index[b]
        col = op.getcol(jb).tocoo()
        for ib, x in zip(col.row, col.data):
            i = tspace.index.get((a, space.states[ib]))
            if i is not None:
                rows.append(i)
                cols.append(j)
                vals.append(x)
    return sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(tspace.dim, tspace.dim))


def pants_operator(X: DegenerateSurface, N: float, R: float = 1.0, check: bool = True) -> SurfaceOperator:
    """T_R = R^{-L0} Y(s^{L0} . , w) (1 (x) e^{-t L(rho)}) from pairs of total
    energy <= N to F_{<=N}."""
    if R < 1:
        raise ValueError("R must be at least 1")
    if check:
        X.check()
    space = enumerate_basis(N)
    tspace = _tensor_space(space)
    Y = vertex_matrix(space, tspace, X.w, X.s)
    E = exp_semigroup(X.germ.rho, X.t, space, min_re=germ_min_re(X.germ)).op.matrix
    mat = (_r_scale(space, R) @ Y @ second_slot(tspace, E)).tocsr()
    return SurfaceOperator(SparseOperator(mat, space, tspace, "even"), float(R), X)


def _tensor_space(space: FockSpace) -> TensorSpace:
    cache = space.__dict__
    if "_tensor" not in cache:
        cache["_tensor"] = tensor_space(space)
    return cache["_tensor"]


# certificates ------------------------------------------------------------------
@dataclass
class Certificate:
    source: str
    unstarred: float
    starred: float
    truncation_error: float

    @property
    def residual(self) -> float:
        return max(self.unstarred, self.starred)


def _window_block(mat, rows_e2, cols_e2, M2: int) -> np.ndarray:
    r = np.flatnonzero(rows_e2 <= M2)
    c = np.flatnonzero(cols_e2 <= M2)
    return sp.csr_matrix(mat)[r][:, c].toarray()


def commutation_residual(T: SurfaceOperator, tuples, M: float) -> list:
    """Residuals of a(f1) T = T (a(f_disk) (x) 1 + Gamma (x) a(f_ann)) and of the
    same relation with every component replaced by conj(z f) and a by a^*,
    both restricted to inputs and outputs of energy <= M."""
    space, tspace = T.rows, T.cols
    M2 = int(round(2 * M))
    Tm = T.matrix.matrix
    out = []
    for h in tuples:
        res = []
        for dagger in (False, True):
            f1, fd, fa = h.outer, h.inner_disk, h.inner_annulus
            if dagger:
                f1, fd, fa = conj_c(f1), conj_c(fd), conj_c(fa)
            A = _car(f1, space, dagger)
            B = tensor_car(fd, fa, tspace, dagger).matrix
            diff = A @ Tm - Tm @ B
            blk = _window_block(diff, space.energies2, tspace.energies2, M2)
            res.append(float(np.linalg.norm(blk, 2)) if blk.size else 0.0)
        out.append(Certificate(h.source, res[0], res[1], h.truncation_error))
    return out


def _car(f: BoundaryFunction, space: FockSpace, dagger: bool) -> sp.csr_matrix:
    mat = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for n, c in f.items():
        if dagger:
            mat = mat + np.conj(c) * space.mode_matrix(n, True)
        else:
            mat = mat + c * space.mode_matrix(n)
    return mat


# R -> 1 ---------------------------------------------------------------------
@dataclass
class ConvergenceRow:
    R: float
    top_singular_value: float
    probe_deviation: dict


def convergence_study(X: DegenerateSurface, R_schedule, N: float = 4, probes=None, check: bool = True) -> list:
    """Top singular value of T_R and ||(T_R - T_1) v|| for probe pairs v."""
    sched = list(R_schedule)
    if any(b >= a for a, b in zip(sched, sched[1:])) or sched[-1] < 1:
        raise ValueError("R schedule must decrease strictly towards 1")
    T1 = pants_operator(X, N, check=check)
    tspace = T1.cols
    if probes is None:
        probes = [((), ()), ((), (0,)), ((0,), ()), ((-1,), (0,))]
    probes = [p for p in probes if p in tspace.index]
    rows = []
    for R in sched:
        TR = pants_operator(X, N, R, check=False)
        sv = float(np.linalg.norm(TR.toarray(), 2))
        dev = {}
        for p in probes:
            j = tspace.index[p]
            d = (TR.matrix.matrix[:, j] - T1.matrix.matrix[:, j]).toarray()
            dev[p] = float(np.linalg.norm(d))
        rows.append(ConvergenceRow(float(R), sv, dev))
    return rows


def top_singular_values(X: DegenerateSurface, cutoffs, check: bool = True) -> list:
    return [float(np.linalg.norm(pants_operator(X, N, check=check).toarray(), 2)) for N in cutoffs]
