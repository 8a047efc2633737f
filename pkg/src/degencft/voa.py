"""Free-fermion vertex superalgebra on the Fock space.

The generating fields are

    Y(a(1)^* Omega, x)   = sum_n a(z^(-n-1))^* x^(-n-1)   ("psi*")
    Y(a(z^-1) Omega, x)  = sum_n a(z^n) x^(-n-1)          ("psi")

Every basis state is a product of negative modes of these two fields applied
to the vacuum, so the modes of an arbitrary state follow from the Borcherds
product formula by recursion on the word length.  All mode computations act on
untruncated dict vectors; truncation only happens when a matrix is assembled.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import fock
from .fock import FockSpace, SparseOperator, TensorSpace, energy2, vec_add, vec_clean

PSI_STAR = "psi*"
PSI = "psi"


@dataclass(frozen=True, eq=False)
class VoaState:
    vector: dict

    @classmethod
    def basis(cls, state) -> "VoaState":
        return cls({tuple(state): 1.0})

    @property
    def parity(self):
        ps = {len(s) & 1 for s, c in self.vector.items() if c != 0}
        return ps.pop() if len(ps) == 1 else (0 if not ps else None)

    @property
    def weight(self):
        """Common L0 eigenvalue, or None if inhomogeneous."""
        es = {energy2(s) for s, c in self.vector.items() if c != 0}
        return es.pop() / 2 if len(es) == 1 else (0.0 if not es else None)

    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.vector.values()))

    def to_array(self, space: FockSpace) -> np.ndarray:
        return space.vector(self.vector)

    def __add__(self, other):
        return VoaState(vec_add(dict(self.vector), _vec(other)))

    def __mul__(self, scalar):
        return VoaState({k: scalar * v for k, v in self.vector.items()})

    __rmul__ = __mul__


VACUUM = VoaState({(): 1.0})


def _vec(x) -> dict:
    return x.vector if isinstance(x, VoaState) else x


def inner(u, v) -> complex:
    """<u, v>, linear in the first slot."""
    u, v = _vec(u), _vec(v)
    return complex(sum(c * np.conj(v[s]) for s, c in u.items() if s in v))


def conformal_vector() -> VoaState:
    # 1/2 (a(z^-2) a(1)^* + a(z)^* a(z^-1)) Omega in the word-ordered basis
    return VoaState({(-2, 0): 0.5, (-1, 1): -0.5})


# generator modes ----------------------------------------------------------
def _gen_to_a(which: str, n: int):
    # (index of z, dagger)
    return (-n - 1, True) if which == PSI_STAR else (n, False)


def gen_apply(vec: dict, which: str, n: int, coeff=1.0) -> dict:
    k, dag = _gen_to_a(which, n)
    return fock.apply_a_vec(vec, k, dag, coeff)


def word(state) -> list:
    """Generator modes (which, n) whose left-to-right product on Omega gives the state."""
    holes = [m for m in state if m < 0]
    parts = sorted((m for m in state if m >= 0), reverse=True)
    return [(PSI, m) for m in holes] + [(PSI_STAR, -m - 1) for m in parts]


def binom(n: int, j: int) -> int:
    """C(n, j) for any integer n via the falling factorial."""
    if j < 0:
        return 0
    if n >= 0:
        return math.comb(n, j)
    return (-1) ** j * math.comb(-n + j - 1, j)


class ModeRecursionError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def _mode_basis(state: tuple, n: int, c: tuple) -> tuple:
    """state_(n) applied to the basis vector c, as a frozen tuple of items."""
    return tuple(_mode_basis_dict(state, n, c).items())


def _mode_basis_dict(state: tuple, n: int, c: tuple) -> dict:
    if not state:
        return {c: 1.0} if n == -1 else {}
    e2c = energy2(c)
    e2s = energy2(state)
    if e2c + e2s - 2 * n - 2 < 0:
        return {}
    which, k0 = word(state)[0]
    lead = k0 if which == PSI else -k0 - 1
    rest = tuple(m for m in state if m != lead)
    if len(rest) != len(state) - 1:
        raise ModeRecursionError(f"cannot peel leading generator off {state}")
    pb = len(rest) & 1
    e2b = energy2(rest)
    sign2 = -((-1) ** (pb + k0))  # -(-1)^(p(g)p(b)+k0) with p(g) = 1
    out: dict = {}
    # first sum: b_(n+j) c is zero once the shift drives energy negative
    j1 = (e2c + e2b - 2 * n - 2) // 2
    # second sum: g_(j) c = 0 for j + 1/2 > E(c)
    j2 = (e2c - 1) // 2
    for j in range(0, max(j1, j2) + 1):
        cb = (-1) ** j * binom(k0, j)
        if j <= j1:
            bc = _mode_basis(rest, n + j, c)
            if bc:
                vec_add(out, gen_apply(dict(bc), which, k0 - j), cb)
        if j <= j2:
            gc = gen_apply({c: 1.0}, which, j)
            for s, v in gc.items():
                vec_add(out, dict(_mode_basis(rest, k0 + n - j, s)), cb * sign2 * v)
    return vec_clean(out, 0.0)


def mode_apply(a, n: int, v) -> dict:
    """a_(n) v on dict vectors (exact, untruncated)."""
    out: dict = {}
    for s, ca in _vec(a).items():
        if ca == 0:
            continue
        for c, cv in _vec(v).items():
            if cv == 0:
                continue
            for t, x in _mode_basis(s, n, c):
                out[t] = out.get(t, 0) + ca * cv * x
    return out


@dataclass(frozen=True, eq=False)
class ModeOperator:
    op: SparseOperator
    mode_index: int
    source: VoaState
    energy_shift: float | None

    @property
    def matrix(self):
        return self.op.matrix


def _assemble(space: FockSpace, column) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for j, c in enumerate(space.states):
        for t, x in column(c).items():
            i = space.index.get(t)
            if i is not None and x != 0:
                rows.append(i)
                cols.append(j)
                vals.append(x)
    return sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(space.dim, space.dim))


def mode(a, n: int, space: FockSpace) -> ModeOperator:
    a = a if isinstance(a, VoaState) else VoaState(a)
    mat = _assemble(space, lambda c: mode_apply(a, n, {c: 1.0}))
    par = {0: "even", 1: "odd", None: "mixed"}[a.parity]
    wt = a.weight
    return ModeOperator(SparseOperator(mat, space, space, par), n, a,
                        None if wt is None else wt - n - 1)


def generator_mode(which: str, n: int, space: FockSpace) -> ModeOperator:
    k, dag = _gen_to_a(which, n)
    src = VoaState({(0,): 1.0}) if which == PSI_STAR else VoaState({(-1,): 1.0})
    return ModeOperator(SparseOperator(space.mode_matrix(k, dag), space, space, "odd"),
                        n, src, -n - 0.5)


def virasoro_apply(n: int, v) -> dict:
    return mode_apply(conformal_vector(), n + 1, v)


def virasoro_mode(n: int, space: FockSpace) -> ModeOperator:
    return mode(conformal_vector(), n + 1, space)


# vertex operators ---------------------------------------------------------
class DomainError(ValueError):
    pass


def vertex_apply(a, w: complex, v, out_cutoff: float, check_domain: bool = True,
                 only_e2=None) -> VoaState:
    """Y(a, w) v = sum_n a_(n) v w^(-n-1), keeping output energies <= out_cutoff.

    At a fixed output energy only one mode of a homogeneous component
    contributes, so the sum is finite and exact for every retained component.
    """
    if check_domain and not 0 < abs(w) < 1:
        raise DomainError(f"vertex operator evaluated at |w| = {abs(w)}; need 0 < |w| < 1")
    out2 = int(round(2 * out_cutoff))
    out: dict = {}
    for s, ca in _vec(a).items():
        if ca == 0:
            continue
        e2s = energy2(s)
        for c, cv in _vec(v).items():
            if cv == 0:
                continue
            e2 = e2s + energy2(c)
            # output energy (doubled) is e2 - 2n - 2
            n_hi = (e2 - 2) // 2
            n_lo = -((out2 - e2 + 2) // 2)
            for n in range(n_lo, n_hi + 1):
                t2 = e2 - 2 * n - 2
                if t2 > out2 or (only_e2 is not None and t2 not in only_e2):
                    continue
                scale = ca * cv * w ** (-n - 1)
                for t, x in _mode_basis(s, n, c):
                    out[t] = out.get(t, 0) + scale * x
    return VoaState(out)


def l0_scale(v, s: float) -> dict:
    """s^{L0} on a dict vector."""
    return {k: c * s ** (energy2(k) / 2) for k, c in _vec(v).items()}


# PCT ------------------------------------------------------------------------
def _pct_basis(state: tuple) -> dict:
    # theta(a(g1)..a(gm) a(f1)*..a(fn)* Omega) = a(jg1)*..a(jgm)* a(jf1)..a(jfn) Omega,
    # with j z^k = -z^(-k-1); the word of the state supplies g's and f's
    ops = []
    for which, n in word(state):
        if which == PSI:  # a(z^n): g = z^n, becomes a(j z^n)^* = -a(z^(-n-1))^*
            ops.append((-n - 1, True))
        else:  # a(z^k)^* with k = -n-1: f = z^k, becomes a(j z^k) = -a(z^(-k-1))
            k = -n - 1
            ops.append((-k - 1, False))
    vec = {(): 1.0}
    for k, dag in reversed(ops):
        vec = fock.apply_a_vec(vec, k, dag, -1.0)
    return vec


def pct(v) -> VoaState:
    """Antilinear PCT operator theta."""
    out: dict = {}
    for s, c in _vec(v).items():
        vec_add(out, _pct_basis(s), np.conj(c))
    return VoaState(out)


# invariant bilinear form ----------------------------------------------------------
def exp_l1(v, x: float) -> dict:
    """e^{x L1} v by the finite nilpotent series."""
    out = dict(_vec(v))
    term = dict(_vec(v))
    k = 0
    while term:
        k += 1
        term = {s: c * x / k for s, c in virasoro_apply(1, term).items()}
        term = vec_clean(term)
        vec_add(out, term)
    return out


def pct_phase(weight: float, sign: int = +1) -> complex:
    """(-1)^{L0 + 2 sign L0^2} on weight ``weight``, as e^{i pi (D + 2 sign D^2)}."""
    return cmath.exp(1j * math.pi * (weight + 2 * sign * weight ** 2))


def invariance_check(a, b, c, x: float, convention: int = +1) -> float:
    """|<a, Y(theta b, x) c> - <Y(e^{x L1} (-1)^{L0+2L0^2} x^{-2 L0} b, 1/x) a, c>|."""
    a, b, c = _vec(a), _vec(b), _vec(c)
    e2a = {energy2(s) for s in a}
    e2c = {energy2(s) for s in c}
    big = max(e2a | e2c | {0}) / 2 + max((energy2(s) for s in b), default=0) / 2 + 1
    lhs = inner(a, vertex_apply(pct(b), x, c, big, check_domain=False, only_e2=e2a))
    bb = {s: v * pct_phase(energy2(s) / 2, convention) * x ** (-energy2(s)) for s, v in b.items()}
    bb = exp_l1(bb, x)
    rhs = inner(vertex_apply(bb, 1 / x, a, big, check_domain=False, only_e2=e2c), c)
    return abs(lhs - rhs)


# graded tensor products -----------------------------------------------------------
def tensor_mode_apply(a1, a2, n: int, pair_vec: dict) -> dict:
    """(a1 (x) a2)_(n) = sum_k a1_(k) Gamma^{p(a2)} (x) a2_(n-k-1) on pair vectors."""
    a1, a2 = _vec(a1), _vec(a2)
    out: dict = {}
    for s2, c2 in a2.items():
        p2 = len(s2) & 1
        e2s2 = energy2(s2)
        for s1, c1 in a1.items():
            e2s1 = energy2(s1)
            for (u, v), cv in pair_vec.items():
                gam = -1 if (p2 and len(u) & 1) else 1
                eu, ev = energy2(u), energy2(v)
                k_hi = (eu + e2s1 - 2) // 2
                # a2_(l) v needs l <= (ev + e2s2 - 2)/2 with l = n - k - 1
                k_lo = n - 1 - (ev + e2s2 - 2) // 2
                for k in range(k_lo, k_hi + 1):
                    left = _mode_basis(s1, k, u)
                    if not left:
                        continue
                    right = _mode_basis(s2, n - k - 1, v)
                    for t1, x1 in left:
                        for t2, x2 in right:
                            key = (t1, t2)
                            out[key] = out.get(key, 0) + gam * c1 * c2 * cv * x1 * x2
    return out


def tensor_mode(a1, a2, n: int, tspace: TensorSpace) -> ModeOperator:
    rows, cols, vals = [], [], []
    for j, p in enumerate(tspace.pairs):
        for key, x in tensor_mode_apply(a1, a2, n, {p: 1.0}).items():
            i = tspace.index.get(key)
            if i is not None and x != 0:
                rows.append(i)
                cols.append(j)
                vals.append(x)
    mat = sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(tspace.dim, tspace.dim))
    p1 = VoaState(_vec(a1)).parity
    p2 = VoaState(_vec(a2)).parity
    par = "mixed" if None in (p1, p2) else ("odd" if (p1 + p2) & 1 else "even")
    return ModeOperator(SparseOperator(mat, tspace, tspace, par), n,
                        VoaState({}), None)


def random_homogeneous(rng, space: FockSpace, e2: int, par: int, density: float = 1.0) -> VoaState:
    """Random complex combination of basis states with given doubled weight and parity."""
    cand = [s for s in space.states if energy2(s) == e2 and (len(s) & 1) == par]
    if not cand:
        raise ValueError(f"no states of weight {e2 / 2} and parity {par}")
    vec = {}
    for s in cand:
        if rng.random() <= density or not vec:
            vec[s] = complex(rng.normal(), rng.normal())
    return VoaState(vec)


# Borcherds identities ------------------------------------------------------------
def _sub(u: dict, v: dict) -> float:
    d = dict(u)
    vec_add(d, v, -1.0)
    return max((abs(x) for x in d.values()), default=0.0)


def _wt2(a) -> int:
    es = {energy2(s) for s, c in _vec(a).items() if c != 0}
    if len(es) > 1:
        raise ValueError("Borcherds check needs homogeneous states")
    return es.pop() if es else 0


def _par(a) -> int:
    p = VoaState(_vec(a)).parity
    if p is None:
        raise ValueError("Borcherds check needs states of definite parity")
    return p


def commutator_formula_residual(a, b, c, m: int, k: int) -> float:
    """[a_(m), b_(k)] c = sum_{j >= 0} C(m, j) (a_(j) b)_(m+k-j) c, graded bracket."""
    sign = (-1) ** (_par(a) * _par(b))
    lhs = dict(mode_apply(a, m, mode_apply(b, k, c)))
    vec_add(lhs, mode_apply(b, k, mode_apply(a, m, c)), -sign)
    rhs: dict = {}
    # a_(j) b = 0 once j + 1 > wt a + wt b
    for j in range(0, (_wt2(a) + _wt2(b)) // 2 + 1):
        ab = mode_apply(a, j, b)
        if ab:
            vec_add(rhs, mode_apply(ab, m + k - j, c), binom(m, j))
    return _sub(lhs, rhs)


def product_formula_residual(a, b, c, n: int, k: int) -> float:
    """(a_(n) b)_(k) c = sum_j (-1)^j C(n, j) (a_(n-j) b_(k+j) c
    - (-1)^{p(a)p(b)+n} b_(n+k-j) a_(j) c)."""
    sign = (-1) ** (_par(a) * _par(b) + n)
    lhs = mode_apply(mode_apply(a, n, b), k, c)
    rhs: dict = {}
    wa, wb, wc = _wt2(a), _wt2(b), _wt2(c)
    # b_(k+j) c = 0 once 2(k+j+1) > wb + wc; a_(j) c = 0 once 2(j+1) > wa + wc
    top = max((wb + wc) // 2 - k, (wa + wc) // 2) + 1
    if n >= 0:
        top = min(top, n)
    for j in range(0, max(top, 0) + 1):
        cb = (-1) ** j * binom(n, j)
        if cb == 0:
            continue
        bc = mode_apply(b, k + j, c)
        if bc:
            vec_add(rhs, mode_apply(a, n - j, bc), cb)
        ac = mode_apply(a, j, c)
        if ac:
            vec_add(rhs, mode_apply(b, n + k - j, ac), -cb * sign)
    return _sub(lhs, rhs)


def borcherds_suite(space: FockSpace, trials: int = 50, seed: int = 0, modes: int = 3) -> dict:
    """Worst commutator/product residuals over random homogeneous triples in the space."""
    rng = np.random.default_rng(seed)
    levels = sorted({(energy2(s), len(s) & 1) for s in space.states})
    worst = {"commutator": 0.0, "product": 0.0}
    for _ in range(trials):
        trip = []
        for _ in range(3):
            e2, par = levels[rng.integers(len(levels))]
            trip.append(random_homogeneous(rng, space, e2, par).vector)
        a, b, c = trip
        m, k = (int(x) for x in rng.integers(-modes, modes + 1, size=2))
        scale = max(1.0, VoaState(a).norm() * VoaState(b).norm() * VoaState(c).norm())
        worst["commutator"] = max(worst["commutator"], commutator_formula_residual(a, b, c, m, k) / scale)
        worst["product"] = max(worst["product"], product_formula_residual(a, b, c, m, k) / scale)
    return worst
