"""Truncated charged free-fermion Fock space.

Basis states are sorted tuples of occupied modes ``m``.  A mode ``m >= 0`` is a
particle, created by ``a(z^m)*``; a mode ``m < 0`` is a hole, created by
``a(z^m)``.  The vector attached to a tuple with holes ``J`` and particles
``I`` is ``a(e_J) a(e_I)^* Omega`` where ``a(e_I)^*`` is the adjoint of the
ordered product ``a(e_i1)...a(e_in)``.  Reading that word left to right gives
the *word order*: holes ascending, then particles descending.

Energies are kept doubled (``energy2``) so they stay integers.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .boundary import BoundaryFunction

State = tuple

MAX_DIM = 250_000


class CapacityError(RuntimeError):
    pass


def mode_energy2(m: int) -> int:
    return abs(2 * m + 1)


def energy2(state: State) -> int:
    return sum(abs(2 * m + 1) for m in state)


def parity(state: State) -> int:
    return len(state) & 1


def split(state: State):
    """(I, J): particles and holes, both ascending."""
    return tuple(m for m in state if m >= 0), tuple(m for m in state if m < 0)


def _preceding(state: State, m: int) -> int:
    # number of occupied modes left of slot m in word order
    if m < 0:
        return sum(1 for j in state if j < m)
    return sum(1 for j in state if j < 0 or j > m)


def create(state: State, m: int):
    """Unified creator c^dag_m on a basis state; returns (sign, new) or None."""
    if m in state:
        return None
    sign = -1 if _preceding(state, m) & 1 else 1
    return sign, tuple(sorted(state + (m,)))


def annihilate(state: State, m: int):
    if m not in state:
        return None
    sign = -1 if _preceding(state, m) & 1 else 1
    return sign, tuple(j for j in state if j != m)


def apply_a(state: State, n: int, dagger: bool = False):
    """a(z^n) (or its adjoint) on a basis state."""
    creating = (n < 0) != dagger
    return create(state, n) if creating else annihilate(state, n)


# dict vectors -------------------------------------------------------------
def vec_add(acc: dict, vec: dict, scale=1.0):
    for k, v in vec.items():
        acc[k] = acc.get(k, 0) + scale * v
    return acc


def vec_clean(vec: dict, tol: float = 0.0) -> dict:
    return {k: v for k, v in vec.items() if abs(v) > tol}


def apply_a_vec(vec: dict, n: int, dagger: bool = False, coeff=1.0, max_e2=None) -> dict:
    out: dict = {}
    for s, c in vec.items():
        r = apply_a(s, n, dagger)
        if r is None:
            continue
        sign, t = r
        if max_e2 is not None and energy2(t) > max_e2:
            continue
        out[t] = out.get(t, 0) + sign * coeff * c
    return out


def apply_field_vec(vec: dict, f: BoundaryFunction, dagger: bool = False, max_e2=None) -> dict:
    """a(f) or a(f)* on a dict vector; a(f) is linear, a(f)* antilinear in f."""
    out: dict = {}
    for n, c in f.items():
        vec_add(out, apply_a_vec(vec, n, dagger, np.conj(c) if dagger else c, max_e2))
    return out


# basis enumeration ----------------------------------------------------------
def character(N2: int) -> list:
    """Level dimensions for energies 0, 1/2, ..., N2/2 from the product formula."""
    poly = np.zeros(N2 + 1, dtype=object)
    poly[0] = 1
    for e in range(1, N2 + 1, 2):  # doubled mode energies
        for _ in range(2):  # one particle and one hole at each energy
            poly[e:] = poly[e:] + poly[: N2 + 1 - e]
    return [int(x) for x in poly]


def _subsets(energies: list, budget: int):
    # all subsets of the mode list with total doubled energy <= budget
    out = [((), 0)]
    for m, e in energies:
        if e > budget:
            break
        out += [(s + (m,), tot + e) for s, tot in out if tot + e <= budget]
    return out


@dataclass(frozen=True, eq=False)
class FockSpace:
    cutoff2: int
    states: tuple = field(repr=False)

    @property
    def cutoff(self) -> float:
        return self.cutoff2 / 2

    @property
    def dim(self) -> int:
        return len(self.states)

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def energies2(self) -> np.ndarray:
        return np.array([energy2(s) for s in self.states], dtype=int)

    @cached_property
    def parities(self) -> np.ndarray:
        return np.array([len(s) & 1 for s in self.states], dtype=int)

    def level_dims(self) -> list:
        return np.bincount(self.energies2, minlength=self.cutoff2 + 1).tolist()

    def window(self, max_e2: int) -> np.ndarray:
        return np.flatnonzero(self.energies2 <= max_e2)

    def vector(self, vec: dict) -> np.ndarray:
        out = np.zeros(self.dim, complex)
        for s, c in vec.items():
            i = self.index.get(s)
            if i is not None:
                out[i] += c
        return out

    def as_dict(self, arr, tol: float = 0.0) -> dict:
        return {self.states[i]: complex(arr[i]) for i in np.flatnonzero(np.abs(arr) > tol)}

    def basis_vector(self, state) -> np.ndarray:
        out = np.zeros(self.dim, complex)
        out[self.index[tuple(state)]] = 1
        return out

    def mode_matrix(self, n: int, dagger: bool = False) -> sp.csr_matrix:
        key = (n, dagger)
        cache = self.__dict__.setdefault("_modes", {})
        if key not in cache:
            rows, cols, vals = [], [], []
            for j, s in enumerate(self.states):
                r = apply_a(s, n, dagger)
                if r is None:
                    continue
                i = self.index.get(r[1])
                if i is not None:
                    rows.append(i)
                    cols.append(j)
                    vals.append(r[0])
            cache[key] = sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(self.dim, self.dim))
        return cache[key]


def enumerate_basis(N: float, max_dim: int = MAX_DIM) -> FockSpace:
    N2 = int(round(2 * N))
    if N2 < 0 or abs(N2 - 2 * N) > 1e-9:
        raise ValueError(f"cutoff must be a nonnegative half-integer, got {N}")
    total = sum(character(N2))
    if total > max_dim:
        raise CapacityError(f"cutoff {N} needs {total} basis states (limit {max_dim})")
    k_max = N2 // 2 + 1
    parts = _subsets([(i, 2 * i + 1) for i in range(k_max)], N2)
    holes = _subsets([(-i - 1, 2 * i + 1) for i in range(k_max)], N2)
    states = []
    for I, eI in parts:
        for J, eJ in holes:
            if eI + eJ <= N2:
                states.append((eI + eJ, tuple(sorted(I)), tuple(sorted(J))))
    states.sort()
    return FockSpace(N2, tuple(tuple(sorted(J + I)) for _, I, J in states))


# operators --------------------------------------------------------------------
PARITIES = ("even", "odd", "mixed")


@dataclass(frozen=True, eq=False)
class SparseOperator:
    matrix: sp.csr_matrix
    rows: object  # FockSpace or TensorSpace
    cols: object
    parity: str = "mixed"

    def __post_init__(self):
        object.__setattr__(self, "matrix", sp.csr_matrix(self.matrix))

    @property
    def shape(self):
        return self.matrix.shape

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T.tocsr(), self.cols, self.rows, self.parity)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.matrix @ other.matrix, self.rows, other.cols,
                                  _parity_mul(self.parity, other.parity))
        return self.matrix @ other

    def __add__(self, other):
        par = self.parity if self.parity == other.parity else "mixed"
        return SparseOperator(self.matrix + other.matrix, self.rows, self.cols, par)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, scalar):
        return SparseOperator(self.matrix * scalar, self.rows, self.cols, self.parity)

    __rmul__ = __mul__

    def block(self, row_e2: int, col_e2: int) -> np.ndarray:
        """Dense block between energy windows."""
        r = self.rows.window(row_e2)
        c = self.cols.window(col_e2)
        return self.matrix[r][:, c].toarray()

    def detect_parity(self, tol: float = 0.0) -> str:
        coo = self.matrix.tocoo()
        mask = np.abs(coo.data) > tol
        flips = self.rows.parities[coo.row[mask]] ^ self.cols.parities[coo.col[mask]]
        if flips.size == 0 or not flips.any():
            return "even"
        return "odd" if flips.all() else "mixed"

    def energy_shifts2(self, tol: float = 0.0) -> set:
        coo = self.matrix.tocoo()
        mask = np.abs(coo.data) > tol
        return set((self.rows.energies2[coo.row[mask]] - self.cols.energies2[coo.col[mask]]).tolist())


def _parity_mul(a: str, b: str) -> str:
    if "mixed" in (a, b):
        return "mixed"
    return "even" if a == b else "odd"


def identity(space) -> SparseOperator:
    return SparseOperator(sp.identity(space.dim, complex, format="csr"), space, space, "even")


def car_annihilator(f: BoundaryFunction, space: FockSpace) -> SparseOperator:
    """Matrix of a(f) = sum_n f_n a(z^n) on the truncated space."""
    mat = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for n, c in f.items():
        mat = mat + c * space.mode_matrix(n)
    return SparseOperator(mat, space, space, "odd")


def car_creator(f: BoundaryFunction, space: FockSpace) -> SparseOperator:
    return car_annihilator(f, space).adjoint()


def grading(space) -> SparseOperator:
    return SparseOperator(sp.diags(1.0 - 2.0 * space.parities).astype(complex).tocsr(), space, space, "even")


def l0_diagonal(space: FockSpace) -> SparseOperator:
    return SparseOperator(sp.diags(space.energies2 / 2.0).astype(complex).tocsr(), space, space, "even")


def exact_window(cutoff2: int, shifts2) -> int:
    """Largest input energy (doubled) for which a product of operators with the
    given energy shifts (rightmost applied first) never leaves the cutoff."""
    peak = run = 0
    for s in reversed(list(shifts2)):
        run += s
        peak = max(peak, run)
    return cutoff2 - peak


def anticommutator_residuals(space: FockSpace, band: int) -> dict:
    """Max residuals of the CAR on exactness windows, over all mode pairs."""
    worst = {"a_astar": 0.0, "a_a": 0.0}
    N2 = space.cutoff2
    for m in range(-band, band + 1):
        A = space.mode_matrix(m)
        sA = -(2 * m + 1)
        for n in range(-band, band + 1):
            B = space.mode_matrix(n)
            sB = -(2 * n + 1)
            Bs = space.mode_matrix(n, True)
            w = min(exact_window(N2, [sA, -sB]), exact_window(N2, [-sB, sA]))
            if w >= 0:
                idx = space.window(w)
                r = (A @ Bs + Bs @ A)[:, idx].toarray()
                if m == n:
                    r[idx, np.arange(idx.size)] -= 1
                worst["a_astar"] = max(worst["a_astar"], float(np.abs(r).max(initial=0)))
            w = min(exact_window(N2, [sA, sB]), exact_window(N2, [sB, sA]))
            if w >= 0:
                idx = space.window(w)
                r = (A @ B + B @ A)[:, idx]
                worst["a_a"] = max(worst["a_a"], float(abs(r).max()) if r.nnz else 0.0)
    return worst


# tensor products ----------------------------------------------------------
@dataclass(frozen=True, eq=False)
class TensorSpace:
    """Pairs of basis states of total energy at most the cutoff."""
    factor: FockSpace
    cutoff2: int
    pairs: tuple = field(repr=False)

    @property
    def dim(self):
        return len(self.pairs)

    @cached_property
    def index(self):
        return {p: i for i, p in enumerate(self.pairs)}

    @cached_property
    def energies2(self):
        return np.array([energy2(a) + energy2(b) for a, b in self.pairs], dtype=int)

    @cached_property
    def parities(self):
        return np.array([(len(a) + len(b)) & 1 for a, b in self.pairs], dtype=int)

    def window(self, max_e2: int) -> np.ndarray:
        return np.flatnonzero(self.energies2 <= max_e2)

    def vector(self, vec: dict) -> np.ndarray:
        out = np.zeros(self.dim, complex)
        for p, c in vec.items():
            i = self.index.get(p)
            if i is not None:
                out[i] += c
        return out


def tensor_space(factor: FockSpace, N: float | None = None) -> TensorSpace:
    N2 = factor.cutoff2 if N is None else int(round(2 * N))
    pairs = [(a, b) for a in factor.states for b in factor.states if energy2(a) + energy2(b) <= N2]
    pairs.sort(key=lambda p: (energy2(p[0]) + energy2(p[1]), factor.index[p[0]], factor.index[p[1]]))
    return TensorSpace(factor, N2, tuple(pairs))


def tensor_apply(pair_vec: dict, slot: int, n: int, dagger: bool = False, coeff=1.0) -> dict:
    """a(h) x 1 (slot 0) or Gamma x a(k) (slot 1) with h, k = z^n, on pair vectors."""
    out: dict = {}
    for (a, b), c in pair_vec.items():
        if slot == 0:
            r = apply_a(a, n, dagger)
            if r is not None:
                key = (r[1], b)
                out[key] = out.get(key, 0) + r[0] * coeff * c
        else:
            r = apply_a(b, n, dagger)
            if r is not None:
                key = (a, r[1])
                sign = r[0] * (-1 if len(a) & 1 else 1)
                out[key] = out.get(key, 0) + sign * coeff * c
    return out


def tensor_car(h: BoundaryFunction | None, k: BoundaryFunction | None, tspace: TensorSpace,
               dagger: bool = False) -> SparseOperator:
    """Matrix of a(h) x 1 + Gamma x a(k) (or its adjoint) on a tensor space."""
    rows, cols, vals = [], [], []
    for slot, f in ((0, h), (1, k)):
        if f is None:
            continue
        for n, c in f.items():
            cc = np.conj(c) if dagger else c
            for j, p in enumerate(tspace.pairs):
                for key, v in tensor_apply({p: 1.0}, slot, n, dagger, cc).items():
                    i = tspace.index.get(key)
                    if i is not None:
                        rows.append(i)
                        cols.append(j)
                        vals.append(v)
    mat = sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(tspace.dim, tspace.dim))
    return SparseOperator(mat, tspace, tspace, "odd")


def tensor_grading_left(tspace: TensorSpace) -> np.ndarray:
    return np.array([-1.0 if len(a) & 1 else 1.0 for a, _ in tspace.pairs])


def doubled_mode(i: int):
    """Interleaved basis of H + H compatible with p + p: index -> (copy, m)."""
    if i >= 0:
        return i % 2, i // 2
    return (0, (i - 1) // 2) if i % 2 else (1, i // 2)


def _doubled_word(state: State):
    holes = [i for i in state if i < 0]
    parts = sorted((i for i in state if i >= 0), reverse=True)
    return holes + parts


def tensor_factorize(N: float) -> dict:
    """Map basis states of the doubled Fock space (interleaved indices) to
    signed pairs of single-copy states via a(h + k) -> a(h) x 1 + Gamma x a(k).

    Returns ``{doubled_state: (sign, (state1, state2))}`` for total energy <= N.
    """
    N2 = int(round(2 * N))
    k_max = N2 // 2 + 1
    modes = []
    for m in range(k_max):
        modes += [(2 * m, 2 * m + 1), (2 * m + 1, 2 * m + 1)]
        modes += [(2 * (-m - 1) + 1, 2 * m + 1), (2 * (-m - 1), 2 * m + 1)]
    modes.sort(key=lambda x: x[1])
    out = {}
    for st, e in _subsets(modes, N2):
        state = tuple(sorted(st))
        vec = {((), ()): 1.0}
        for i in reversed(_doubled_word(state)):
            copy, m = doubled_mode(i)
            vec = tensor_apply(vec, copy, m, dagger=(m >= 0))
        (pair, sign), = vec.items()
        out[state] = (int(round(sign.real)), pair)
    return out


# binary container -----------------------------------------------------------
_MAGIC = b"DGCF"
_HEADER = struct.Struct("<4sIqqqBi")
_TRIPLET = np.dtype([("row", "<i8"), ("col", "<i8"), ("val", "<c16")])


def save_operator(path, op: SparseOperator, cutoff2: int = -1):
    """Little-endian layout: magic, version u32, rows i64, cols i64, nnz i64,
    parity u8 (0 even, 1 odd, 2 mixed), cutoff2 i32, then nnz (row, col, value)."""
    coo = op.matrix.tocoo()
    arr = np.empty(coo.nnz, _TRIPLET)
    arr["row"], arr["col"], arr["val"] = coo.row, coo.col, coo.data
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, op.shape[0], op.shape[1], coo.nnz,
                              PARITIES.index(op.parity), cutoff2))
        fh.write(arr.tobytes())


def load_operator(path, rows=None, cols=None) -> tuple:
    with open(path, "rb") as fh:
        magic, version, nr, nc, nnz, par, cutoff2 = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC or version != 1:
            raise ValueError(f"{path}: not an operator container")
        arr = np.frombuffer(fh.read(nnz * _TRIPLET.itemsize), _TRIPLET)
    mat = sp.csr_matrix((arr["val"], (arr["row"], arr["col"])), shape=(nr, nc))
    return SparseOperator(mat, rows, cols, PARITIES[par]), cutoff2
