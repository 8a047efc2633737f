"""Implementing operators on the truncated Fock space.

One-particle operators act on the banded space spanned by ``z^n``,
``|n| <= band``, stored as ``(2 band + 1)``-square matrices with row/column
``k`` holding frequency ``k - band`` (the layout of :class:`BoundaryFunction`).
The polarization ``p`` is the projection onto frequencies ``>= 0``; the Fock
basis is compatible with it (particles ``z^m``, ``m >= 0``; holes ``m < 0``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .boundary import BoundaryFunction
from .fock import FockSpace, SparseOperator, car_annihilator, car_creator, enumerate_basis
from .voa import PSI, VoaState, word


class VacuumSolverError(RuntimeError):
    pass


# block maps ---------------------------------------------------------------------
def positive_projection(band: int) -> np.ndarray:
    return np.diag((np.arange(-band, band + 1) >= 0).astype(float))


@dataclass(frozen=True, eq=False)
class BlockMap:
    matrix: np.ndarray
    band: int

    def __post_init__(self):
        m = np.asarray(self.matrix, complex)
        if m.shape != (2 * self.band + 1,) * 2:
            raise ValueError("block map must be square on frequencies [-band, band]")
        object.__setattr__(self, "matrix", m)

    @property
    def p_rank(self) -> int:
        return self.band + 1

    @property
    def q_rank(self) -> int:
        return self.band + 1

    @property
    def _pos(self):
        return np.arange(-self.band, self.band + 1) >= 0

    def block(self, out_pos: bool, in_pos: bool) -> np.ndarray:
        """q r p (True, True), q r (1-p) (True, False), and so on."""
        r = self._pos if out_pos else ~self._pos
        c = self._pos if in_pos else ~self._pos
        return self.matrix[np.ix_(r, c)]

    def column(self, m: int) -> BoundaryFunction:
        return BoundaryFunction(self.matrix[:, m + self.band], self.band)

    @classmethod
    def from_composition(cls, W, Wt=None) -> "BlockMap":
        """W on frequencies >= 0 and cWc on frequencies < 0 (for W given as a
        CompositionMatrix, cWc restricted to the same band)."""
        Wt = Wt or W.tilde()
        b = Wt.band
        Wm = W.restrict(b).entries
        pos = np.arange(-b, b + 1) >= 0
        mat = np.where(pos[None, :], Wm, Wt.entries)
        return cls(mat, b)


def diagonal_expectation(r: BlockMap) -> BlockMap:
    """q r p + (1 - q) r (1 - p)."""
    pos = r._pos
    mask = pos[:, None] == pos[None, :]
    return BlockMap(np.where(mask, r.matrix, 0), r.band)


# admissibility --------------------------------------------------------------------
@dataclass
class AdmissibilityReport:
    offdiag_trace_norm: float
    contraction_part: np.ndarray
    trace_part: np.ndarray
    trace_part_norm: float
    band: int | None
    verdict: str


def _split_block(s: np.ndarray):
    if s.size == 0:
        return s.copy(), s.copy()
    U, sig, Vh = np.linalg.svd(s)
    a = (U * np.minimum(sig, 1.0)) @ Vh
    x = (U * np.maximum(sig - 1.0, 0.0)) @ Vh
    return a, x


def admissible_decompose(r) -> AdmissibilityReport:
    """Split E(r) = a + x with ||a|| <= 1 and x of finite trace norm.

    Each diagonal block s = U diag(sigma) V* is cut at sigma = 1:
    a = U min(sigma, 1) V*, x = U (sigma - 1)_+ V*.  A bare matrix is treated
    as a single diagonal block.
    """
    if not isinstance(r, BlockMap):
        s = np.asarray(r, complex)
        a, x = _split_block(s)
        tn = float(np.linalg.svd(x, compute_uv=False).sum()) if x.size else 0.0
        return AdmissibilityReport(0.0, a, x, tn, None, "admissible at this size")
    E = diagonal_expectation(r)
    pos = r._pos
    a = np.zeros_like(E.matrix)
    x = np.zeros_like(E.matrix)
    for side in (True, False):
        idx = np.flatnonzero(pos if side else ~pos)
        ab, xb = _split_block(E.matrix[np.ix_(idx, idx)])
        a[np.ix_(idx, idx)] = ab
        x[np.ix_(idx, idx)] = xb
    off = np.linalg.svd(r.block(True, False), compute_uv=False).sum()
    tn = float(np.linalg.svd(x, compute_uv=False).sum())
    return AdmissibilityReport(float(off), a, x, tn, r.band, f"admissible at band {r.band}")


# exterior powers ------------------------------------------------------------------
def compound_matrix(s: np.ndarray, k: int) -> np.ndarray:
    """Matrix of Lambda^k(s) in the basis e_I, |I| = k, by k x k minors."""
    n = s.shape[0]
    subsets = list(itertools.combinations(range(n), k))
    if k == 0:
        return np.ones((1, 1), complex)
    out = np.empty((len(subsets), len(subsets)), complex)
    for i, I in enumerate(subsets):
        rows = s[list(I)]
        for j, J in enumerate(subsets):
            out[i, j] = np.linalg.det(rows[:, list(J)])
    return out


def exterior_power_norm(s, max_k: int | None = None):
    """Operator norms of Lambda^k(s) for k = 0..max_k and their maximum."""
    s = np.asarray(s, complex)
    max_k = s.shape[0] if max_k is None else max_k
    if max_k > s.shape[0]:
        raise ValueError("max_k exceeds the matrix size")
    norms = [float(np.linalg.norm(compound_matrix(s, k), 2)) for k in range(max_k + 1)]
    return norms, max(norms)


def singular_value_bound(s) -> float:
    sig = np.linalg.svd(np.asarray(s, complex), compute_uv=False)
    return float(np.prod(np.maximum(1.0, sig)))


# vacuum solver -------------------------------------------------------------------
@dataclass
class VacuumKernel:
    singular_values: np.ndarray
    vectors: np.ndarray  # columns: right singular vectors, smallest first
    kernel_dim: int
    defect: float


def _range_basis(P: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    H = 0.5 * (P + P.conj().T)
    w, v = np.linalg.eigh(H)
    return v[:, w > 0.5]


def _constraint_matrix(q_prime: np.ndarray, band: int, space: FockSpace, out: FockSpace) -> np.ndarray:
    """Stacked a(f), f in q'K, and a(g)^*, g in (1-q')K, mapping F_{<=N}
    into a larger space so no component is lost to truncation."""
    n = 2 * band + 1
    rows = []
    emb = np.array([out.index[s] for s in space.states])
    for basis, dagger in ((_range_basis(q_prime), False), (_range_basis(np.eye(n) - q_prime), True)):
        for k in range(basis.shape[1]):
            f = BoundaryFunction(basis[:, k], band)
            op = car_creator(f, out) if dagger else car_annihilator(f, out)
            rows.append(op.matrix[:, emb].toarray())
    return np.vstack(rows)


def vacuum_kernel(q_prime: np.ndarray, space: FockSpace, band: int | None = None,
                  tol: float = 1e-10) -> VacuumKernel:
    q_prime = np.asarray(q_prime, complex)
    band = band if band is not None else (q_prime.shape[0] - 1) // 2
    out = enumerate_basis(space.cutoff + band + 1)
    C = _constraint_matrix(q_prime, band, space, out)
    # the right singular basis must be complete; only a wide C needs full_matrices
    _, sig, Vh = np.linalg.svd(C, full_matrices=C.shape[0] < C.shape[1])
    full = np.zeros(space.dim)
    full[: sig.size] = sig
    order = np.argsort(full)
    full = full[order]
    vecs = Vh.conj().T[:, order]
    scale = max(1.0, float(full.max(initial=0)))
    kdim = int(np.count_nonzero(full <= tol * scale))
    return VacuumKernel(full, vecs, kdim, float(full[0]))


def _phase_fix(v: np.ndarray, space: FockSpace) -> np.ndarray:
    v = v / np.linalg.norm(v)
    c = v[space.index[()]]
    ref = c if abs(c) > 1e-14 else v[np.flatnonzero(np.abs(v) > 1e-14)[0]]
    return v * (abs(ref) / ref)


def vacuum_solve(q_prime: np.ndarray, space: FockSpace, band: int | None = None,
                 tol: float = 1e-10, allow_approximate: bool = False) -> VoaState:
    """Unit vector annihilated by a(f), f in q'K, and a(g)^*, g in (1-q')K."""
    ker = vacuum_kernel(q_prime, space, band, tol)
    if ker.kernel_dim == 0 and not allow_approximate:
        raise VacuumSolverError(f"no vacuum inside the cutoff: smallest singular value {ker.defect:.3e}")
    if ker.kernel_dim > 1:
        raise VacuumSolverError(f"vacuum kernel has dimension {ker.kernel_dim}; "
                                f"singular values {ker.singular_values[:ker.kernel_dim + 1]}")
    v = _phase_fix(ker.vectors[:, 0], space)
    return VoaState(space.as_dict(v))


def two_mode_rotation(alpha: float, band: int = 2) -> np.ndarray:
    """q' = u q u* with u rotating e_0 towards e_{-1} by alpha."""
    n = 2 * band + 1
    u = np.eye(n, dtype=complex)
    i0, im = band, band - 1
    c, s = np.cos(alpha), np.sin(alpha)
    u[np.ix_([i0, im], [i0, im])] = [[c, -s], [s, c]]
    P = positive_projection(band)
    return u @ P @ u.conj().T


# implementing operators ------------------------------------------------------------
def implementer(r: BlockMap, omega_hat, source: FockSpace, target: FockSpace,
                work: FockSpace | None = None) -> SparseOperator:
    """Column for a basis state: its generator word with every z^m replaced by
    r z^m, applied to omega_hat, truncated to the target."""
    work = work or target
    omega = omega_hat.to_array(work) if isinstance(omega_hat, VoaState) else np.asarray(omega_hat)
    ops: dict = {}

    def op(m):
        if m not in ops:
            f = r.column(m)
            ops[m] = (car_annihilator(f, work) if m < 0 else car_creator(f, work)).matrix
        return ops[m]

    cols = np.zeros((target.dim, source.dim), complex)
    emb = np.array([work.index.get(s, -1) for s in target.states])
    for j, st in enumerate(source.states):
        v = omega.copy()
        for which, n in reversed(word(st)):
            m = n if which == PSI else -n - 1
            v = op(m) @ v
        cols[:, j] = np.where(emb >= 0, v[np.maximum(emb, 0)], 0)
    return SparseOperator(sp.csr_matrix(cols), target, source, "mixed")


def second_quantize_unitary(u: np.ndarray, space: FockSpace, band: int | None = None,
                            allow_approximate: bool = False):
    """U with U a(f) U* = a(u f) and U Omega the vacuum of u p u*.

    Returns (U, unitarity defect on the space)."""
    u = np.asarray(u, complex)
    band = band if band is not None else (u.shape[0] - 1) // 2
    P = positive_projection(band)
    qp = u @ P @ u.conj().T
    omega = vacuum_solve(qp, space, band, allow_approximate=allow_approximate)
    U = implementer(BlockMap(u, band), omega, space, space)
    M = U.toarray()
    defect = float(np.linalg.norm(M.conj().T @ M - np.eye(space.dim), 2))
    return U, defect


def rotation_unitary(theta: float, band: int) -> np.ndarray:
    """One-particle rotation z^n -> e^{-i theta (n + 1/2)} z^n."""
    n = np.arange(-band, band + 1)
    return np.diag(np.exp(-1j * theta * (n + 0.5)))


def phase_aligned_residual(A: np.ndarray, B: np.ndarray) -> float:
    """min over |c| = 1 of ||A - c B||."""
    c = np.vdot(B.ravel(), A.ravel())
    c = c / abs(c) if abs(c) > 0 else 1.0
    return float(np.linalg.norm(A - c * B, 2))

