"""Band-limited functions on the unit circle.

A :class:`BoundaryFunction` stores the Fourier coefficients of
``f(z) = sum_n c_n z^n`` for ``|n| <= band`` densely.  Arclength measure is
normalized, so ``||f||^2 = sum |c_n|^2`` and ``<f, g> = sum c_n conj(d_n)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

DEFAULT_BAND = 32


class AliasingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    data: np.ndarray  # length 2*band+1, entry k is the coefficient of z^(k-band)
    band: int

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=complex)
        if arr.shape != (2 * self.band + 1,):
            raise ValueError("coefficient array must have length 2*band+1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, band: int) -> "BoundaryFunction":
        return cls(np.zeros(2 * band + 1, complex), band)

    @classmethod
    def monomial(cls, n: int, band: int | None = None, coeff: complex = 1.0):
        band = abs(n) if band is None else band
        if abs(n) > band:
            raise ValueError(f"frequency {n} outside band {band}")
        arr = np.zeros(2 * band + 1, complex)
        arr[n + band] = coeff
        return cls(arr, band)

    @classmethod
    def from_dict(cls, coeffs: dict, band: int | None = None):
        if band is None:
            band = max((abs(int(k)) for k in coeffs), default=0)
        arr = np.zeros(2 * band + 1, complex)
        for k, v in coeffs.items():
            if abs(k) <= band:
                arr[int(k) + band] += v
        return cls(arr, band)

    @classmethod
    def from_callable(cls, fn: Callable, band: int, samples: int | None = None):
        """Fourier-analyse ``fn`` sampled on the circle."""
        if samples is None:
            samples = max(256, 1 << int(np.ceil(np.log2(8 * band + 8))))
        z = circle_points(samples)
        return from_samples(np.asarray(fn(z), dtype=complex), band)

    # access -------------------------------------------------------------
    def coeff(self, n: int) -> complex:
        if abs(n) > self.band:
            return 0j
        return complex(self.data[n + self.band])

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.band, self.band + 1)

    def items(self, tol: float = 0.0):
        """Nonzero (frequency, coefficient) pairs."""
        for n, c in zip(self.freqs, self.data):
            if abs(c) > tol:
                yield int(n), complex(c)

    def as_dict(self, tol: float = 0.0) -> dict:
        return dict(self.items(tol))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def inner(self, other: "BoundaryFunction") -> complex:
        """<self, other>, linear in the first slot."""
        b = max(self.band, other.band)
        return complex(np.vdot(other.with_band(b).data, self.with_band(b).data))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for n, c in self.items():
            out = out + c * z**n
        return out

    def samples(self, count: int) -> np.ndarray:
        return self(circle_points(count))

    # algebra ----------------------------------------------------------
    def with_band(self, band: int) -> "BoundaryFunction":
        """Zero-pad or truncate to a new band."""
        if band == self.band:
            return self
        arr = np.zeros(2 * band + 1, complex)
        m = min(band, self.band)
        arr[band - m: band + m + 1] = self.data[self.band - m: self.band + m + 1]
        return BoundaryFunction(arr, band)

    def trimmed(self, tol: float = 0.0) -> "BoundaryFunction":
        """Smallest band holding every coefficient above ``tol``."""
        nz = [abs(n) for n, _ in self.items(tol)]
        return self.with_band(max(nz, default=0))

    def __add__(self, other):
        b = max(self.band, other.band)
        return BoundaryFunction(self.with_band(b).data + other.with_band(b).data, b)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, scalar):
        if isinstance(scalar, BoundaryFunction):
            return multiply(self, scalar)
        return BoundaryFunction(self.data * complex(scalar), self.band)

    __rmul__ = __mul__

    def __neg__(self):
        return -1 * self

    def shift(self, k: int) -> "BoundaryFunction":
        """Multiplication by z^k (band grows by |k|)."""
        b = self.band + abs(k)
        arr = np.zeros(2 * b + 1, complex)
        for n, c in self.items():
            arr[n + k + b] = c
        return BoundaryFunction(arr, b)

    def derivative(self) -> "BoundaryFunction":
        """Complex derivative d/dz on the circle: c_n z^n -> n c_n z^(n-1)."""
        b = self.band + 1
        arr = np.zeros(2 * b + 1, complex)
        for n, c in self.items():
            arr[n - 1 + b] += n * c
        return BoundaryFunction(arr, b)

    def pointwise_conj(self) -> "BoundaryFunction":
        """z -> conj(f(z)) on the circle."""
        return BoundaryFunction(np.conj(self.data[::-1]), self.band)

    def real_part(self) -> "BoundaryFunction":
        return 0.5 * (self + self.pointwise_conj())

    def is_analytic(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.data[: self.band]) <= tol))

    def __repr__(self):
        terms = ", ".join(f"{n}: {c:.4g}" for n, c in self.items(1e-14))
        return f"BoundaryFunction(band={self.band}, {{{terms}}})"


class HardySplit(NamedTuple):
    plus: BoundaryFunction
    minus: BoundaryFunction


def circle_points(count: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(count) / count)


def from_samples(samples, band: int) -> BoundaryFunction:
    """Truncated discrete Fourier transform of equispaced circle samples."""
    s = np.asarray(samples, dtype=complex)
    count = s.size
    if count & (count - 1) or count == 0:
        raise AliasingError(f"sample count {count} is not a power of two")
    if count < 2 * band + 1:
        raise AliasingError(
            f"{count} samples cannot resolve band {band}: frequencies would alias "
            f"(need at least {2 * band + 1})")
    spec = np.fft.fft(s) / count
    idx = np.arange(-band, band + 1) % count
    return BoundaryFunction(spec[idx], band)


def hardy_project(f: BoundaryFunction) -> HardySplit:
    plus = f.data.copy()
    plus[: f.band] = 0
    return HardySplit(BoundaryFunction(plus, f.band), BoundaryFunction(f.data - plus, f.band))


def conj_c(f: BoundaryFunction) -> BoundaryFunction:
    """(cf)(z) = conj(z f(z)); sends c_k z^k to conj(c_k) z^(-k-1)."""
    b = f.band + 1
    arr = np.zeros(2 * b + 1, complex)
    for n, c in f.items():
        arr[-n - 1 + b] = np.conj(c)
    return BoundaryFunction(arr, b)


def multiply(f: BoundaryFunction, g: BoundaryFunction) -> BoundaryFunction:
    """Pointwise product; keeps every frequency up to band(f)+band(g)."""
    return BoundaryFunction(np.convolve(f.data, g.data), f.band + g.band)
