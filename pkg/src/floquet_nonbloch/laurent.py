"""Matrix-valued Laurent polynomials in the non-Bloch variable beta.

A non-Bloch Hamiltonian ``h(beta) = sum_{n=-m}^{m} h_n beta**n`` is stored densely
as an array of shape ``(2m+1, q, q)`` where index ``n + m`` holds ``h_n``.  The
coefficient ``h_n`` is the amplitude of ``c^dagger_j c_{j+n}`` in real space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb
from typing import Mapping

import numpy as np

from .errors import DomainError

#: Sizes beyond which the resultant route is not validated.
MAX_VALIDATED_Q = 4
MAX_VALIDATED_M = 4


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _check_beta(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=complex)
    if np.any(beta == 0):
        raise DomainError("beta = 0 is a pole of a Laurent polynomial")
    return beta


def _powers(beta: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """beta**n for n = lo..hi stacked on a trailing axis."""
    n = np.arange(lo, hi + 1)
    return beta[..., None] ** n


def _pad_centered(a: np.ndarray, half: int) -> np.ndarray:
    """Zero-pad a centered coefficient array (axis 0) to length ``2*half + 1``."""
    cur = (a.shape[0] - 1) // 2
    if cur == half:
        return a
    if cur > half:
        return a[cur - half : cur + half + 1]
    pad = [(half - cur, half - cur)] + [(0, 0)] * (a.ndim - 1)
    return np.pad(a, pad)


@dataclass(frozen=True)
class LaurentPoly:
    """Scalar Laurent polynomial ``sum_k coeffs[k] * beta**(low + k)``."""

    coeffs: np.ndarray
    low: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(np.atleast_1d(self.coeffs)))
        object.__setattr__(self, "low", int(self.low))

    @property
    def high(self) -> int:
        return self.low + len(self.coeffs) - 1

    def __call__(self, beta):
        beta = _check_beta(beta)
        return _powers(beta, self.low, self.high) @ self.coeffs

    def trimmed(self, rtol: float = 0.0) -> "LaurentPoly":
        """Drop leading/trailing coefficients with ``|c| <= rtol * max|c|``."""
        c = np.asarray(self.coeffs)
        scale = np.max(np.abs(c)) if c.size else 0.0
        keep = np.nonzero(np.abs(c) > rtol * scale)[0] if scale > 0 else []
        if len(keep) == 0:
            return LaurentPoly(np.zeros(1), 0)
        return LaurentPoly(c[keep[0] : keep[-1] + 1], self.low + keep[0])

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


@dataclass(frozen=True)
class LaurentMatrixPoly:
    """q x q matrix Laurent polynomial with tight hopping range m."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] % 2 != 1:
            raise ValueError(f"coefficient array must have shape (2m+1, q, q), got {c.shape}")
        m = (c.shape[0] - 1) // 2
        # tighten m so that h_{-m} or h_{+m} is nonzero
        while m > 0 and not np.any(c[0]) and not np.any(c[-1]):
            c = c[1:-1]
            m -= 1
        object.__setattr__(self, "coeffs", _frozen(c))
        if self.q > MAX_VALIDATED_Q or self.m > MAX_VALIDATED_M:
            warnings.warn(
                f"q={self.q}, m={self.m} exceeds the validated range "
                f"(q <= {MAX_VALIDATED_Q}, m <= {MAX_VALIDATED_M}); "
                "check resultant conditioning diagnostics",
                RuntimeWarning,
                stacklevel=2,
            )

    @classmethod
    def from_terms(cls, terms: Mapping[int, object], q: int | None = None) -> "LaurentMatrixPoly":
        """Build from ``{n: h_n}``; scalars are promoted to 1x1 matrices."""
        mats = {int(n): np.atleast_2d(np.asarray(v, dtype=complex)) for n, v in terms.items()}
        if q is None:
            q = next(iter(mats.values())).shape[0] if mats else 1
        m = max((abs(n) for n in mats), default=0)
        c = np.zeros((2 * m + 1, q, q), dtype=complex)
        for n, v in mats.items():
            if v.shape != (q, q):
                raise ValueError(f"h_{n} has shape {v.shape}, expected {(q, q)}")
            c[n + m] += v
        return cls(c)

    @classmethod
    def zeros(cls, q: int) -> "LaurentMatrixPoly":
        return cls(np.zeros((1, q, q)))

    @property
    def m(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def q(self) -> int:
        return self.coeffs.shape[1]

    def coeff(self, n: int) -> np.ndarray:
        if abs(n) > self.m:
            return np.zeros((self.q, self.q), dtype=complex)
        return self.coeffs[n + self.m]

    def terms(self) -> dict[int, np.ndarray]:
        return {n: self.coeff(n) for n in range(-self.m, self.m + 1) if np.any(self.coeff(n))}

    def __call__(self, beta):
        return eval_laurent(self, beta)

    def _padded(self, m: int) -> np.ndarray:
        return _pad_centered(np.asarray(self.coeffs), m)

    def __add__(self, other: "LaurentMatrixPoly") -> "LaurentMatrixPoly":
        m = max(self.m, other.m)
        return LaurentMatrixPoly(self._padded(m) + other._padded(m))

    def __neg__(self) -> "LaurentMatrixPoly":
        return LaurentMatrixPoly(-np.asarray(self.coeffs))

    def __sub__(self, other: "LaurentMatrixPoly") -> "LaurentMatrixPoly":
        return self + (-other)

    def __mul__(self, scalar) -> "LaurentMatrixPoly":
        return LaurentMatrixPoly(np.asarray(self.coeffs) * complex(scalar))

    __rmul__ = __mul__

    def rotated(self, theta: float) -> "LaurentMatrixPoly":
        """Coefficients of ``h(exp(i*theta) * beta)``."""
        n = np.arange(-self.m, self.m + 1)
        return LaurentMatrixPoly(np.asarray(self.coeffs) * np.exp(1j * n * theta)[:, None, None])


def eval_laurent(h: LaurentMatrixPoly, beta) -> np.ndarray:
    """Evaluate ``h(beta)``; broadcasts over an array of beta, returning ``(..., q, q)``."""
    beta = _check_beta(beta)
    pw = _powers(beta, -h.m, h.m)
    return np.tensordot(pw, np.asarray(h.coeffs), axes=([-1], [0]))


@dataclass(frozen=True)
class CharPoly:
    """``f(beta, E) = det[h(beta) - E]`` stored as ``coeffs[k, n + M]`` for ``E**k beta**n``."""

    coeffs: np.ndarray
    M: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] != 2 * self.M + 1:
            raise ValueError("CharPoly coefficients must have shape (q+1, 2M+1)")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def degE(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def coeffsE(self) -> list[LaurentPoly]:
        return [LaurentPoly(row, -self.M) for row in self.coeffs]

    def e_coeffs(self, beta) -> np.ndarray:
        """Ascending E-coefficients at fixed beta, shape ``(..., degE+1)``."""
        beta = _check_beta(beta)
        pw = _powers(beta, -self.M, self.M)
        return pw @ np.asarray(self.coeffs).T

    def beta_coeffs(self, E) -> np.ndarray:
        """Ascending coefficients of ``beta**M * f(beta, E)``, shape ``(..., 2M+1)``."""
        E = np.asarray(E, dtype=complex)
        pw = E[..., None] ** np.arange(self.degE + 1)
        return pw @ np.asarray(self.coeffs)

    def __call__(self, beta, E):
        beta = _check_beta(beta)
        E = np.asarray(E, dtype=complex)
        return np.sum(self.e_coeffs(beta) * E[..., None] ** np.arange(self.degE + 1), axis=-1)

    def transformed(self, theta: float = 0.0, shift: complex = 0.0) -> "CharPoly":
        """Coefficients of ``f(exp(i*theta) * beta, E + shift)``."""
        c = np.asarray(self.coeffs) * np.exp(1j * theta * np.arange(-self.M, self.M + 1))[None, :]
        if shift != 0:
            d = self.degE
            out = np.zeros_like(c)
            # (E + s)^k = sum_j C(k, j) s^(k-j) E^j
            for k in range(d + 1):
                for j in range(k + 1):
                    out[j] += comb(k, j) * shift ** (k - j) * c[k]
            c = out
        return CharPoly(c, self.M)


def _lmat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two centered matrix Laurent coefficient arrays."""
    out = np.zeros((a.shape[0] + b.shape[0] - 1,) + a.shape[1:], dtype=complex)
    for i in range(a.shape[0]):
        out[i : i + b.shape[0]] += a[i] @ b
    return out


def char_poly(h: LaurentMatrixPoly) -> CharPoly:
    """Characteristic polynomial ``det[h(beta) - E]`` via Faddeev-LeVerrier over Laurent coefficients."""
    q, M = h.q, h.m * h.q
    A = np.asarray(h.coeffs)
    eye = np.eye(q, dtype=complex)
    # c[k]: centered coefficients of E^k in det(E - h); every intermediate fits in [-M, M]
    c = np.zeros((q + 1, 2 * M + 1), dtype=complex)
    c[q, M] = 1.0
    Mk = np.zeros((2 * M + 1, q, q), dtype=complex)
    for k in range(1, q + 1):
        Mk = _pad_centered(_lmat_mul(A, Mk), M) + c[q - k + 1][:, None, None] * eye
        c[q - k] = -np.trace(_pad_centered(_lmat_mul(A, Mk), M), axis1=1, axis2=2) / k
    return CharPoly((-1) ** q * c, M)


@dataclass(frozen=True)
class TimedLaurentPoly:
    """Piecewise-constant ``h(beta, t)``: segments ``(fraction, h_k)`` applied in time order."""

    segments: tuple
    period: float = 1.0

    def __post_init__(self):
        segs = tuple((float(tau), h) for tau, h in self.segments)
        if not segs:
            raise ValueError("a drive needs at least one segment")
        for tau, h in segs:
            if not 0 < tau <= 1:
                raise ValueError(f"duration fraction {tau} outside (0, 1]")
            if h.q != segs[0][1].q:
                raise ValueError("all segments must share the orbital count q")
        total = sum(tau for tau, _ in segs)
        if abs(total - 1) > 1e-12:
            raise ValueError(f"duration fractions sum to {total}, not 1")
        object.__setattr__(self, "segments", segs)

    @property
    def q(self) -> int:
        return self.segments[0][1].q


def time_average(ht: TimedLaurentPoly) -> LaurentMatrixPoly:
    """Floquet non-Bloch Hamiltonian of a commuting step drive: ``sum_k tau_k h_k``."""
    out = LaurentMatrixPoly.zeros(ht.q)
    for tau, h in ht.segments:
        out = out + tau * h
    return out


def commutation_check(ht: TimedLaurentPoly, samples: int = 32, seed: int = 0, atol: float = 1e-10):
    """Check ``[h(beta, t), h(beta, t')] = 0`` on random beta with ``0.5 <= |beta| <= 2``.

    Returns ``(ok, max_residual)``; the residual is the Frobenius norm of the
    commutator divided by ``max(1, |A| |B|)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    radius = rng.uniform(0.5, 2.0, samples)
    beta = radius * np.exp(2j * np.pi * rng.random(samples))
    mats = [eval_laurent(h, beta) for _, h in ht.segments]
    worst = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            a, b = mats[i], mats[j]
            comm = a @ b - b @ a
            scale = np.maximum(1.0, np.linalg.norm(a, axis=(-2, -1)) * np.linalg.norm(b, axis=(-2, -1)))
            worst = max(worst, float(np.max(np.linalg.norm(comm, axis=(-2, -1)) / scale)))
    return worst < atol, worst

