"""Resultants in E of shifted characteristic polynomials and the aGBZ curves.

For a fixed phase ``theta`` the common roots of ``f(beta, E) = 0`` and
``f(exp(i theta) beta, E + 2 pi l / T) = 0`` are the zeros of
``g(beta, theta) = Res_E[...]``.  ``g`` is reconstructed from Sylvester
determinants sampled on a circle and inverted with an FFT.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, DomainError
from .laurent import CharPoly, LaurentPoly
from .polyroots import poly_roots, roots_batch

log = logging.getLogger(__name__)

INTERP_RTOL = 1e-8
COMMON_ROOT_TOL = 1e-8
BETA_MIN, BETA_MAX = 1e-12, 1e12
RETRY_FACTORS = (1.0, 0.7, 1.4)


def sylvester_matrix(p, q) -> np.ndarray:
    """Sylvester matrix of ascending coefficient vectors ``p`` (degree n) and ``q`` (degree m).

    Broadcasts over leading axes: ``p`` of shape ``(..., n+1)`` and ``q`` of
    shape ``(..., m+1)`` give ``(..., n+m, n+m)``.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    n, m = p.shape[-1] - 1, q.shape[-1] - 1
    if n < 1 or m < 1:
        raise DomainError("Sylvester matrix needs two polynomials of degree >= 1")
    batch = np.broadcast_shapes(p.shape[:-1], q.shape[:-1])
    S = np.zeros(batch + (n + m, n + m), dtype=complex)
    pd, qd = p[..., ::-1], q[..., ::-1]
    for i in range(m):
        S[..., i, i : i + n + 1] = pd
    for i in range(n):
        S[..., m + i, i : i + m + 1] = qd
    return S


def sylvester_resultant_at(f1coeffs, f2coeffs) -> complex:
    """``Res_x[p, q] = det Syl(p, q)`` for ascending coefficient lists."""
    return complex(np.linalg.det(sylvester_matrix(f1coeffs, f2coeffs)))


@dataclass(frozen=True)
class ResultantCurveSpec:
    f: CharPoly
    ell: int
    T: float | None
    theta: float

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("Floquet-zone index must be >= 0")
        if self.ell == 0 and np.isclose(np.mod(self.theta, 2 * np.pi), 0.0, atol=1e-14):
            raise ValueError("ell = 0 with theta = 0 compares f with itself (resultant vanishes)")
        if self.ell > 0 and not (self.T and self.T > 0):
            raise ValueError("a positive driving period is required for ell > 0")

    @property
    def shift(self) -> float:
        return 0.0 if self.ell == 0 else 2 * np.pi * self.ell / self.T


def _span(f: CharPoly) -> int:
    # q rows of each polynomial in a 2q x 2q determinant, entries of span <= mq
    return 2 * f.M * f.degE


def _resultant_values(f: CharPoly, shift: float, thetas: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Sylvester determinants at every (theta, beta) pair, shape ``(len(thetas), len(beta))``."""
    A = f.e_coeffs(beta)
    out = np.empty((len(thetas), len(beta)), dtype=complex)
    for i, th in enumerate(thetas):
        g2 = f.transformed(th, shift)
        out[i] = np.linalg.det(sylvester_matrix(A, g2.e_coeffs(beta)))
    return out


def _interpolate(f: CharPoly, shift: float, thetas: np.ndarray, radius: float):
    """Coefficients of g for each theta, as ``(coeffs[len(thetas), 2S+1], rel_residual[len(thetas)])``."""
    S = _span(f)
    N = 2 * (2 * S + 1)
    beta = radius * np.exp(2j * np.pi * np.arange(N) / N)
    vals = _resultant_values(f, shift, thetas, beta)
    chat = np.fft.fft(vals, axis=1) / N
    n = np.arange(-S, S + 1)
    coeffs = chat[:, n % N] / radius ** n
    # held-out probes off the sampling circle
    probes = radius * 1.07 * np.exp(1j * (0.3137 + 2 * np.pi * np.arange(5) / 5))
    direct = _resultant_values(f, shift, thetas, probes)
    pw = probes[:, None] ** n[None, :]
    interp = coeffs @ pw.T
    scale = np.abs(coeffs) @ np.abs(pw).T
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.max(np.abs(direct - interp) / np.where(scale > 0, scale, 1.0), axis=1)
    return coeffs, rel


def resultant_in_E(spec: ResultantCurveSpec, radius: float = 1.0) -> LaurentPoly:
    """``g(beta, theta) = Res_E[f(beta, E), f(e^{i theta} beta, E + 2 pi l / T)]`` as a Laurent polynomial.

    Raises :class:`ConditioningError` if the reconstruction fails its held-out
    probe check on every sample radius tried.
    """
    S = _span(spec.f)
    last = np.inf
    for factor in RETRY_FACTORS:
        coeffs, rel = _interpolate(spec.f, spec.shift, np.array([spec.theta]), radius * factor)
        last = float(rel[0])
        if last < INTERP_RTOL:
            return LaurentPoly(coeffs[0], -S).trimmed(1e-13)
    raise ConditioningError(f"resultant interpolation residual {last:.3e} exceeds {INTERP_RTOL}")


@dataclass
class GBZCurve:
    """Points in the beta plane with their zone index, phase and energy."""

    beta: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    ell: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    E: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=complex)
        self.ell = np.asarray(self.ell, dtype=int)
        self.theta = np.asarray(self.theta, dtype=float)
        self.E = np.asarray(self.E, dtype=complex)

    def __len__(self) -> int:
        return len(self.beta)

    def subset(self, idx) -> "GBZCurve":
        return GBZCurve(self.beta[idx], self.ell[idx], self.theta[idx], self.E[idx])

    @classmethod
    def concat(cls, curves) -> "GBZCurve":
        curves = list(curves)
        if not curves:
            return cls()
        return cls(
            np.concatenate([c.beta for c in curves]),
            np.concatenate([c.ell for c in curves]),
            np.concatenate([c.theta for c in curves]),
            np.concatenate([c.E for c in curves]),
        )

    def sorted(self) -> "GBZCurve":
        order = np.lexsort((np.round(self.E.imag, 10), np.round(self.E.real, 10), np.angle(self.beta),
                            np.round(np.abs(self.beta), 10), self.theta, self.ell))
        return self.subset(order)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re_beta", "im_beta", "ell", "theta", "re_E", "im_E"])
            for b, l, th, e in zip(self.beta, self.ell, self.theta, self.E):
                w.writerow([repr(float(b.real)), repr(float(b.imag)), int(l), repr(float(th)),
                            repr(float(e.real)), repr(float(e.imag))])

    @classmethod
    def from_csv(cls, path) -> "GBZCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            np.array([complex(float(r["re_beta"]), float(r["im_beta"])) for r in rows], dtype=complex),
            np.array([int(r["ell"]) for r in rows], dtype=int),
            np.array([float(r["theta"]) for r in rows]),
            np.array([complex(float(r["re_E"]), float(r["im_E"])) for r in rows], dtype=complex),
        )


def _energy_roots(f: CharPoly, beta: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """The degE energies solving ``f(beta, E + shift) = 0`` for each beta (shape ``(N, degE)``)."""
    C = f.e_coeffs(beta)
    return roots_batch(C) - shift


def _points_at(f: CharPoly, ell: int, shift: float, theta: float, g: np.ndarray, S: int) -> GBZCurve:
    """Roots of one interpolated resultant, validated as common roots."""
    g = LaurentPoly(g, -S).trimmed(1e-13)
    if len(g.coeffs) < 2:
        return GBZCurve()
    bc = poly_roots(g.coeffs).roots
    bc = bc[(np.abs(bc) > BETA_MIN) & (np.abs(bc) < BETA_MAX)]
    if bc.size == 0:
        return GBZCurve()
    rot = np.exp(1j * theta)
    E1 = _energy_roots(f, bc)
    E2 = _energy_roots(f, rot * bc, shift)
    diff = np.abs(E1[:, :, None] - E2[:, None, :]) / (1 + np.abs(E1[:, :, None]))
    flat = diff.reshape(len(bc), -1)
    best = np.argmin(flat, axis=1)
    good = flat[np.arange(len(bc)), best] < COMMON_ROOT_TOL
    if not np.any(good):
        return GBZCurve()
    i, j = np.unravel_index(best[good], diff.shape[1:])
    rows = np.nonzero(good)[0]
    Ec = 0.5 * (E1[rows, i] + E2[rows, j])
    b = bc[good]
    k = len(b)
    return GBZCurve(
        np.concatenate([b, rot * b]),
        np.full(2 * k, ell),
        np.full(2 * k, theta),
        np.concatenate([Ec, Ec + shift]),
    )


def _sweep(f: CharPoly, ell: int, shift: float, thetas: np.ndarray, radius: float) -> list[GBZCurve]:
    S = _span(f)
    coeffs = np.empty((len(thetas), 2 * S + 1), dtype=complex)
    pending = np.arange(len(thetas))
    for factor in RETRY_FACTORS:
        c, rel = _interpolate(f, shift, thetas[pending], radius * factor)
        good = rel < INTERP_RTOL
        coeffs[pending[good]] = c[good]
        pending = pending[~good]
        if pending.size == 0:
            break
    if pending.size:
        log.warning("aGBZ_%d: %d theta samples failed the resultant self-check and were skipped", ell, pending.size)
    bad = set(pending.tolist())
    return [GBZCurve() if i in bad else _points_at(f, ell, shift, th, coeffs[i], S) for i, th in enumerate(thetas)]


def _set_distance(a: np.ndarray, b: np.ndarray) -> float:
    if a.size == 0 or b.size == 0:
        return np.nan
    d = np.abs(a[:, None] - b[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def theta_grid(n: int, ell: int) -> np.ndarray:
    th = 2 * np.pi * np.arange(n) / n
    return th[1:] if ell == 0 else th


def agbz_points(f: CharPoly, ell: int, T: float | None, thetaGrid: int = 720, radius: float = 1.0,
                refine: bool = True) -> GBZCurve:
    """Sample ``aGBZ_ell`` by sweeping the relative phase theta.

    Each validated common root ``beta_c`` contributes ``beta_c`` (energy
    ``E_c``) and ``e^{i theta} beta_c`` (energy ``E_c + 2 pi ell / T``).  One
    level of adaptive bisection is applied between consecutive theta samples
    whose point sets jump by more than 5x the median spacing.
    """
    if thetaGrid < 8:
        raise ValueError("thetaGrid must be >= 8")
    if ell < 0:
        raise ValueError("ell must be >= 0")
    if ell > 0 and not (T and T > 0):
        raise ValueError("a positive driving period is required for ell > 0")
    shift = 0.0 if ell == 0 else 2 * np.pi * ell / T
    thetas = theta_grid(thetaGrid, ell)
    parts = _sweep(f, ell, shift, thetas, radius)
    if refine and len(thetas) > 2:
        jumps = np.array([_set_distance(parts[k].beta, parts[k + 1].beta) for k in range(len(parts) - 1)])
        finite = jumps[np.isfinite(jumps)]
        if finite.size:
            med = np.median(finite)
            idx = np.nonzero(np.isfinite(jumps) & (jumps > 5 * med))[0]
            if idx.size:
                mids = 0.5 * (thetas[idx] + thetas[idx + 1])
                parts.extend(_sweep(f, ell, shift, mids, radius))
    return GBZCurve.concat(parts).sorted()
