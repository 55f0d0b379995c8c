"""Polynomial root finding with modulus-sorted output.

Roots come from companion-matrix eigenvalues (LAPACK ``geev`` balances the
companion matrix before the QR sweep) and are then polished by Newton steps.
All batch routines take coefficient rows in *ascending* order ``c_0 .. c_d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .laurent import CharPoly

#: Relative size below which an extreme coefficient counts as zero.
DEGENERATE_RTOL = 1e-12
NEWTON_STEPS = 20


@dataclass(frozen=True)
class RootList:
    """Roots sorted by ascending modulus (ties broken by argument).

    ``residuals`` are backward errors ``|p(r)| / sum_k |c_k| |r|^k``.
    ``deficit`` counts roots lost to a degenerate leading or trailing
    coefficient (roots at infinity, or zero roots produced by clearing).
    """

    roots: np.ndarray
    residuals: np.ndarray
    deficit: int = 0

    @property
    def degenerate(self) -> bool:
        return self.deficit > 0

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.roots)

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


def modulus_order(roots: np.ndarray) -> np.ndarray:
    """Argsort along the last axis by modulus, then principal argument."""
    mod = np.round(np.abs(roots), 12)
    if roots.ndim == 1:
        return np.lexsort((np.angle(roots), mod))
    # lexsort has no axis batching; stack a composite key instead
    order = np.argsort(np.angle(roots), axis=-1, kind="stable")
    mod_sorted = np.take_along_axis(mod, order, axis=-1)
    second = np.argsort(mod_sorted, axis=-1, kind="stable")
    return np.take_along_axis(order, second, axis=-1)


def _horner(C: np.ndarray, x: np.ndarray):
    """Value and derivative of ascending-coefficient rows ``C`` at points ``x`` (N, k)."""
    p = np.zeros_like(x)
    dp = np.zeros_like(x)
    for k in range(C.shape[-1] - 1, -1, -1):
        dp = dp * x + p
        p = p * x + C[..., k, None]
    return p, dp


def backward_error(C: np.ndarray, x: np.ndarray) -> np.ndarray:
    p, _ = _horner(C, x)
    absx = np.abs(x)
    scale = np.zeros_like(absx)
    for k in range(C.shape[-1] - 1, -1, -1):
        scale = scale * absx + np.abs(C[..., k, None])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.abs(p) / scale


def roots_batch(C: np.ndarray, polish: int = NEWTON_STEPS) -> np.ndarray:
    """Roots of each row of ``C`` (shape ``(N, d+1)``, nonzero last column).

    Returns an ``(N, d)`` array sorted by modulus.
    """
    C = np.asarray(C, dtype=complex)
    N, d1 = C.shape
    d = d1 - 1
    if d == 0:
        return np.zeros((N, 0), dtype=complex)
    monic = C[:, :-1] / C[:, -1:]
    comp = np.zeros((N, d, d), dtype=complex)
    comp[:, 0, :] = -monic[:, ::-1]
    if d > 1:
        comp[:, 1:, :-1] = np.eye(d - 1)
    r = np.linalg.eigvals(comp)
    r = newton_polish(C, r, polish)
    return np.take_along_axis(r, modulus_order(r), axis=-1)


def newton_polish(C: np.ndarray, r: np.ndarray, steps: int = NEWTON_STEPS) -> np.ndarray:
    """Newton refinement, accepting a step only when the residual does not grow."""
    r = r.copy()
    p, dp = _horner(C, r)
    for _ in range(steps):
        with np.errstate(invalid="ignore", divide="ignore"):
            delta = p / dp
        ok = np.isfinite(delta)
        trial = np.where(ok, r - np.where(ok, delta, 0), r)
        pt, dpt = _horner(C, trial)
        better = ok & (np.abs(pt) <= np.abs(p))
        r = np.where(better, trial, r)
        p = np.where(better, pt, p)
        dp = np.where(better, dpt, dp)
        if not np.any(better & (np.abs(delta) > 4 * np.finfo(float).eps * np.abs(r))):
            break
    return r


def _trim(c: np.ndarray, drop_low: bool):
    """Strip degenerate extreme coefficients; returns (core, n_low, n_high)."""
    scale = np.max(np.abs(c))
    tiny = np.abs(c) <= DEGENERATE_RTOL * scale
    hi = len(c) - 1
    while hi > 0 and tiny[hi]:
        hi -= 1
    lo = 0
    if drop_low:
        while lo < hi and tiny[lo]:
            lo += 1
    else:
        while lo < hi and c[lo] == 0:
            lo += 1
    return c[lo : hi + 1], lo, len(c) - 1 - hi


def poly_roots(coeffs) -> RootList:
    """All complex roots of ``sum_k coeffs[k] x**k`` sorted by modulus.

    Exact zero low-order coefficients give exact zero roots.  A degenerate
    leading coefficient is treated as a root at infinity and counted in
    ``deficit``.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if not np.any(c):
        raise DomainError("the zero polynomial has no well-defined roots")
    core, n_zero, n_inf = _trim(c, drop_low=False)
    if len(core) == 1:
        roots = np.zeros(n_zero, dtype=complex)
    else:
        roots = np.concatenate([np.zeros(n_zero, dtype=complex), roots_batch(core[None])[0]])
        roots = roots[modulus_order(roots)]
    res = backward_error(c[None], roots[None])[0] if len(roots) else np.zeros(0)
    return RootList(roots, np.nan_to_num(res), deficit=n_inf)


def laurent_roots(f: CharPoly, E: complex) -> RootList:
    """The ``2M`` nonzero finite roots in beta of ``f(beta, E) = 0``."""
    c = f.beta_coeffs(complex(E))
    if not np.any(c):
        raise DomainError(f"f(beta, E) vanishes identically at E = {E}")
    core, n_low, n_high = _trim(c, drop_low=True)
    if len(core) == 1:
        return RootList(np.zeros(0, dtype=complex), np.zeros(0), deficit=n_low + n_high)
    roots = roots_batch(core[None])[0]
    res = np.nan_to_num(backward_error(core[None], roots[None])[0])
    return RootList(roots, res, deficit=n_low + n_high)


def laurent_roots_batch(f: CharPoly, E: np.ndarray):
    """Vectorised :func:`laurent_roots` for many energies.

    Returns ``(roots, ok)`` where ``roots`` has shape ``(N, 2M)`` and rows with a
    degenerate extreme coefficient are flagged ``ok = False`` (filled with nan).
    """
    E = np.atleast_1d(np.asarray(E, dtype=complex))
    C = f.beta_coeffs(E)
    scale = np.max(np.abs(C), axis=-1)
    ok = (np.abs(C[:, -1]) > DEGENERATE_RTOL * scale) & (np.abs(C[:, 0]) > DEGENERATE_RTOL * scale)
    out = np.full((len(E), C.shape[1] - 1), np.nan + 0j)
    if np.any(ok):
        out[ok] = roots_batch(C[ok])
    return out, ok


def pooled_roots(f: CharPoly, shifts, E: np.ndarray):
    """Roots of ``f(beta, E + s)`` for every shift, pooled and sorted by modulus.

    Returns ``(roots, zone, ok)``: ``roots`` and ``zone`` have shape
    ``(N, len(shifts) * 2M)``; ``zone[i, j]`` is the index into ``shifts`` that
    produced ``roots[i, j]``.
    """
    E = np.atleast_1d(np.asarray(E, dtype=complex))
    shifts = np.atleast_1d(np.asarray(shifts, dtype=complex))
    parts, zones = [], []
    ok = np.ones(len(E), dtype=bool)
    for z, s in enumerate(shifts):
        r, good = laurent_roots_batch(f, E + s)
        parts.append(r)
        zones.append(np.full(r.shape, z))
        ok &= good
    roots = np.concatenate(parts, axis=1)
    zone = np.concatenate(zones, axis=1)
    order = modulus_order(np.where(ok[:, None], roots, 0))
    return np.take_along_axis(roots, order, axis=1), np.take_along_axis(zone, order, axis=1), ok


def middle_pair_gaps(f: CharPoly, shifts, E: np.ndarray) -> np.ndarray:
    """Vectorised :func:`middle_pair_gap`; nan where the root count is degenerate."""
    roots, _, ok = pooled_roots(f, shifts, E)
    K = roots.shape[1] // 2
    mod = np.abs(roots)
    with np.errstate(invalid="ignore", divide="ignore"):
        gap = np.log(mod[:, K] / mod[:, K - 1])
    return np.where(ok, gap, np.nan)


def middle_pair_gap(f: CharPoly, shifts, E: complex) -> float:
    """``log(|b_{K+1}| / |b_K|)`` for the pooled, modulus-sorted roots over all shifts.

    ``K`` is half the pooled root count.  The gap is zero exactly when ``E`` lies
    on the (Floquet) GBZ spectrum built from these shifts; nan signals a
    degenerate root count.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=complex))
    if shifts.size == 0:
        raise ValueError("shifts must be nonempty")
    return float(middle_pair_gaps(f, shifts, np.array([E]))[0])
