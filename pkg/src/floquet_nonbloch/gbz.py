"""Static and Floquet generalized Brillouin zones, and the critical driving period.

The Floquet GBZ is read off from candidate points on the auxiliary curves
``aGBZ_l``: at each candidate the roots of ``f(beta, E + 2 pi l / T)`` for
every ``l`` in ``-lc .. lc`` are pooled and sorted by modulus, and the
candidate is kept when the two middle roots have equal modulus.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, ConvergenceError
from .laurent import CharPoly, LaurentMatrixPoly, char_poly
from .observables import hausdorff
from .polyroots import laurent_roots_batch, modulus_order
from .resultant import GBZCurve, _energy_roots, _sweep, agbz_points
from .spectrum import SpectrumSet, dedupe

log = logging.getLogger(__name__)

GAP_TOL = 1e-6
CONVERGENCE_TOL = 1e-6
MAX_EXTRA_ZONES = 8
CROSS_TOL = 1e-6  # static moduli near band edges carry ~sqrt(eps) error
MATCH_RTOL = 1e-6


def _as_charpoly(h) -> CharPoly:
    if isinstance(h, CharPoly):
        return h
    if isinstance(h, LaurentMatrixPoly):
        return char_poly(h)
    raise TypeError(f"expected a LaurentMatrixPoly or CharPoly, got {type(h).__name__}")


def zone_shifts(lc: int, T: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Zone indices ``-lc..lc`` and their energy shifts ``2 pi l / T``."""
    ells = np.arange(-lc, lc + 1)
    if lc == 0:
        return ells, np.zeros(1)
    return ells, 2 * np.pi * ells / T


def _snap_unique(beta: np.ndarray, E: np.ndarray, cell: float = 1e-9) -> np.ndarray:
    if beta.size == 0:
        return np.zeros(0, dtype=int)
    keys = np.round(np.column_stack([beta.real, beta.imag, E.real, E.imag]) / cell)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return np.sort(idx)


class CandidatePool:
    """Candidate points from aGBZ curves with per-zone root caches.

    Each candidate ``beta_a`` solves ``f(beta_a, E_a) = 0``.  Its energy is
    folded to ``E_0`` in the central zone, ``E_a = E_0 + 2 pi k_a / T``, and the
    zones ``-lc..lc`` are pooled around ``E_0``.  The candidate is a GBZ point
    when ``beta_a`` (as a zone-``k_a`` root) is one of the two equal-modulus
    middle roots, and a candidate from ``aGBZ_l`` counts only when the middle
    pair comes from two zones ``l`` apart.
    """

    def __init__(self, f: CharPoly, T: float | None):
        self.f, self.T = f, T
        self.E = np.zeros(0, dtype=complex)
        self.beta = np.zeros(0, dtype=complex)
        self.zone = np.zeros(0, dtype=int)
        self.theta = np.zeros(0)
        self.source = np.zeros(0, dtype=int)
        self._roots: dict[int, np.ndarray] = {}
        self._ok: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.E)

    def add(self, curve: GBZCurve, source: int = 0) -> None:
        """Add the points of ``aGBZ_source``."""
        if len(curve) == 0:
            return
        Es = _energy_roots(self.f, curve.beta)
        q = Es.shape[1]
        Ea = Es.reshape(-1)
        E0 = SpectrumSet(Ea, self.T).values
        k = np.zeros(len(Ea), dtype=int) if self.T is None else np.rint((Ea - E0).real * self.T / (2 * np.pi)).astype(int)
        beta = np.repeat(curve.beta, q)
        keep = _snap_unique(beta, E0, 1e-10)
        new = {
            "E": E0[keep], "beta": beta[keep], "zone": k[keep],
            "theta": np.repeat(curve.theta, q)[keep], "source": np.full(len(keep), source),
        }
        for ell in list(self._roots):
            r, ok = laurent_roots_batch(self.f, new["E"] + self._shift(ell))
            self._roots[ell] = np.concatenate([self._roots[ell], r])
            self._ok[ell] = np.concatenate([self._ok[ell], ok])
        for name, val in new.items():
            setattr(self, name, np.concatenate([getattr(self, name), val]))

    def _shift(self, ell):
        return 0.0 * ell if self.T is None else 2 * np.pi * ell / self.T

    def _zone(self, ell: int):
        if ell not in self._roots:
            self._roots[ell], self._ok[ell] = laurent_roots_batch(self.f, self.E + self._shift(ell))
        return self._roots[ell], self._ok[ell]

    def filter(self, lc: int, tol: float = GAP_TOL) -> GBZCurve:
        """Points whose pooled middle roots over zones ``-lc..lc`` have equal modulus."""
        if len(self) == 0:
            return GBZCurve()
        ells = np.arange(-lc, lc + 1)
        parts = [self._zone(int(l)) for l in ells]
        roots = np.concatenate([p[0] for p in parts], axis=1)
        zone = np.concatenate([np.full(p[0].shape, i) for i, p in enumerate(parts)], axis=1)
        ok = np.logical_and.reduce([p[1] for p in parts])
        order = modulus_order(np.where(ok[:, None], roots, 0))
        roots = np.take_along_axis(roots, order, axis=1)
        zone = np.take_along_axis(zone, order, axis=1)
        K = roots.shape[1] // 2
        mod = np.abs(roots)
        with np.errstate(invalid="ignore", divide="ignore"):
            gap = np.log(mod[:, K] / mod[:, K - 1])
        pair = roots[:, [K - 1, K]]
        zl = ells[zone[:, [K - 1, K]]]
        near = np.abs(pair - self.beta[:, None]) <= MATCH_RTOL * (1 + np.abs(self.beta[:, None]))
        own = np.any(near & (zl == self.zone[:, None]), axis=1)
        matched = np.abs(zl[:, 1] - zl[:, 0]) == self.source
        good = ok & own & matched & np.isfinite(gap) & (gap < tol)
        if not np.any(good):
            return GBZCurve()
        pair, zl = pair[good], zl[good]
        Eg = self.E[good][:, None] + self._shift(zl)
        out = GBZCurve(pair.reshape(-1), zl.reshape(-1), np.repeat(self.theta[good], 2), Eg.reshape(-1))
        return out.subset(_snap_unique(out.beta, out.E)).sorted()


def filter_candidates(f: CharPoly, candidates: GBZCurve, lc: int, T: float | None,
                      tol: float = GAP_TOL) -> GBZCurve:
    """Keep the candidates whose pooled middle roots have equal modulus.

    Every energy ``E`` with ``f(beta_a, E) = 0`` is tried; for an accepted one
    both middle roots are recorded with the zone-shifted energy they solve.
    """
    pool = CandidatePool(f, T)
    for ell in np.unique(candidates.ell):
        pool.add(candidates.subset(candidates.ell == ell), int(ell))
    return pool.filter(lc, tol)


@dataclass
class FloquetGBZ:
    """A GBZ point set with its spectrum and convergence bookkeeping."""

    points: GBZCurve
    spectrum: SpectrumSet
    cutoffUsed: int
    converged: bool
    T: float | None = None
    aux: dict = field(default_factory=dict, repr=False)

    @property
    def beta(self) -> np.ndarray:
        return self.points.beta

    def summary(self, imTol: float | None = None) -> dict:
        from .observables import eta_fraction

        n_complex = 0
        if len(self.spectrum):
            n_complex = int(round(eta_fraction(self.spectrum, imTol) * len(self.spectrum)))
        return {
            "T": self.T,
            "cutoffUsed": int(self.cutoffUsed),
            "converged": bool(self.converged),
            "n_points": int(len(self.points)),
            "n_complex_E": n_complex,
        }


def static_gbz(h, thetaGrid: int = 720, tol: float = GAP_TOL) -> FloquetGBZ:
    """GBZ of a static non-Bloch Hamiltonian (``M``-th and ``M+1``-th roots of equal modulus)."""
    f = _as_charpoly(h)
    cands = agbz_points(f, 0, None, thetaGrid)
    pts = filter_candidates(f, cands, 0, None, tol)
    spec = SpectrumSet(dedupe(pts.E), None)
    return FloquetGBZ(pts, spec, 0, True, None, {0: cands})


def _aux_radius(c0: GBZCurve) -> float:
    if len(c0) == 0:
        return 1.0
    m = np.abs(c0.beta)
    return float(np.sqrt(m.min() * m.max()))


def floquet_gbz(hF, T: float, lcInit: int = 1, thetaGrid: int = 720, tol: float = GAP_TOL,
                convTol: float = CONVERGENCE_TOL, maxExtra: int = MAX_EXTRA_ZONES) -> FloquetGBZ:
    """Floquet GBZ of the effective non-Bloch Hamiltonian ``hF`` at driving period ``T``.

    With zones ``-lc..lc`` pooled, the middle pair may come from any two zones
    up to ``2 lc`` apart, so candidates are drawn from ``aGBZ_0 .. aGBZ_2lc``.
    The cutoff starts at ``lcInit`` and grows until re-filtering the same
    candidates with ``lc + 1`` moves the point set by less than ``convTol``
    (Hausdorff distance in the beta plane); ``cutoffUsed`` is the smaller one.  Gives up with
    :class:`ConvergenceError` (carrying the last result) after ``maxExtra``
    increments.
    """
    if not (T > 0 and np.isfinite(T)):
        raise ValueError("T must be a positive finite number")
    if lcInit < 1:
        raise ValueError("lcInit must be >= 1")
    f = _as_charpoly(hF)
    aux: dict[int, GBZCurve] = {0: agbz_points(f, 0, T, thetaGrid)}
    radius = _aux_radius(aux[0])

    pool = CandidatePool(f, T)
    pool.add(aux[0])

    def extend(lc: int) -> None:
        # zones -lc..lc can pair roots up to 2 lc zones apart
        for ell in range(1, 2 * lc + 1):
            if ell not in aux:
                aux[ell] = agbz_points(f, ell, T, thetaGrid, radius=radius)
                pool.add(aux[ell], ell)

    def result(pts: GBZCurve, lc: int, ok: bool) -> FloquetGBZ:
        return FloquetGBZ(pts, SpectrumSet(pts.E, T).deduplicated(), lc, ok, T, aux)

    # Stability is tested on a fixed candidate set: the curves are sampled, so
    # adding a new aGBZ only contributes extra samples of curves already present
    # unless the wider zone pool changes which roots form the middle pair.
    lc = lcInit
    extend(lc)
    prev = pool.filter(lc, tol)
    while lc < lcInit + maxExtra:
        nxt = pool.filter(lc + 1, tol)
        d = _point_set_change(prev, nxt)
        log.debug("T=%g lc=%d -> %d: Hausdorff %.3e", T, lc, lc + 1, d)
        if d < convTol:
            return result(prev, lc, True)
        lc += 1
        extend(lc)
        prev = pool.filter(lc, tol)
    raise ConvergenceError(f"Floquet GBZ not converged up to cutoff {lc}", partial=result(prev, lc, False))


def _point_set_change(a: GBZCurve, b: GBZCurve) -> float:
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return np.inf
    return hausdorff(a.beta, b.beta)


def gbz_spectrum(g: FloquetGBZ) -> SpectrumSet:
    """Energies on a converged GBZ, folded into the first quasienergy zone and deduplicated."""
    if not g.converged:
        raise ValueError("spectrum requested from an unconverged GBZ")
    return g.spectrum


# --- critical period -------------------------------------------------------


@dataclass
class CriticalPeriodResult:
    """``Tc`` with the bracket it was bisected in and the sampled gap function.

    ``gapFunction`` rows are ``(T, d, crossed)``: ``d`` is the smallest
    log-modulus distance between a root of ``f(., E + 2 pi l / T)`` (l = +-1)
    and the static GBZ circle through the matched energy ``E``.
    """

    Tc: float
    bracket: tuple[float, float]
    gapFunction: np.ndarray
    touchE: complex = np.nan
    touchBeta: complex = np.nan
    touchCurvature: float = np.nan


@dataclass
class _GapProbe:
    d: float
    crossed: bool
    j: int
    E: complex
    beta: complex


class _StaticReference:
    """Static GBZ energies and middle moduli, densified on demand near a point."""

    def __init__(self, f: CharPoly, thetaGrid: int):
        self.f = f
        g = static_gbz(f, thetaGrid)
        self.step = 2 * np.pi / thetaGrid
        self._set(g.points)

    def _set(self, pts: GBZCurve):
        idx = _snap_unique(np.zeros(len(pts)), pts.E, 1e-10)
        self.E = pts.E[idx]
        self.theta = pts.theta[idx]
        self.r = np.abs(pts.beta[idx])

    def densify(self, theta0: float, n: int = 32):
        th = theta0 + self.step * np.linspace(-2, 2, n)
        th = th[np.abs(np.mod(th + np.pi, 2 * np.pi) - np.pi) > 1e-9]
        new = filter_candidates(self.f, GBZCurve.concat(_sweep(self.f, 0, 0.0, th, 1.0)), 0, None)
        if len(new):
            idx = _snap_unique(np.zeros(len(new)), new.E, 1e-10)
            self.E = np.concatenate([self.E, new.E[idx]])
            self.theta = np.concatenate([self.theta, new.theta[idx]])
            self.r = np.concatenate([self.r, np.abs(new.beta[idx])])


def _probe(ref: _StaticReference, T: float, delta: float = CROSS_TOL) -> _GapProbe:
    f, M = ref.f, ref.f.M
    best = _GapProbe(np.inf, False, -1, np.nan, np.nan)
    logr = np.log(ref.r)
    for s in (2 * np.pi / T, -2 * np.pi / T):
        roots, ok = laurent_roots_batch(f, ref.E + s)
        lm = np.log(np.abs(roots)) - logr[:, None]
        below = np.sum(lm < -delta, axis=1)
        above = np.sum(lm > delta, axis=1)
        crossed = ok & ((below > M) | (above > M))
        dist = np.where(ok[:, None], np.abs(lm), np.inf)
        dj = dist.min(axis=1)
        j = int(np.argmin(dj))
        if dj[j] < best.d:
            k = int(np.argmin(dist[j]))
            best = _GapProbe(float(dj[j]), best.crossed, j, complex(ref.E[j] + s), complex(roots[j, k]))
        best.crossed |= bool(np.any(crossed))
    return best


def _curvature(ref: _StaticReference, T: float, j: int) -> float:
    """Second derivative in theta of the local gap, from a parabola through nearby samples."""
    f, M = ref.f, ref.f.M
    th0 = ref.theta[j]
    near = np.nonzero(np.abs(ref.theta - th0) <= 2.5 * ref.step)[0]
    if near.size < 3:
        return np.nan
    s = 2 * np.pi / T
    vals = []
    for sign in (1, -1):
        roots, ok = laurent_roots_batch(f, ref.E[near] + sign * s)
        lm = np.abs(np.log(np.abs(roots)) - np.log(ref.r[near])[:, None])
        vals.append(np.where(ok, lm.min(axis=1), np.inf))
    d = np.minimum(*vals)
    good = np.isfinite(d)
    if good.sum() < 3:
        return np.nan
    x = ref.theta[near][good] - th0
    return float(2 * np.polyfit(x, d[good], 2)[0])


def critical_period(hF, Tbracket: tuple[float, float], thetaGrid: int = 720, scan: int = 16,
                    Ttol: float = 1e-4) -> CriticalPeriodResult:
    """Smallest driving period at which neighbouring Floquet zones start to mix.

    Below ``Tc`` every root of ``f(beta, E +- 2 pi / T)`` stays strictly on one
    side of the static GBZ modulus ``r(E)`` in a balanced ``M``/``M`` split; at
    ``Tc`` a root reaches that modulus and crosses.  The bracket is scanned on
    ``scan`` intervals and the first crossing is bisected to ``Ttol``.
    """
    lo, hi = map(float, Tbracket)
    if not (0 < lo < hi):
        raise ValueError("Tbracket must satisfy 0 < T_lo < T_hi")
    f = _as_charpoly(hF)
    ref = _StaticReference(f, thetaGrid)
    rows: list[tuple[float, float, bool]] = []

    def evaluate(T: float) -> _GapProbe:
        p = _probe(ref, T)
        if not p.crossed and p.j >= 0 and p.d < 1e-2:
            ref.densify(ref.theta[p.j])
            p = _probe(ref, T)
        rows.append((T, p.d, p.crossed))
        return p

    Ts = np.linspace(lo, hi, scan + 1)
    first = evaluate(Ts[0])
    if first.crossed:
        raise BracketError(f"zones already mix at T_lo = {lo}; no sign change from a positive gap")
    a, b = lo, None
    for T in Ts[1:]:
        if evaluate(T).crossed:
            b = T
            break
        a = T
    if b is None:
        raise BracketError(f"no zone crossing in [{lo}, {hi}]; the gap never closes")
    while b - a > Ttol:
        mid = 0.5 * (a + b)
        if evaluate(mid).crossed:
            b = mid
        else:
            a = mid
    touch = _probe(ref, a)
    gf = np.array(sorted(rows), dtype=float)
    return CriticalPeriodResult(
        0.5 * (a + b), (a, b), gf, touch.E, touch.beta,
        _curvature(ref, a, touch.j) if touch.j >= 0 else np.nan,
    )
