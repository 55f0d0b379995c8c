"""Derived quantities: complex fraction eta, Hausdorff distances, phase diagrams, Lyapunov traces."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .spectrum import SpectrumSet

log = logging.getLogger(__name__)


def _points(a) -> np.ndarray:
    if isinstance(a, SpectrumSet):
        return a.values
    if hasattr(a, "beta"):
        return a.beta
    return np.atleast_1d(np.asarray(a, dtype=complex))


def directed_distance(a, b, period: float | None = None) -> float:
    """``max_{x in a} min_{y in b} |x - y|``; with ``period`` the real axis is periodic."""
    a, b = _points(a), _points(b)
    if a.size == 0 or b.size == 0:
        raise ValueError("distance to an empty point set is undefined")
    pa = np.column_stack([a.real, a.imag])
    pb = np.column_stack([b.real, b.imag])
    if period is not None:
        pa[:, 0] = np.mod(pa[:, 0], period)
        pb[:, 0] = np.mod(pb[:, 0], period)
        # tile the target set rather than use a periodic tree (imag axis is unbounded)
        pb = np.concatenate([pb + [k * period, 0.0] for k in (-1, 0, 1)])
    tree = cKDTree(pb)
    d, _ = tree.query(pa)
    return float(np.max(d))


def hausdorff(a, b, period: float | None = None) -> float:
    """Symmetric Hausdorff distance between two finite point sets in the complex plane.

    Accepts :class:`SpectrumSet`, GBZ curves (their ``beta``) or arrays.  With
    ``period`` set, real parts are compared modulo ``period`` (quasienergy zones).
    """
    return max(directed_distance(a, b, period), directed_distance(b, a, period))


def eta_fraction(s, imTol: float | None = None) -> float:
    """Fraction of values with ``|Im E| > imTol``.

    The default tolerance is ``1e-8`` times the spectral radius.
    """
    v = _points(s)
    if v.size == 0:
        raise ValueError("eta of an empty spectrum is undefined")
    if imTol is None:
        imTol = 1e-8 * max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    if imTol <= 0:
        raise ValueError("imTol must be positive")
    return float(np.count_nonzero(np.abs(v.imag) > imTol) / v.size)


# --- phase diagrams --------------------------------------------------------


@dataclass
class PhaseDiagram:
    """eta on a two-parameter grid; ``values[i, j]`` belongs to ``(axis1[i], axis2[j])``.

    Cells whose oracle run failed hold nan and are listed in ``failures``.
    """

    axis1_name: str
    axis1: np.ndarray
    axis2_name: str
    axis2: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["axis1", "axis2", "eta"])
            for i, a in enumerate(self.axis1):
                for j, b in enumerate(self.axis2):
                    v = self.values[i, j]
                    w.writerow([repr(_plain(a)), repr(_plain(b)), "" if np.isnan(v) else repr(float(v))])

    def metadata(self) -> dict:
        return {
            "axis1": {"name": self.axis1_name, "values": [_plain(a) for a in self.axis1]},
            "axis2": {"name": self.axis2_name, "values": [_plain(b) for b in self.axis2]},
            "meta": self.meta,
            "failures": self.failures,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def _eta_cell(args):
    model, params, imTol, precision = args
    from .lattice import oracle_spectrum
    from .models import build_model

    try:
        p = build_model(model, params)
        return eta_fraction(oracle_spectrum(p, precision=precision).spectrum, imTol), None
    except Exception as exc:  # recorded per cell, never fatal for the sweep
        return np.nan, f"{type(exc).__name__}: {exc}"


def _map(fn, jobs, workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def phase_diagram(model: str, sweep, fixed: dict, imTol: float | None = None, workers: int | None = 1,
                  precision="auto") -> PhaseDiagram:
    """eta from the lattice oracle on every cell of a two-parameter grid.

    ``sweep`` is ``[(name1, values1), (name2, values2)]`` (or a two-item
    mapping).  Results do not depend on ``workers``.
    """
    items = list(sweep.items()) if isinstance(sweep, dict) else list(sweep)
    if len(items) != 2:
        raise ValueError("a phase diagram needs exactly two swept parameters")
    (n1, v1), (n2, v2) = items
    v1, v2 = list(v1), list(v2)
    if len(v1) < 2 or len(v2) < 2:
        raise ValueError("each sweep axis needs at least two values")
    if n1 == n2:
        raise ValueError("the two swept parameters must differ")
    jobs = [(model, {**fixed, n1: a, n2: b}, imTol, precision) for a in v1 for b in v2]
    res = _map(_eta_cell, jobs, workers)
    vals = np.array([r[0] for r in res], dtype=float).reshape(len(v1), len(v2))
    fails = [
        {"axis1": _plain(job[1][n1]), "axis2": _plain(job[1][n2]), "error": r[1]}
        for job, r in zip(jobs, res) if r[1] is not None
    ]
    meta = {"model": model, "fixed": {k: _plain(v) for k, v in sorted(fixed.items())},
            "imTol": imTol, "precision": precision}
    return PhaseDiagram(n1, np.array(v1), n2, np.array(v2), vals, meta, fails)


def critical_size(model: str, params: dict, sizes, imTol: float | None = None, precision="auto",
                  persist: int = 1):
    """Smallest ``L`` in ``sizes`` from which eta > 0 on ``persist`` consecutive grid sizes.

    ``persist=1`` is the plain first size with a complex quasienergy.  Near the
    threshold eta flickers between zero and small positive values as ``L``
    grows, so a window of a few sizes gives a much smoother boundary.  Sizes
    are scanned upward (bisection would assume monotonicity); ``None`` means no
    qualifying run was found.
    """
    if persist < 1:
        raise ValueError("persist must be >= 1")
    start, run = None, 0
    for L in sorted(int(L) for L in sizes):
        val, err = _eta_cell((model, {**params, "L": L}, imTol, precision))
        if err is not None:
            raise RuntimeError(f"oracle failed at L={L}: {err}")
        if val > 0:
            start = L if run == 0 else start
            run += 1
            if run >= persist:
                return start
        else:
            run = 0
    return None


# --- dynamics --------------------------------------------------------------


@dataclass
class LyapunovTrace:
    """Norm growth of ``U_F^n |psi(0)>``.

    ``lambdaEst`` is the running ``logNorm / (2 t)``; :attr:`estimate` is the
    growth rate over the second half of the trace, which discards the
    transient amplification of the initial wave packet.
    """

    times: np.ndarray
    logNorm: np.ndarray
    T: float

    @property
    def lambdaEst(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.times > 0, self.logNorm / (2 * self.times), 0.0)

    @property
    def estimate(self) -> float:
        n = len(self.times) - 1
        if n < 1:
            return 0.0
        h = n // 2
        return float((self.logNorm[n] - self.logNorm[h]) / (2 * (self.times[n] - self.times[h])))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n_period", "log_norm", "lambda_est"])
            for k, (ln, lam) in enumerate(zip(self.logNorm, self.lambdaEst)):
                w.writerow([k, repr(float(ln)), repr(float(lam))])


def lyapunov(p, initSite: int | None = None, nPeriods: int = 2000, precision="double") -> LyapunovTrace:
    """Evolve ``|initSite>`` (default: first orbital of the middle cell) for ``nPeriods`` periods.

    The state is renormalised every period and the log-norms are accumulated,
    so growth rates far beyond the float range are representable.  The
    amplification is physical, so double precision tracks it well; pass a bit
    count (or ``"auto"``) to evolve in ball arithmetic instead.
    """
    from .lattice import floquet_operator, mp_floquet_matrix, required_bits

    if nPeriods < 1:
        raise ValueError("nPeriods must be >= 1")
    n = p.dim
    if initSite is None:
        initSite = p.q * (p.L // 2)
    if not 0 <= initSite < n:
        raise ValueError(f"initSite {initSite} outside the chain (0..{n - 1})")
    if precision == "auto":
        bits = required_bits(p, balanced=False)
    elif precision == "double":
        bits = 53
    else:
        bits = int(precision)
    logs = np.zeros(nPeriods + 1)
    if bits == 53:
        U = floquet_operator(p).U_F
        psi = np.zeros(n, dtype=complex)
        psi[initSite] = 1.0
        for k in range(1, nPeriods + 1):
            psi = U @ psi
            nrm2 = float(np.vdot(psi, psi).real)
            logs[k] = logs[k - 1] + np.log(nrm2)
            psi /= np.sqrt(nrm2)
    else:
        import flint

        U = mp_floquet_matrix(p.hamiltonians(), [s.tau for s in p.segments], p.T, bits)
        old = flint.ctx.prec
        flint.ctx.prec = bits
        try:
            psi = flint.acb_mat(n, 1)
            psi[initSite, 0] = 1
            for k in range(1, nPeriods + 1):
                psi = U * psi
                nrm2 = sum((abs(psi[i, 0]) ** 2 for i in range(n)), flint.arb(0))
                logs[k] = logs[k - 1] + float(nrm2.log().mid())
                psi = psi * (1 / nrm2.sqrt())
                psi = psi.mid() if hasattr(psi, "mid") else psi
        finally:
            flint.ctx.prec = old
    return LyapunovTrace(p.T * np.arange(nPeriods + 1), logs, p.T)
