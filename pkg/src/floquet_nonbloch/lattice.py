"""Exact diagonalization of real-space Floquet operators.

Skin-effect spectra are exponentially ill-conditioned in the chain length, so
double precision is only trusted when the eigenvalue condition numbers say so;
otherwise the Floquet operator is rebuilt and diagonalized with ball
arithmetic (python-flint) at increasing working precision until every
eigenvalue enclosure is tighter than the requested tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConditioningError, PrecisionError
from .laurent import LaurentMatrixPoly, eval_laurent
from .models import DriveProtocol
from .spectrum import SpectrumSet

log = logging.getLogger(__name__)

_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0, 10559470521600.0, 670442572800.0, 33522128640.0,
    1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152
_MAX_SQUARINGS = 1024

EIG_RESIDUAL_RTOL = 1e-10
DEFAULT_E_TOL = 1e-7
MAX_BITS = 2048


def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expm needs a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("expm input has non-finite entries")
    n = A.shape[0]
    if n == 0:
        return A.copy()
    norm = float(np.linalg.norm(A, 1))
    if norm == 0:
        return np.eye(n, dtype=complex)
    s = 0
    if norm > _THETA13:
        s = int(np.ceil(np.log2(norm / _THETA13)))
    if s > _MAX_SQUARINGS:
        raise ConditioningError(f"expm: 1-norm {norm:.3e} is too large to scale")
    A = A / 2.0**s
    b = _PADE13
    ident = np.eye(n, dtype=complex)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    X = np.linalg.solve(V - U, V + U)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            X = X @ X
    if not np.all(np.isfinite(X)):
        raise ConditioningError(f"expm overflowed for a matrix of 1-norm {norm:.3e}")
    return X


@dataclass
class FloquetOperatorResult:
    U_F: np.ndarray
    U_ave: np.ndarray
    deltaU: np.ndarray


def floquet_operator(p: DriveProtocol, scale: float = 1.0) -> FloquetOperatorResult:
    """``U_F = U_K ... U_1`` with ``U_k = exp(-i H_k tau_k T)``, plus the time-averaged propagator."""
    Hs = p.hamiltonians(scale)
    U = np.eye(p.dim, dtype=complex)
    for seg, H in zip(p.segments, Hs):
        U = expm(-1j * p.T * (seg.tau * H)) @ U
    Have = Hs[0] * p.segments[0].tau
    for seg, H in zip(p.segments[1:], Hs[1:]):
        Have = Have + seg.tau * H
    Uave = expm(-1j * p.T * Have)
    return FloquetOperatorResult(U, Uave, U - Uave)


def to_quasienergy(lam, T: float) -> np.ndarray:
    """``E = i log(lambda) / T`` folded to ``Re E in (-pi/T, pi/T]``."""
    from .spectrum import fold

    lam = np.asarray(lam, dtype=complex)
    with np.errstate(divide="ignore"):
        return fold(1j * np.log(lam) / T, T)


def _eig_checked(U: np.ndarray, left: bool = False):
    if left:
        lam, vl, vr = sla.eig(U, left=True, right=True)
    else:
        lam, vr = sla.eig(U)
        vl = None
    if not np.all(np.isfinite(lam)):
        raise ConditioningError("eigensolver returned non-finite eigenvalues")
    res = np.linalg.norm(U @ vr - vr * lam, axis=0) / np.linalg.norm(vr, axis=0)
    normU = np.linalg.norm(U, 2) if U.shape[0] else 0.0
    if np.any(res > EIG_RESIDUAL_RTOL * max(normU, 1.0)):
        raise ConditioningError(f"eigenpair residual {res.max():.3e} exceeds {EIG_RESIDUAL_RTOL} * |U|")
    return lam, vl, vr


def quasienergies(U, T: float) -> SpectrumSet:
    """Quasienergies of a Floquet operator in double precision (no conditioning guard)."""
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("U must be square")
    lam, _, _ = _eig_checked(U)
    return SpectrumSet(to_quasienergy(lam, T), T)


def eigen_condition(U: np.ndarray):
    """Eigenvalues and their condition numbers ``|l| |r| / |l^H r|``."""
    lam, vl, vr = _eig_checked(U, left=True)
    num = np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0)
    den = np.abs(np.sum(vl.conj() * vr, axis=0))
    with np.errstate(divide="ignore"):
        return lam, np.where(den > 0, num / den, np.inf)


def pbc_spectrum(hF: LaurentMatrixPoly, kGrid: int) -> SpectrumSet:
    """Eigenvalues of ``hF(e^{ik})`` on ``kGrid`` equally spaced momenta."""
    if kGrid < 2:
        raise ValueError("kGrid must be >= 2")
    k = 2 * np.pi * np.arange(kGrid) / kGrid
    return SpectrumSet(np.linalg.eigvals(eval_laurent(hF, np.exp(1j * k))).reshape(-1))


# --- precision-managed oracle ----------------------------------------------


@dataclass
class OracleSpectrum:
    """Quasienergies with per-value error bounds and the precision that produced them."""

    spectrum: SpectrumSet
    errors: np.ndarray
    bits: int
    scale: float

    @property
    def values(self) -> np.ndarray:
        return self.spectrum.values


def mp_floquet_matrix(Hs, taus, T: float, bits: int):
    """Time-ordered product of ``exp(-i H_k tau_k T)`` as a flint ``acb_mat`` at ``bits`` precision."""
    import flint

    old = flint.ctx.prec
    flint.ctx.prec = bits
    try:
        n = Hs[0].shape[0]
        U = None
        for H, tau in zip(Hs, taus):
            A = -1j * T * tau * H
            M = flint.acb_mat(n, n, [flint.acb(z.real, z.imag) for z in A.reshape(-1)])
            Uk = M.exp()
            U = Uk if U is None else Uk * U
        return U
    finally:
        flint.ctx.prec = old


def _mp_eigenvalues(Hs, taus, T: float, bits: int, certify: bool = True):
    """Eigenvalues of the time-ordered product in ball arithmetic: (midpoints, radii)."""
    import flint

    U = mp_floquet_matrix(Hs, taus, T, bits)
    old = flint.ctx.prec
    flint.ctx.prec = bits
    try:
        if certify:
            ev = U.eig(nonstop=True)
            rad = np.array([float(abs(e).rad()) if e.is_finite() else np.inf for e in ev])
        else:
            ev = U.eig(nonstop=True, algorithm="approx")
            rad = np.zeros(len(ev))
        mid = np.array([complex(e.mid()) for e in ev])
        return mid, rad
    finally:
        flint.ctx.prec = old


def required_bits(p: DriveProtocol, tol: float = DEFAULT_E_TOL, balanced: bool = True) -> int:
    """Working precision predicted from the skin-mode conditioning; 53 means double suffices."""
    r, growth = balance_scale(p)
    if not balanced and p.bc == "open" and growth > 0:
        # without rescaling, modes grow like |beta / 1|^j on both sides of the unit circle
        growth = growth + abs(np.log(r))
    log2_kappa = growth * p.L / np.log(2)
    eps = np.finfo(float).eps
    if log2_kappa + np.log2(eps * max(p.dim, 1)) < np.log2(tol / 100):
        return 53
    return 53 + int(np.ceil(log2_kappa - np.log2(tol))) + 16


_SCALE_CACHE: dict[tuple, tuple[float, float]] = {}


def balance_scale(p: DriveProtocol, thetaGrid: int = 360) -> tuple[float, float]:
    """``(r, s)``: balancing radius and predicted conditioning exponent of the chain.

    ``r`` is the geometric mean of the extreme static-GBZ moduli of the bulk.
    After rescaling by ``r``, skin modes grow at most like ``exp(s j)`` with
    ``s = log(r_max / r_min) / 2``, so eigenvalue condition numbers are about
    ``exp(s L)``.  A periodic chain has no skin modes (``r = 1, s = 0``); if the
    solver fails, ``s = 1`` is assumed so that multiprecision is used.
    """
    from .gbz import static_gbz

    h = p.bulk_hamiltonian()
    key = (p.bc, np.asarray(h.coeffs).tobytes(), thetaGrid)
    if key in _SCALE_CACHE:
        return _SCALE_CACHE[key]
    out = (1.0, 0.0)
    if p.bc == "open":
        try:
            g = static_gbz(h, thetaGrid)
            m = np.abs(g.points.beta)
            if m.size:
                out = (float(np.sqrt(m.min() * m.max())), float(0.5 * np.log(m.max() / m.min())))
        except Exception as exc:  # the oracle must not depend on the solver succeeding
            log.debug("balance scale unavailable: %s", exc)
            out = (1.0, 1.0)
    _SCALE_CACHE[key] = out
    return out


_BITS_MEMO: dict[tuple, int] = {}


def oracle_spectrum(p: DriveProtocol, precision="auto", tol: float = DEFAULT_E_TOL,
                    scale: float | str | None = "auto") -> OracleSpectrum:
    """Quasienergies of ``U_F`` for the protocol, accurate to ``tol`` in E.

    ``precision`` is ``"double"``, an integer number of bits, or ``"auto"``.
    Auto uses double precision when the predicted eigenvalue condition number
    (see :func:`balance_scale`) leaves a hundredfold margin, and otherwise ball
    arithmetic with certified eigenvalue enclosures, raising the precision by
    half until every enclosure radius (mapped to E) is below ``tol``.  The
    certified precision is remembered per model and size; later runs at that
    size use it with uncertified (approximate) eigenvalues.
    ``scale="auto"`` rescales the chain by the balancing radius first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r, _ = balance_scale(p)
    if scale != "auto":
        r = float(scale or 1.0)
    if p.bc != "open":
        r = 1.0
    taus = [seg.tau for seg in p.segments]
    T = p.T

    def finish(lam, err_lam, bits):
        E = to_quasienergy(lam, T)
        with np.errstate(divide="ignore", invalid="ignore"):
            err = np.where(np.abs(lam) > 0, err_lam / (np.abs(lam) * T), np.inf)
        return OracleSpectrum(SpectrumSet(E, T), err, bits, r)

    eps = np.finfo(float).eps
    start = required_bits(p, tol, balanced=scale == "auto")
    if precision == "double" or (precision == "auto" and start == 53):
        U = floquet_operator(p, r).U_F
        lam, kappa = eigen_condition(U)
        err = kappa * eps * np.linalg.norm(U, 2) * max(p.dim, 1)
        return finish(lam, err, 53)

    Hs = p.hamiltonians(r)
    if precision != "auto":
        bits = int(precision)
        if bits < 53:
            raise ValueError("precision must be at least 53 bits")
        mid, rad = _mp_eigenvalues(Hs, taus, T, bits)
        return finish(mid, rad, bits)

    memo_key = (p.name, p.dim, round(r, 6), round(tol, 15))
    if memo_key in _BITS_MEMO:
        bits = _BITS_MEMO[memo_key]
        mid, _ = _mp_eigenvalues(Hs, taus, T, bits, certify=False)
        return finish(mid, np.full(len(mid), np.nan), bits)
    bits = start
    while bits <= MAX_BITS:
        mid, rad = _mp_eigenvalues(Hs, taus, T, bits)
        out = finish(mid, rad, bits)
        if np.all(np.isfinite(out.errors)) and np.all(out.errors < tol):
            # a margin keeps neighbouring parameter values (same size) resolvable uncertified
            _BITS_MEMO[memo_key] = bits + 16
            return out
        log.debug("oracle at %d bits not resolved (max error %.3e)", bits, np.max(out.errors))
        bits = int(bits * 1.5)
    raise PrecisionError(f"eigenvalues not resolved to {tol} within {MAX_BITS} bits")
