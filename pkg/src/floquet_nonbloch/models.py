"""Piecewise-constant drive protocols for the three lattice models and their real-space matrices.

Hopping convention: the Laurent coefficient ``h_n`` is the amplitude of
``c_j^dagger c_{j+n}``, so in real space ``H[q j + a, q (j + n) + b] = (h_n)[a, b]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .laurent import LaurentMatrixPoly, TimedLaurentPoly

#: (cell_i, orbital_a, cell_j, orbital_b, amplitude); negative cells count from the right end.
BoundaryTerm = tuple[int, int, int, int, float]

REQUIRED = {
    "single_band": ("t1", "t2", "gamma", "V", "T", "L"),
    "two_band": ("t", "gamma", "mu", "delta", "V", "T", "L"),
    "bulk_four_step": ("t1", "t2", "gamma1", "gamma2", "T", "L"),
}

PRESETS = {
    "single_band": {"t1": 2.0, "t2": 0.15, "gamma": 0.16, "V": 0.01, "T": 0.9, "L": 80},
    "two_band": {"t": 1.0, "gamma": 0.5, "mu": 2.5, "delta": 0.1, "V": 0.01, "T": 0.5, "L": 80},
    "bulk_four_step": {"t1": 1.0, "t2": 0.08, "gamma1": 0.1, "gamma2": 0.07, "T": 7.5, "L": 40},
}

MODELS = tuple(REQUIRED)


@dataclass(frozen=True)
class Segment:
    tau: float
    bulk: LaurentMatrixPoly
    boundary: tuple[BoundaryTerm, ...] = ()


@dataclass(frozen=True)
class DriveProtocol:
    """One period of a piecewise-constant drive on a chain of ``L`` unit cells."""

    name: str
    L: int
    T: float
    segments: tuple[Segment, ...]
    bc: str = "open"
    params: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise ConfigError(f"L must be a positive integer, got {self.L!r}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ConfigError(f"T must be positive, got {self.T!r}")
        if self.bc not in ("open", "periodic"):
            raise ConfigError(f"bc must be 'open' or 'periodic', got {self.bc!r}")
        if not self.segments:
            raise ConfigError("a protocol needs at least one segment")
        if abs(sum(s.tau for s in self.segments) - 1.0) > 1e-12:
            raise ConfigError("segment fractions must sum to 1")
        if len({s.bulk.q for s in self.segments}) != 1:
            raise ConfigError("all segments must share the number of orbitals")

    @property
    def q(self) -> int:
        return self.segments[0].bulk.q

    @property
    def dim(self) -> int:
        return self.q * self.L

    def with_(self, **changes) -> "DriveProtocol":
        return replace(self, **changes)

    def timed_bulk(self) -> TimedLaurentPoly:
        return TimedLaurentPoly([(s.tau, s.bulk) for s in self.segments], self.T)

    def bulk_hamiltonian(self) -> LaurentMatrixPoly:
        """``sum_k tau_k h_k(beta)``: the effective non-Bloch Hamiltonian when the bulk segments commute."""
        out = self.segments[0].bulk * self.segments[0].tau
        for s in self.segments[1:]:
            out = out + s.bulk * s.tau
        return out

    def hamiltonians(self, scale: float = 1.0) -> list[np.ndarray]:
        """Dense segment Hamiltonians.

        ``scale = r`` applies the similarity ``S^-1 H S`` with ``S = diag(r**j)``;
        spectra are unchanged but skin-mode eigenvalue conditioning improves when
        ``r`` is near the typical GBZ modulus.
        """
        return [segment_matrix(s, self.L, self.bc, scale) for s in self.segments]

    def average_hamiltonian(self, scale: float = 1.0) -> np.ndarray:
        return sum(s.tau * H for s, H in zip(self.segments, self.hamiltonians(scale)))


def real_space(h: LaurentMatrixPoly, L: int, bc: str = "open", scale: float = 1.0) -> np.ndarray:
    """Dense ``qL x qL`` matrix of ``h`` on ``L`` cells (open or periodic boundaries)."""
    if bc == "periodic" and scale != 1.0:
        raise ValueError("a similarity scale is only defined for open boundaries")
    q = h.q
    H = np.zeros((q * L, q * L), dtype=complex)
    j = np.arange(L)
    for n, hn in h.terms().items():
        if not np.any(hn):
            continue
        if bc == "periodic":
            src, dst = j, (j + n) % L
        else:
            src = j[(j + n >= 0) & (j + n < L)]
            dst = src + n
        if src.size == 0:
            continue
        fac = float(scale) ** (dst - src)
        for a in range(q):
            for b in range(q):
                if hn[a, b] != 0:
                    np.add.at(H, (q * src + a, q * dst + b), hn[a, b] * fac)
    return H


def segment_matrix(s: Segment, L: int, bc: str = "open", scale: float = 1.0) -> np.ndarray:
    H = real_space(s.bulk, L, bc, scale)
    q = s.bulk.q
    for i, a, j, b, v in s.boundary:
        ii, jj = i % L, j % L
        H[q * ii + a, q * jj + b] += v * scale ** (jj - ii)
    return H


def _resolve(name: str, params: Mapping, preset: str | None) -> dict:
    if name not in REQUIRED:
        raise ConfigError(f"unknown model {name!r}; expected one of {', '.join(MODELS)}")
    merged = dict(PRESETS[name]) if preset == "reference" else {}
    if preset not in (None, "reference"):
        raise ConfigError(f"unknown preset {preset!r}")
    merged.update(params)
    missing = [k for k in REQUIRED[name] if k not in merged]
    if missing:
        raise ConfigError(f"model {name!r} is missing parameter(s): {', '.join(missing)}")
    out = {k: float(v) for k, v in merged.items() if k != "L"}
    L = merged["L"]
    if isinstance(L, float) and L.is_integer():
        L = int(L)
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool) or L < 1:
        raise ConfigError(f"L must be a positive integer, got {L!r}")
    out["L"] = int(L)
    return out


def bulk_hamiltonian(name: str, params: Mapping) -> LaurentMatrixPoly:
    """Effective non-Bloch Hamiltonian of a model; only bulk parameters are read."""
    p = {k: float(v) for k, v in params.items()}
    if name == "single_band":
        t1, t2, g = p["t1"], p["t2"], p["gamma"]
        return LaurentMatrixPoly.from_terms({1: t1, -1: t1, 2: t2 + g, -2: t2 - g}, 1)
    if name == "two_band":
        t, g, mu, d = p["t"], p["gamma"], p["mu"], p["delta"]
        return LaurentMatrixPoly.from_terms(
            {1: np.diag([t + g, t - g]), -1: np.diag([t - g, t + g]), 0: np.array([[mu, d], [d, -mu]])}, 2
        )
    if name == "bulk_four_step":
        return _four_step_protocol(p, 1, 1.0).bulk_hamiltonian()
    raise ConfigError(f"unknown model {name!r}")


def _four_step_protocol(p: Mapping, L: int, T: float) -> "DriveProtocol":
    t1, t2, g1, g2 = p["t1"], p["t2"], p["gamma1"], p["gamma2"]
    steps = [
        {1: t1, -1: t1},
        {1: g1, -1: -g1},
        {2: t2, -2: t2},
        {2: g2, -2: -g2},
    ]
    segs = tuple(Segment(0.25, LaurentMatrixPoly.from_terms(s, 1)) for s in steps)
    return DriveProtocol("bulk_four_step", L, T, segs)


def build_model(name: str, params: Mapping, preset: str | None = None, bc: str = "open") -> DriveProtocol:
    """Drive protocol of a named model.

    ``single_band`` and ``two_band`` are static bulks with a two-step boundary
    drive (``+V`` then ``-V`` for half a period each); ``bulk_four_step`` has
    four quarter-period bulk steps and no boundary terms.  ``preset="reference"``
    fills unspecified parameters with the reference values.
    """
    p = _resolve(name, params, preset)
    L, T = p["L"], p["T"]
    if name == "bulk_four_step":
        proto = _four_step_protocol(p, L, T)
        return replace(proto, bc=bc, params=p)
    h = bulk_hamiltonian(name, p)
    V = p["V"]
    if name == "single_band":
        edge = [(0, 0, 0, 0, 1.0), (-1, 0, -1, 0, 1.0)]
    else:
        edge = [(0, 0, 0, 1, 1.0), (0, 1, 0, 0, 1.0), (-1, 0, -1, 1, 1.0), (-1, 1, -1, 0, 1.0)]
    if bc == "periodic":
        edge = []
    segs = tuple(
        Segment(0.5, h, tuple((i, a, j, b, sign * V * v) for i, a, j, b, v in edge)) for sign in (1.0, -1.0)
    )
    return DriveProtocol(name, L, T, segs, bc, p)
