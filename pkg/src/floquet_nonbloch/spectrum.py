"""Quasienergy multisets and the zone-folding convention Re E in (-pi/T, pi/T]."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

SNAP = 1e-8


def fold(E, T: float | None) -> np.ndarray:
    """Fold the real part of ``E`` into ``(-pi/T, pi/T]``; identity for ``T=None``."""
    E = np.asarray(E, dtype=complex)
    if T is None:
        return E
    w = 2 * np.pi / T
    re = E.real - w * np.ceil((E.real - np.pi / T) / w)
    return re + 1j * E.imag


def dedupe(E: np.ndarray, cell: float = SNAP) -> np.ndarray:
    """Drop near-duplicates by snapping to a square grid; keeps sorted first occurrences."""
    E = np.asarray(E, dtype=complex)
    if E.size == 0:
        return E
    keys = np.stack([np.round(E.real / cell), np.round(E.imag / cell)], axis=1)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return E[np.sort(idx)]


@dataclass
class SpectrumSet:
    """A multiset of (quasi)energies; folded on construction when a period is given."""

    values: np.ndarray
    T: float | None = None

    def __post_init__(self):
        self.values = fold(np.atleast_1d(np.asarray(self.values, dtype=complex)), self.T)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def deduplicated(self, cell: float = SNAP) -> "SpectrumSet":
        return SpectrumSet(dedupe(self.values, cell), self.T)

    def sorted(self) -> "SpectrumSet":
        v = self.values
        return SpectrumSet(v[np.lexsort((v.imag, v.real))], self.T)

    def conjugation_residual(self) -> float:
        """Largest distance from a conjugated value to the set (0 for a PT-paired set)."""
        from .observables import directed_distance

        if len(self) == 0:
            return 0.0
        period = None if self.T is None else 2 * np.pi / self.T
        return directed_distance(np.conj(self.values), self.values, period=period)

    def to_csv(self, path, L="", model: str = "") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re_E", "im_E", "L", "T", "model"])
            T = "" if self.T is None else repr(float(self.T))
            for e in self.sorted().values:
                w.writerow([repr(float(e.real)), repr(float(e.imag)), L, T, model])

    @classmethod
    def from_csv(cls, path) -> "SpectrumSet":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        T = float(rows[0]["T"]) if rows and rows[0]["T"] else None
        return cls(np.array([complex(float(r["re_E"]), float(r["im_E"])) for r in rows]), T)
