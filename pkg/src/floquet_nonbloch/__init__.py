"""Floquet non-Bloch band theory for driven non-Hermitian chains."""

from .errors import (
    BracketError,
    ConditioningError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FloquetNonBlochError,
    PrecisionError,
)
from .gbz import CriticalPeriodResult, FloquetGBZ, critical_period, floquet_gbz, gbz_spectrum, static_gbz
from .laurent import CharPoly, LaurentMatrixPoly, LaurentPoly, TimedLaurentPoly, char_poly, eval_laurent, time_average
from .lattice import expm, floquet_operator, oracle_spectrum, pbc_spectrum, quasienergies
from .models import DriveProtocol, build_model
from .observables import LyapunovTrace, PhaseDiagram, eta_fraction, hausdorff, lyapunov, phase_diagram
from .polyroots import RootList, laurent_roots, middle_pair_gap, poly_roots
from .resultant import GBZCurve, agbz_points, resultant_in_E, sylvester_matrix
from .spectrum import SpectrumSet

__version__ = "0.1.0"
