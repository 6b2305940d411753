"""Stability tools for Hill equations under quasi-periodic perturbations.

The package is organized as a pipeline:

``fourier``
    sparse exponential series over a mixed frequency lattice (the shared
    data structure of everything below);
``floquet``
    unperturbed periodic problem: rotation number, normalized
    eigen-solution, and the coefficient pair of the reduced equation;
``lindstedt``
    order-by-order expansion of the reduced equation, obstruction
    constants, and the corrected rotation frequency;
``smalldiv``
    small-divisor bookkeeping: dyadic scales, smooth cutoffs, and the
    admissible-frequency scan;
``verify``
    direct numerical integration used as an independent cross-check;
``cli``
    command line driver producing CSV/JSON reports and figures.
"""

from .errors import (
    DegenerateEigenvector,
    HillqError,
    InsufficientSupport,
    NonResonanceViolation,
    NonzeroAverage,
    PhaseWindingAmbiguous,
    ProblemFormatError,
    RealityViolation,
    ResonanceFound,
    ResonantMode,
    StepTooLarge,
    TruncationBlowup,
    UnstableUnperturbed,
    ZeroDivisor,
)
from .fourier import DecayFit, FourierSeries, Frequencies, MultiIndex, zero_index

__version__ = "0.1.0"

__all__ = [
    "DecayFit",
    "FourierSeries",
    "Frequencies",
    "MultiIndex",
    "zero_index",
    "HillqError",
    "NonzeroAverage",
    "ResonantMode",
    "InsufficientSupport",
    "UnstableUnperturbed",
    "DegenerateEigenvector",
    "NonResonanceViolation",
    "TruncationBlowup",
    "RealityViolation",
    "ResonanceFound",
    "ZeroDivisor",
    "StepTooLarge",
    "PhaseWindingAmbiguous",
    "ProblemFormatError",
    "__version__",
]
