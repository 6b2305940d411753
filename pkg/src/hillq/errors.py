"""Exception types shared across the package.

Everything raised on purpose derives from :class:`HillqError`, so callers
(and the command line driver) can separate domain failures from bugs.
"""

from __future__ import annotations


class HillqError(Exception):
    """Base class for all domain errors raised by this package."""


class NonzeroAverage(HillqError):
    """A primitive was requested for a series whose mean is not zero."""


class ResonantMode(HillqError):
    """A divisor fell below the configured floor while inverting d/dt.

    Parameters
    ----------
    index : MultiIndex
        Lattice index whose divisor is too small.
    divisor : float
        The offending value of the frequency/index pairing.
    order : int or None
        Perturbation order at which the division was attempted, when known.
    """

    def __init__(self, index, divisor, order=None):
        self.index = index
        self.divisor = divisor
        self.order = order
        where = f" at order {order}" if order is not None else ""
        super().__init__(
            f"near-resonant divisor {divisor!r} for index {tuple(index)}{where}"
        )


class InsufficientSupport(HillqError):
    """Not enough populated shells to fit a decay rate."""


class UnstableUnperturbed(HillqError):
    """The unperturbed equation is not stable (|trace| >= 2)."""


class DegenerateEigenvector(HillqError):
    """The monodromy eigenproblem did not yield a usable complex eigenvector."""


class NonResonanceViolation(HillqError):
    """A divisor inside the working index box violates the non-resonance floor."""


class TruncationBlowup(HillqError):
    """Discarded tail mass exceeded the configured fraction of what was kept."""


class RealityViolation(HillqError):
    """The corrected rotation frequency picked up a non-negligible imaginary part."""


class ResonanceFound(HillqError):
    """An exact (or numerically exact) resonance was hit while scanning indices."""


class ZeroDivisor(HillqError):
    """scale_of was asked to classify an exactly zero divisor."""


class StepTooLarge(HillqError):
    """Fixed-step integration failed its step-halving self check."""


class PhaseWindingAmbiguous(HillqError):
    """A trajectory came too close to the origin to unwrap its phase."""


class ProblemFormatError(HillqError):
    """A problem description file is missing, malformed, or violates the schema."""
