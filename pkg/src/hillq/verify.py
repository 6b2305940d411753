"""Independent numerical oracle for the perturbed Hill equation.

Everything here goes the long way around on purpose: trajectories come
from direct high-order integration of ``phi'' + (p0 + eps*p1) phi = 0``
with the potential evaluated pointwise, never from the Fourier-side
machinery being checked.  The only shared ingredient is the integrator
itself, which is validated separately against closed-form solutions.

Provided probes:

* :func:`integrate_hill` -- fixed-step integration with a step-halving
  self check;
* :func:`extract_rotation` -- rotation number by least squares on the
  unwrapped argument;
* :func:`lyapunov_estimate` -- growth-rate slope of the phase-space norm;
* :func:`riccati_residual` -- sup-norm defect of a truncated series in
  the reduced first-order equation;
* :func:`reconstruct_phi` -- the series-side solution, assembled from a
  Floquet solution and a perturbation expansion for comparison against
  the integrated one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._integrate import solve_hill
from ._io import f17
from .errors import PhaseWindingAmbiguous, StepTooLarge
from .floquet import FloquetData, RiccatiSystem, _lift
from .fourier import FourierSeries
from .lindstedt import PerturbationResult

__all__ = [
    "TrajectoryProbe",
    "RotationFit",
    "integrate_hill",
    "extract_rotation",
    "lyapunov_estimate",
    "riccati_residual",
    "truncated_series",
    "reconstruct_phi",
]


@dataclass(frozen=True)
class TrajectoryProbe:
    """Sampled trajectory ``(t, phi, phi')`` of the second-order equation."""

    horizon: float
    step: float
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    derivs: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = len(self.times)
        if n < 2 or len(self.values) != n or len(self.derivs) != n:
            raise ValueError("probe needs >= 2 aligned samples")
        if abs(self.step * (n - 1) - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ValueError("step * count must equal the horizon")
        finite = (
            np.all(np.isfinite(self.times))
            and np.all(np.isfinite(self.values))
            and np.all(np.isfinite(self.derivs))
        )
        if not finite:
            raise ValueError("probe samples overflowed")

    @property
    def samples(self):
        return list(zip(self.times, self.values, self.derivs))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "re_phi", "im_phi", "abs_phi"])
            for t, y in zip(self.times, self.values):
                writer.writerow([f17(t), f17(y.real), f17(y.imag), f17(abs(y))])


class RotationFit(NamedTuple):
    value: float
    stderr: float


def integrate_hill(
    p0,
    p1,
    eps: float,
    fd: FloquetData | None,
    horizon: float,
    step: float,
    *,
    y0: complex | None = None,
    v0: complex | None = None,
    rel_tol: float = 1e-8,
) -> TrajectoryProbe:
    """Integrate the perturbed equation and self-check the step size.

    The potential is evaluated directly from the two potentials (``p1``
    may be None when ``eps`` is 0).  Initial conditions default to the
    unperturbed eigen-solution ``(1, phi0'(0))`` read off ``fd``; pass
    ``y0``/``v0`` to compare against a reconstructed series instead.

    Raises
    ------
    StepTooLarge
        If halving the step moves the endpoint by more than ``rel_tol``
        in relative phase-space norm.
    """
    if horizon <= 0 or step <= 0:
        raise ValueError("horizon and step must be positive")
    nsteps = max(1, round(horizon / step))
    h = horizon / nsteps

    if p1 is None or eps == 0.0:
        def pot(t):
            return p0.evaluate(t)
    else:
        def pot(t):
            return p0.evaluate(t) + eps * p1.evaluate(t)

    if y0 is None:
        y0 = 1.0 + 0.0j
    if v0 is None:
        v0 = fd.deriv0 if fd is not None else 1.0j

    times, ys, vs = solve_hill(pot, 0.0, h, nsteps, y0, v0)
    _, y2, v2 = solve_hill(pot, 0.0, h / 2.0, 2 * nsteps, y0, v0)
    ref = math.hypot(abs(y2[-1]), abs(v2[-1]))
    diff = math.hypot(abs(ys[-1] - y2[-1]), abs(vs[-1] - v2[-1]))
    if diff > rel_tol * max(ref, 1e-300):
        raise StepTooLarge(
            f"halving step {h:.3e} moved the endpoint by {diff / max(ref, 1e-300):.3e} "
            f"relative (tolerance {rel_tol:.1e})"
        )
    return TrajectoryProbe(
        horizon=float(horizon),
        step=h,
        times=np.asarray(times, dtype=float),
        values=np.asarray(ys, dtype=complex),
        derivs=np.asarray(vs, dtype=complex),
    )


def extract_rotation(probe: TrajectoryProbe, *, zero_tol: float = 1e-6) -> RotationFit:
    """Rotation number: least-squares slope of the unwrapped argument.

    Needs no frequency information at all, which is what makes it an
    independent check.  Refuses trajectories whose modulus dips within
    ``zero_tol`` (relative) of zero -- the winding is ill-defined there --
    and trajectories whose per-sample phase step reaches pi (aliased).
    """
    phi = probe.values
    t = probe.times
    if len(t) < 3:
        raise ValueError("need >= 3 samples to fit a slope")
    mags = np.abs(phi)
    if np.min(mags) < zero_tol * np.max(mags):
        raise PhaseWindingAmbiguous(
            f"|phi| dips to {np.min(mags):.3e} of its maximum; winding undefined"
        )
    steps = np.angle(phi[1:] / phi[:-1])
    if np.max(np.abs(steps)) >= math.pi * (1.0 - 1e-9):
        raise PhaseWindingAmbiguous("phase advances >= pi per sample; unwrap aliased")
    theta = np.empty(len(t))
    theta[0] = np.angle(phi[0])
    theta[1:] = theta[0] + np.cumsum(steps)

    slope, intercept = np.polyfit(t, theta, 1)
    resid = theta - (slope * t + intercept)
    dof = len(t) - 2
    spread = float(np.sum((t - np.mean(t)) ** 2))
    stderr = math.sqrt(max(float(resid @ resid) / dof, 0.0) / spread)
    return RotationFit(value=float(slope), stderr=stderr)


def lyapunov_estimate(probe: TrajectoryProbe) -> float:
    """Least-squares slope of ``log ||(phi, phi')||`` against time."""
    norm = np.hypot(np.abs(probe.values), np.abs(probe.derivs))
    slope, _ = np.polyfit(probe.times, np.log(norm), 1)
    return float(slope)


def riccati_residual(
    u: FourierSeries,
    system: RiccatiSystem,
    eps: float,
    *,
    grid: int = 64,
    window: float = 16.0 * math.pi,
) -> float:
    """Sup over sampled times of ``|u' - R - eps*Q*u^2|``.

    The derivative is the exact derivative series, so the residual
    measures truncation alone, not differencing error.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    freqs = system.freqs
    times = np.linspace(0.0, window, grid)
    du = u.derivative(freqs).evaluate(freqs, times)
    src = system.source.evaluate(freqs, times)
    qv = system.quad.evaluate(freqs, times)
    uv = u.evaluate(freqs, times)
    return float(np.max(np.abs(du - src - eps * qv * uv * uv)))


def truncated_series(result: PerturbationResult, eps: float) -> FourierSeries:
    """The eps-weighted sum of the expansion orders, ``sum eps^k u^(k)``."""
    if not result.orders:
        raise ValueError("empty expansion")
    acc = result.orders[0]
    for k, term in enumerate(result.orders[1:], start=1):
        acc = acc + term.scale(eps**k)
    return acc


def reconstruct_phi(
    fd: FloquetData,
    result: PerturbationResult,
    eps: float,
    t,
    *,
    with_derivative: bool = False,
):
    """Series-side solution ``phi0 * exp(i * integral of the correction)``.

    The log-derivative correction is ``i*eps*Q*u`` with ``u`` the
    truncated expansion sum.  Its average is the rotation shift (linear
    phase); the rest integrates to a bounded quasi-periodic phase via the
    zero-average primitive.  The quadratic carrier cancels in ``Q*u``
    (every index lands on carrier component 0), so the output only
    involves the drive and base frequencies plus the shifted rotation.
    """
    freqs = result.freqs
    u_total = truncated_series(result, eps)
    quad = _lift(fd.inv_square, len(freqs.drive))
    log_freq = quad.mul(u_total).scale(1j * eps)
    mean = log_freq.average()
    bounded = log_freq.remove_average().primitive(freqs)

    tt = np.asarray(t, dtype=float)
    f0 = fd.frequencies()
    phi0 = np.exp(1j * (fd.rotation * tt + fd.phase.evaluate(f0, tt)))
    wobble = bounded.evaluate(freqs, tt) - bounded.evaluate(freqs, 0.0)
    phi = phi0 * np.exp(1j * (mean * tt + wobble))
    if not with_derivative:
        if np.ndim(t) == 0:
            return complex(phi)
        return phi
    dphi = 1j * phi * (fd.inst_freq.evaluate(f0, tt) + log_freq.evaluate(freqs, tt))
    if np.ndim(t) == 0:
        return complex(phi), complex(dphi)
    return phi, dphi
