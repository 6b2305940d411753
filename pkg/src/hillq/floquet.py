"""Unperturbed periodic problem: rotation number and reduced coefficients.

For a stable Hill equation ``y'' + p0(t) y = 0`` with ``p0`` periodic, the
elliptic eigen-solution can be written ``phi0(t) = exp(i*rot*t + i*psi(t))``
with ``psi`` periodic and ``rot`` the rotation number.  This module computes

* the monodromy matrix and its trace (stability test),
* ``rot`` on the branch consistent with the actual phase winding of the
  eigen-solution (so that the logarithmic derivative really has mean
  ``rot`` and ``phi0 * exp(-i*rot*t)`` really is periodic),
* spectral data of the eigen-solution: the periodic series of the
  instantaneous frequency ``-i * phi0'/phi0``, of the phase ``psi``, and of
  ``phi0^2`` and ``phi0^-2``,
* the coefficient pair of the reduced first-order equation driven by a
  quasi-periodic perturbation: ``u' = source + eps * quad * u**2``.

Everything is sampled on one period with the fixed-step integrator and
converted to sparse series by FFT; coefficients below 1e-13 are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ._integrate import chain, stage_times, step_matrices, _propagate
from .errors import (
    DegenerateEigenvector,
    NonResonanceViolation,
    UnstableUnperturbed,
)
from .fourier import FourierSeries, Frequencies, MultiIndex

__all__ = [
    "PeriodicPotential",
    "DrivePotential",
    "FloquetData",
    "RiccatiSystem",
    "solve_floquet",
    "riccati_coefficients",
]

#: DFT coefficients below this absolute size are discarded.
SPECTRAL_FLOOR = 1e-13


def _check_symmetry(coeffs, negate):
    scale = max((abs(c) for c in coeffs.values()), default=0.0)
    tol = 1e-12 * max(1.0, scale)
    for key, c in coeffs.items():
        mirror = coeffs.get(negate(key), 0j)
        if abs(mirror - c.conjugate()) > tol:
            raise ValueError(f"coefficients are not conjugate-symmetric at {key!r}")


@dataclass(frozen=True)
class PeriodicPotential:
    """Real periodic coefficient ``p(t) = sum_n c_n exp(i n freq t)``."""

    freq: float
    coeffs: Mapping[int, complex]

    def __post_init__(self):
        if self.freq <= 0:
            raise ValueError("freq must be positive")
        clean = {int(n): complex(c) for n, c in self.coeffs.items() if c != 0}
        _check_symmetry(clean, lambda n: -n)
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def constant(cls, value: float, freq: float) -> "PeriodicPotential":
        return cls(freq, {0: complex(value)})

    @classmethod
    def cosine(cls, freq: float, mean: float, amplitude: float, harmonic: int = 1):
        return cls(freq, {0: complex(mean), harmonic: amplitude / 2, -harmonic: amplitude / 2})

    @property
    def period(self) -> float:
        return 2 * math.pi / self.freq

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        for n, c in sorted(self.coeffs.items()):
            total += c * np.exp(1j * (n * self.freq) * t)
        return total.real


@dataclass(frozen=True)
class DrivePotential:
    """Real quasi-periodic drive ``p(t) = sum_m c_m exp(i <m, freqs> t)``."""

    freqs: tuple[float, ...]
    coeffs: Mapping[tuple[int, ...], complex]

    def __post_init__(self):
        object.__setattr__(self, "freqs", tuple(float(w) for w in self.freqs))
        clean = {}
        for m, c in self.coeffs.items():
            m = tuple(int(k) for k in m)
            if len(m) != len(self.freqs):
                raise ValueError(f"mode {m} does not match {len(self.freqs)} drive frequencies")
            if c != 0:
                clean[m] = complex(c)
        _check_symmetry(clean, lambda m: tuple(-k for k in m))
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def cosine(cls, freqs, amplitude: float = 1.0, mode=None, mean: float = 0.0):
        freqs = tuple(freqs)
        if mode is None:
            mode = (1,) + (0,) * (len(freqs) - 1)
        mode = tuple(mode)
        coeffs = {mode: amplitude / 2, tuple(-k for k in mode): amplitude / 2}
        if mean:
            coeffs[(0,) * len(freqs)] = complex(mean)
        return cls(freqs, coeffs)

    @property
    def dim(self) -> int:
        return len(self.freqs)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        w = np.array(self.freqs)
        for m, c in sorted(self.coeffs.items()):
            total += c * np.exp(1j * float(np.dot(m, w)) * t)
        return total.real

    def series(self, drive_dim: int | None = None) -> FourierSeries:
        if drive_dim is None:
            drive_dim = self.dim
        if drive_dim != self.dim:
            raise ValueError("drive_dim must match the number of drive frequencies")
        return FourierSeries(
            {MultiIndex(m, 0, 0): c for m, c in self.coeffs.items()},
            drive_dim,
            is_real=True,
        )


@dataclass(frozen=True)
class FloquetData:
    """Spectral description of the stable unperturbed problem.

    Attributes
    ----------
    base_freq : float
        Frequency of the periodic coefficient.
    rotation : float
        Rotation number of the elliptic eigen-solution (positive branch,
        winding-corrected so the periodic factorization below is exact).
    trace : float
        Trace of the monodromy matrix (|trace| < 2, or nothing is built).
    inst_freq : FourierSeries
        Periodic series of ``-i phi0'/phi0``; its mean is ``rotation``.
    phase : FourierSeries
        Periodic phase ``psi`` with ``phi0 = exp(i*rotation*t + i*psi)``,
        normalized so ``psi(0) = 0`` (hence ``phi0(0) = 1``).
    square, inv_square : FourierSeries
        ``phi0^2`` and ``phi0^-2`` on carrier slots +2 / -2.
    deriv0 : complex
        ``phi0'(0)`` (initial slope of the normalized eigen-solution).
    min_modulus : float
        Smallest sampled ``|phi0|`` over one period (never near zero for a
        genuinely elliptic problem).
    wronskian_drift : float
        Relative drift of the sampled Wronskian; an integration health
        figure, not a model quantity.
    """

    base_freq: float
    rotation: float
    trace: float
    monodromy: np.ndarray = field(repr=False)
    inst_freq: FourierSeries = field(repr=False)
    phase: FourierSeries = field(repr=False)
    square: FourierSeries = field(repr=False)
    inv_square: FourierSeries = field(repr=False)
    deriv0: complex
    min_modulus: float
    wronskian_drift: float
    grid: int

    def frequencies(self) -> Frequencies:
        """Drive-less frequency pairing (base frequency, rotation)."""
        return Frequencies((), self.base_freq, self.rotation)


def _dft_series(samples: np.ndarray, carrier: int) -> FourierSeries:
    grid = len(samples)
    coeffs = np.fft.fft(samples) / grid
    terms = {}
    for k in range(grid):
        c = complex(coeffs[k])
        if abs(c) > SPECTRAL_FLOOR:
            n = k if k < grid // 2 else k - grid
            terms[MultiIndex((), n, carrier)] = c
    return FourierSeries(terms, 0)


def solve_floquet(
    p0: PeriodicPotential, grid: int = 1024, *, divisor_floor: float | None = None
) -> FloquetData:
    """Analyze the unperturbed problem on a power-of-two period grid.

    Raises
    ------
    UnstableUnperturbed
        If the monodromy trace has modulus >= 2.
    DegenerateEigenvector
        If no cleanly elliptic eigenvector can be extracted, or if the
        integrated phase advance contradicts the multiplier.
    """
    if grid < 256 or grid & (grid - 1):
        raise ValueError("grid must be a power of two, at least 256")
    period = p0.period
    h = period / grid
    pv = p0.evaluate(stage_times(0.0, h, grid).ravel()).reshape(grid, 11)
    steps = step_matrices(pv, h)
    mono = chain(steps)
    tr = mono[0, 0] + mono[1, 1]
    if abs(tr) >= 2.0:
        raise UnstableUnperturbed(f"monodromy trace {tr:.12g} has modulus >= 2")
    sigma = math.acos(max(-1.0, min(1.0, tr / 2.0)))
    if abs(mono[0, 1]) < 1e-14 * float(np.abs(mono).max()):
        raise DegenerateEigenvector("monodromy is numerically triangular")
    # Eigenvector of the (real) monodromy normalized to phi0(0) = 1, branch
    # chosen so the phase rotates in the positive sense (positive Wronskian).
    v0 = complex(
        (math.cos(sigma) - mono[0, 0]) / mono[0, 1],
        math.copysign(math.sin(sigma), mono[0, 1]) / mono[0, 1],
    )
    phi_all, dphi_all = _propagate(steps, 1.0 + 0j, v0)

    # Rotation number: total unwrapped phase advance over one period, snapped
    # to the nearest value consistent with the multiplier exp(+-i*sigma).
    theta = np.unwrap(np.angle(phi_all))
    advance = float(theta[-1] - theta[0])
    best = None
    for s in (1.0, -1.0):
        k = round((advance - s * sigma) / (2 * math.pi))
        cand = s * sigma + 2 * math.pi * k
        if best is None or abs(cand - advance) < abs(best - advance):
            best = cand
    if abs(best - advance) > 0.05:
        raise DegenerateEigenvector(
            f"phase advance {advance:.6f} inconsistent with multiplier argument {sigma:.6f}"
        )
    if best <= 0:
        raise DegenerateEigenvector("non-positive phase advance for the positive branch")
    rotation = best / period

    phi = phi_all[:-1]
    dphi = dphi_all[:-1]
    tgrid = h * np.arange(grid)
    unwind = np.exp(-1j * rotation * tgrid)
    periodic_part = phi * unwind
    square = _dft_series(periodic_part**2, carrier=2)
    inv_square = _dft_series(periodic_part**-2, carrier=-2)
    inst_freq = _dft_series(-1j * dphi / phi, carrier=0)

    freqs0 = Frequencies((), p0.freq, rotation)
    primitive = inst_freq.remove_average().primitive(freqs0, divisor_floor)
    offset = primitive.evaluate(freqs0, 0.0)
    phase = primitive + FourierSeries.constant(-offset, 0)

    wronskian = np.imag(np.conj(phi) * dphi)
    drift = float(np.max(np.abs(wronskian - wronskian[0])) / abs(wronskian[0]))

    return FloquetData(
        base_freq=p0.freq,
        rotation=rotation,
        trace=float(tr),
        monodromy=mono,
        inst_freq=inst_freq,
        phase=phase,
        square=square,
        inv_square=inv_square,
        deriv0=v0,
        min_modulus=float(np.min(np.abs(phi))),
        wronskian_drift=drift,
        grid=grid,
    )


@dataclass(frozen=True)
class RiccatiSystem:
    """Coefficient pair of the reduced equation ``u' = source + eps*quad*u^2``.

    ``source`` lives on carrier slot +2, ``quad`` on carrier slot -2, and
    ``freqs`` pairs their lattice against (drive, base, rotation).
    """

    quad: FourierSeries
    source: FourierSeries
    freqs: Frequencies


def _lift(series: FourierSeries, drive_dim: int) -> FourierSeries:
    pad = (0,) * drive_dim
    return FourierSeries(
        {MultiIndex(pad, i.base, i.carrier): c for i, c in series.terms.items()},
        drive_dim,
        is_real=series.is_real,
    )


def _reachable_projections(source, quad, cutoff):
    """Boolean grid of (drive, base) points reachable by the expansion.

    The expansion only ever creates indices with carrier exactly +2, built
    from a source index plus repeated (quad + two previous) sums, so the
    reachable set is the closure of supp(source) under
    ``x -> q + x1 + x2`` projected to the (drive, base) sublattice and
    pruned to l1 <= cutoff - 2.  The pair-sum step is a boolean dilation,
    done densely with FFTs.
    """
    bound = cutoff - 2
    if bound < 0:
        return None, 0
    dim = source.drive_dim + 1
    size = 2 * bound + 1
    grid = np.zeros((size,) * dim, dtype=bool)
    axes = np.indices(grid.shape)
    l1_grid = np.zeros(grid.shape, dtype=int)
    for ax in axes:
        l1_grid += np.abs(ax - bound)
    inside = l1_grid <= bound

    def coords(index):
        return tuple(np.array(index.drive + (index.base,)) + bound)

    for idx in source.support():
        proj_l1 = idx.l1() - 2
        if proj_l1 <= bound:
            grid[coords(idx)] = True
    grid &= inside
    shifts = [np.array(q.drive + (q.base,)) for q in quad.support()]
    full = tuple(2 * size - 1 for _ in range(dim))
    all_axes = tuple(range(dim))
    while True:
        fwd = np.fft.rfftn(grid.astype(float), s=full, axes=all_axes)
        conv = np.fft.irfftn(fwd * fwd, s=full, axes=all_axes)
        lo, hi = bound, 3 * bound + 1
        pair = conv[(slice(lo, hi),) * dim] > 0.5
        new = np.zeros_like(grid)
        for shift in shifts:
            if any(abs(int(s)) >= size for s in shift):
                continue  # the shifted copy leaves the working box entirely
            src = [slice(max(0, -s), size - max(0, s)) for s in shift]
            dst = [slice(max(0, s), size + min(0, s)) for s in shift]
            new[tuple(dst)] |= pair[tuple(src)]
        new &= inside
        new |= grid
        if np.array_equal(new, grid):
            break
        grid = new
    return grid, bound


def riccati_coefficients(
    fd: FloquetData,
    p1: DrivePotential,
    cutoff: int | None = None,
    *,
    divisor_floor: float | None = None,
    resonance_scan: bool = True,
) -> RiccatiSystem:
    """Build the reduced-equation coefficients for a given drive.

    Parameters
    ----------
    cutoff : int or None
        l1 truncation for the convolution forming ``source`` and for the
        non-resonance screen.  ``None`` keeps everything and restricts the
        screen to the support of ``source``.
    resonance_scan : bool
        Screen every divisor the expansion can reach (within ``cutoff``)
        against the floor and raise :class:`NonResonanceViolation` early.
        Divisions are guarded again at use time regardless.

    Raises
    ------
    NonResonanceViolation
        If a reachable index pairs against the frequencies below the floor
        (default ``1e-12 * |freqs|``).
    """
    drive_dim = p1.dim
    freqs = Frequencies(p1.freqs, fd.base_freq, fd.rotation)
    if divisor_floor is None:
        divisor_floor = 1e-12 * freqs.norm()
    quad = _lift(fd.inv_square, drive_dim)
    source = p1.series(drive_dim).mul(_lift(fd.square, drive_dim), cutoff=cutoff)

    if resonance_scan:
        worst_index = None
        worst = math.inf
        if cutoff is None:
            for idx in source.support():
                d = abs(freqs.dot(idx))
                if d < worst:
                    worst, worst_index = d, idx
        else:
            grid, bound = _reachable_projections(source, quad, cutoff)
            if grid is not None:
                points = np.argwhere(grid)
                for pt in points:
                    shifted = pt - bound
                    idx = MultiIndex(tuple(int(v) for v in shifted[:-1]), int(shifted[-1]), 2)
                    d = abs(freqs.dot(idx))
                    if d < worst:
                        worst, worst_index = d, idx
        if worst_index is not None and worst < divisor_floor:
            raise NonResonanceViolation(
                f"index {tuple(worst_index)} has divisor {worst:.3e} below floor {divisor_floor:.3e}"
            )
    return RiccatiSystem(quad=quad, source=source, freqs=freqs)
