"""Small-divisor bookkeeping and the admissible-frequency scan.

Three ingredients:

* dyadic *scales* classifying how small a divisor is relative to a width
  W: scale 0 means ``|x| > W/2``, scale n >= 1 means
  ``W * 2^-(n+1) < |x| <= W * 2^-n``;
* a smooth partition of unity at each scale, built from one polynomial
  smoothstep: ``rising(x) = 1`` for ``x >= W``, ``0`` for ``x <= W/2``,
  and ``falling = 1 - rising`` exactly;
* the scan itself: a perturbation strength eps is *excluded* when some
  lattice index within the search radius brings the shifted divisor

      i*<freqs,nu> - falling_n0(|<freqs,nu>|) * eps^order * coeff

  inside a window of width ``W * |nu|^-exponent``.  The shift uses the
  leading obstruction constant only, so the verdict is a first-order
  surrogate for the true admissibility region -- the report says so.

The scan cuts the eps axis into dyadic bands and reports the admissible
fraction per band, plus a least-squares fit of the excluded fraction
against ``amplitude * eps^exponent``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._io import f17
from .errors import ResonanceFound, ZeroDivisor
from .fourier import Frequencies, MultiIndex

__all__ = [
    "ScaleConfig",
    "ScanReport",
    "ScaleCensus",
    "diophantine_constant",
    "scale_of",
    "rising_cutoff",
    "falling_cutoff",
    "default_start_scale",
    "divisor_scale_census",
    "scan_admissible",
]


@dataclass(frozen=True)
class ScaleConfig:
    """Geometry of the dyadic scale decomposition.

    Attributes
    ----------
    width : float
        Transition width W of the unit cutoffs (and the base width of the
        exclusion windows).  Must not exceed the Diophantine constant of
        the frequency vector it is used with; :meth:`for_scan` enforces
        this.
    window_exponent : float
        Decay power of the per-index exclusion window ``W * |nu|^-e``.
        Must exceed the Diophantine exponent (again enforced by
        :meth:`for_scan`).
    start_scale : int or None
        Scale at which the cutoff in the scan's shift term is anchored.
        None means: derive it from the top of the eps range when the scan
        runs, via :func:`default_start_scale`.
    smoothstep_order : int
        Smoothness order of the polynomial step (1 = cubic ramp).
    scale_consts : (float, float)
        Constants (c1, c2) of the default start-scale formula
        ``ceil(window_exponent * log2(c1 + c2*log(1/eps0)))``.
    """

    width: float
    window_exponent: float
    start_scale: int | None = None
    smoothstep_order: int = 1
    scale_consts: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if not (self.width > 0):
            raise ValueError("width must be positive")
        if not (self.window_exponent > 0):
            raise ValueError("window_exponent must be positive")
        if self.smoothstep_order < 1:
            raise ValueError("smoothstep_order must be >= 1")
        if self.start_scale is not None and self.start_scale < 0:
            raise ValueError("start_scale must be >= 0")

    @classmethod
    def for_scan(
        cls,
        dio_constant: float,
        dio_exponent: float,
        dim: int,
        *,
        width: float | None = None,
        window_exponent: float | None = None,
        start_scale: int | None = None,
        smoothstep_order: int = 1,
        scale_consts: tuple[float, float] = (1.0, 1.0),
    ) -> "ScaleConfig":
        """Defaults anchored at a Diophantine pair: W = constant/3 and
        window exponent = diophantine exponent + dim + 1."""
        w = dio_constant / 3.0 if width is None else width
        e = dio_exponent + dim + 1.0 if window_exponent is None else window_exponent
        if w > dio_constant:
            raise ValueError("cutoff width must not exceed the Diophantine constant")
        if e <= dio_exponent:
            raise ValueError("window exponent must exceed the Diophantine exponent")
        return cls(
            width=w,
            window_exponent=e,
            start_scale=start_scale,
            smoothstep_order=smoothstep_order,
            scale_consts=scale_consts,
        )


def diophantine_constant(
    freqs: Frequencies, exponent: float, radius: int, *, floor: float | None = None
) -> float:
    """Exhaustive ``min |<freqs,nu>| * |nu|^exponent`` over 0 < |nu| <= radius.

    Pure Python on purpose: the pairing uses the documented left-to-right
    accumulation of :meth:`Frequencies.dot`, so an independently written
    double loop reproduces the result bit for bit.

    Raises
    ------
    ResonanceFound
        If some pairing falls below ``floor`` (default
        ``1e-14 * freqs.norm()``): the frequencies are (numerically)
        resonant and no useful constant exists.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if floor is None:
        floor = 1e-14 * freqs.norm()
    drive_dim = len(freqs.drive)
    best = math.inf
    span = range(-radius, radius + 1)

    def rec(prefix, budget, depth):
        nonlocal best
        if depth == drive_dim + 2:
            index = MultiIndex(tuple(prefix[:drive_dim]), prefix[drive_dim], prefix[-1])
            if index.is_zero():
                return
            d = abs(freqs.dot(index))
            if d < floor:
                raise ResonanceFound(
                    f"index {tuple(index)} pairs to {d:.3e}, below the floor {floor:.3e}"
                )
            value = d * float(index.l1()) ** exponent
            if value < best:
                best = value
            return
        for k in span:
            if abs(k) <= budget:
                rec(prefix + [k], budget - abs(k), depth + 1)

    rec([], radius, 0)
    return best


def scale_of(x: float, config: ScaleConfig) -> int:
    """Dyadic scale of a divisor: 0 for ``|x| > W/2``, else the n >= 1 with
    ``W*2^-(n+1) < |x| <= W*2^-n``."""
    ax = abs(float(x))
    if ax == 0.0:
        raise ZeroDivisor("exact zero divisor has no scale")
    r = ax / config.width
    if r > 0.5:
        return 0
    n = int(math.floor(-math.log2(r)))
    # repair floating boundary cases so the bracketing is exact
    while r > 2.0**-n:
        n -= 1
    while r <= 2.0 ** -(n + 1):
        n += 1
    return n


def _smoothstep(s: np.ndarray, order: int) -> np.ndarray:
    """Polynomial unit step on [0, 1], C^order at both ends, exact at 0/1."""
    coeffs = [
        (-1) ** n * math.comb(order + n, n) * math.comb(2 * order + 1, order - n)
        for n in range(order + 1)
    ]
    acc = np.zeros_like(s)
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc * s ** (order + 1)


def rising_cutoff(x, scale: int, config: ScaleConfig):
    """``psi_n(x)``: 1 for ``2^n x >= W``, 0 for ``2^n x <= W/2``, smooth in
    between.  Vectorised; negative arguments fall in the zero region."""
    z = np.asarray(x, dtype=float) * 2.0**scale
    s = np.clip(2.0 * z / config.width - 1.0, 0.0, 1.0)
    out = _smoothstep(s, config.smoothstep_order)
    if np.ndim(x) == 0:
        return float(out)
    return out


def falling_cutoff(x, scale: int, config: ScaleConfig):
    """``chi_n = 1 - psi_n`` exactly (complementarity is by construction)."""
    return 1.0 - rising_cutoff(x, scale, config)


def default_start_scale(config: ScaleConfig, eps0: float) -> int:
    """Scale anchoring the scan's shift cutoff, derived from the top of the
    eps range: ``ceil(window_exponent * log2(c1 + c2 * log(1/eps0)))``,
    clamped to >= 0.  One value per scan -- it must not vary with eps."""
    c1, c2 = config.scale_consts
    inner = c1 + c2 * math.log(1.0 / eps0)
    if inner <= 1.0:
        return 0
    return max(0, math.ceil(config.window_exponent * math.log2(inner)))


def _lattice(drive_dim: int, radius: int):
    """Integer points 0 < |nu| <= radius as an (M, dim) array, sorted."""
    dim = drive_dim + 2
    grids = np.meshgrid(*[np.arange(-radius, radius + 1)] * dim, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    l1 = np.abs(pts).sum(axis=1)
    keep = (l1 > 0) & (l1 <= radius)
    pts = pts[keep]
    order = np.lexsort(pts.T[::-1])
    return pts[order]


@dataclass(frozen=True)
class ScaleCensus:
    """Counts of indices whose divisor sits at each dyadic scale or deeper.

    ``constants[n]`` is ``counts[n] * 2^(n/window_exponent) / total_l1``,
    the smallest proportionality constant for which the counting bound
    ``counts[n] <= c * 2^(-n/window_exponent) * total_l1`` holds at that
    scale.  ``bounded`` is False when the constants of the populated deep
    scales spread by more than a factor of 4 (growth without bound).
    """

    counts: dict[int, int]
    constants: dict[int, float]
    total_l1: float
    bounded: bool


def divisor_scale_census(
    indices: Sequence[MultiIndex], freqs: Frequencies, config: ScaleConfig
) -> ScaleCensus:
    """Tally divisor scales over an index set (cumulative: scale >= n)."""
    scales = []
    total_l1 = 0.0
    for index in indices:
        scales.append(scale_of(freqs.dot(index), config))
        total_l1 += index.l1()
    if not scales:
        raise ValueError("empty index set")
    top = max(scales)
    counts = {}
    constants = {}
    for n in range(0, top + 1):
        c = sum(1 for s in scales if s >= n)
        counts[n] = c
        constants[n] = c * 2.0 ** (n / config.window_exponent) / total_l1
    deep = [v for n, v in constants.items() if n >= 1 and counts[n] > 0]
    bounded = True
    if len(deep) >= 2:
        bounded = max(deep) / min(deep) <= 4.0
    return ScaleCensus(counts=counts, constants=constants, total_l1=total_l1, bounded=bounded)


@dataclass(frozen=True)
class ScanReport:
    """Outcome of an admissibility scan over dyadic eps bands.

    The per-point CSV (columns eps, excluded, witness_nu, band) and the
    JSON summary are written by :meth:`write_csv` / :meth:`summary`.
    """

    eps: np.ndarray = field(repr=False)
    band: np.ndarray = field(repr=False)
    excluded: np.ndarray = field(repr=False)
    witnesses: list = field(repr=False)
    band_edges: list[tuple[float, float]]
    band_fractions: list[float]
    melnikov_order: int | None
    melnikov_coeff: complex
    start_scale: int
    radius: int
    config: ScaleConfig
    fit_amplitude: float | None
    fit_exponent: float | None
    caveat: str = (
        "first-order surrogate: exclusions use only the leading obstruction "
        "constant and a finite index radius; admissibility here does not "
        "certify convergence"
    )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["eps", "excluded", "witness_nu", "band"])
            for e, x, w, b in zip(self.eps, self.excluded, self.witnesses, self.band):
                nu = "" if w is None else ";".join(str(k) for k in (*w.drive, w.base, w.carrier))
                writer.writerow([f17(e), int(x), nu, int(b)])

    def summary(self) -> dict:
        bands = [
            {
                "band": m,
                "lo": lo,
                "hi": hi,
                "admissible_fraction": self.band_fractions[m],
            }
            for m, (lo, hi) in enumerate(self.band_edges)
        ]
        fit = None
        if self.fit_amplitude is not None:
            fit = {"amplitude": self.fit_amplitude, "exponent": self.fit_exponent}
        return {
            "bands": bands,
            "caveat": self.caveat,
            "excluded_points": int(np.sum(self.excluded)),
            "fit": fit,
            "melnikov_coeff": self.melnikov_coeff,
            "melnikov_order": self.melnikov_order,
            "points": int(len(self.eps)),
            "radius": self.radius,
            "smoothstep_order": self.config.smoothstep_order,
            "start_scale": self.start_scale,
            "width": self.config.width,
            "window_exponent": self.config.window_exponent,
        }


def scan_admissible(
    coeff: complex,
    order: int | None,
    freqs: Frequencies,
    config: ScaleConfig,
    eps0: float,
    *,
    grid: int = 512,
    bands: int = 9,
    radius: int = 20,
    threads: int = 1,
) -> ScanReport:
    """Scan dyadic eps bands below ``eps0`` for excluded strengths.

    Parameters
    ----------
    coeff, order : complex, int or None
        Leading obstruction constant and its (1-based) order.  ``None``
        order (or zero coefficient) scans with no shift at all, in which
        case a Diophantine-consistent configuration excludes nothing.
    eps0 : float
        Top of the scanned range; band m covers ``(eps0*2^-(m+1), eps0*2^-m]``.
    grid : int
        Points per band (uniform inside the band, upper edge included).
    radius : int
        l1 search radius for witnesses.

    The verdict at each eps depends on eps only through ``eps**order *
    coeff``; the anchoring scale of the shift cutoff is fixed once per
    scan (from eps0), never per point.
    """
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    if grid < 1 or bands < 1:
        raise ValueError("grid and bands must be >= 1")
    n0 = config.start_scale if config.start_scale is not None else default_start_scale(config, eps0)

    pts = _lattice(len(freqs.drive), radius)
    w = np.array(list(freqs.drive) + [freqs.base, freqs.carrier])
    dots = pts @ w
    l1 = np.abs(pts).sum(axis=1).astype(float)
    windows = config.width * l1 ** (-config.window_exponent)
    damp = falling_cutoff(np.abs(dots), n0, config)

    shiftless = order is None or coeff == 0

    def verdict(shift: complex):
        re = damp * shift.real
        im = dots - damp * shift.imag
        ratio = np.sqrt(re * re + im * im) / windows
        k = int(np.argmin(ratio))
        if ratio[k] < 1.0:
            drive = tuple(int(v) for v in pts[k][:-2])
            return True, MultiIndex(drive, int(pts[k][-2]), int(pts[k][-1]))
        return False, None

    eps_all = []
    band_all = []
    edges = []
    for m in range(bands):
        hi = eps0 * 2.0**-m
        lo = hi / 2.0
        edges.append((lo, hi))
        offsets = (np.arange(grid) + 1.0) / grid
        eps_all.append(lo + (hi - lo) * offsets)
        band_all.append(np.full(grid, m, dtype=int))
    eps_arr = np.concatenate(eps_all)
    band_arr = np.concatenate(band_all)

    if shiftless:
        flag, witness = verdict(0j)
        excluded = np.full(len(eps_arr), flag)
        witnesses = [witness] * len(eps_arr)
    else:
        def run(chunk):
            out = []
            for e in chunk:
                out.append(verdict(complex(coeff) * float(e) ** order))
            return out

        if threads > 1:
            splits = np.array_split(np.arange(len(eps_arr)), threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = pool.map(run, [eps_arr[s] for s in splits])
            pairs = [p for sub in results for p in sub]
        else:
            pairs = run(eps_arr)
        excluded = np.array([p[0] for p in pairs])
        witnesses = [p[1] for p in pairs]

    fractions = []
    for m in range(bands):
        sel = band_arr == m
        fractions.append(float(1.0 - np.sum(excluded[sel]) / np.sum(sel)))

    mids = np.sqrt([lo * hi for lo, hi in edges])
    frac_arr = np.array(fractions)
    usable = frac_arr < 1.0
    fit_amplitude = fit_exponent = None
    if np.sum(usable) >= 2:
        slope, intercept = np.polyfit(np.log(mids[usable]), np.log(1.0 - frac_arr[usable]), 1)
        fit_amplitude = float(math.exp(intercept))
        fit_exponent = float(slope)

    return ScanReport(
        eps=eps_arr,
        band=band_arr,
        excluded=excluded,
        witnesses=witnesses,
        band_edges=edges,
        band_fractions=fractions,
        melnikov_order=order,
        melnikov_coeff=complex(coeff),
        start_scale=n0,
        radius=radius,
        config=config,
        fit_amplitude=fit_amplitude,
        fit_exponent=fit_exponent,
    )
