"""Sparse exponential-Fourier series over a mixed frequency lattice.

Everything downstream manipulates finite sums

    f(t) = sum_nu  c_nu * exp(i * <freqs, nu> * t)

where the lattice index ``nu`` pairs an integer vector against the
quasi-periodic drive frequencies and keeps two extra integer slots: one for
the base frequency of the periodic coefficient and one for the carrier
(rotation) frequency of the unperturbed solution.  Series are stored
sparsely as dictionaries keyed by :class:`MultiIndex` and are treated as
immutable: every operation returns a new object.

Design notes
------------
* Convolution is done term by term on the sparse support; no FFT padding,
  no dense grids.  Supports in this package stay small (hundreds of terms)
  and exactness of the index bookkeeping matters more than raw speed.
* Operations that can drop terms (an l1 cutoff, explicit pruning) record
  the total absolute mass they dropped in :attr:`FourierSeries.discarded`
  so callers can budget truncation error honestly.
* Iteration order everywhere is the canonical sorted order (l1 shell, then
  lexicographic), which makes sums reproducible run to run and makes the
  optional threaded convolution bit-identical to the sequential one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import InsufficientSupport, NonzeroAverage, ResonantMode

__all__ = [
    "MultiIndex",
    "Frequencies",
    "FourierSeries",
    "DecayFit",
    "zero_index",
]

#: Coefficients at or below this magnitude are treated as numerical zero and
#: silently removed; keeps denormals from accumulating in long convolutions.
UNDERFLOW_FLOOR = 1e-300


class MultiIndex(NamedTuple):
    """Lattice index (drive vector, base slot, carrier slot).

    ``drive`` multiplies the quasi-periodic drive frequencies, ``base`` the
    frequency of the periodic coefficient, ``carrier`` the rotation
    frequency of the unperturbed solution.
    """

    drive: tuple[int, ...]
    base: int
    carrier: int

    def l1(self) -> int:
        """Sum of absolute entries (the shell the index lives on)."""
        return sum(abs(k) for k in self.drive) + abs(self.base) + abs(self.carrier)

    def is_zero(self) -> bool:
        return self.base == 0 and self.carrier == 0 and not any(self.drive)

    # NamedTuple inherits tuple concatenation; we want lattice arithmetic.
    def __add__(self, other: "MultiIndex") -> "MultiIndex":  # type: ignore[override]
        return MultiIndex(
            tuple(a + b for a, b in zip(self.drive, other.drive, strict=True)),
            self.base + other.base,
            self.carrier + other.carrier,
        )

    def __neg__(self) -> "MultiIndex":
        return MultiIndex(tuple(-a for a in self.drive), -self.base, -self.carrier)

    def __sub__(self, other: "MultiIndex") -> "MultiIndex":
        return self + (-other)


def zero_index(drive_dim: int) -> MultiIndex:
    return MultiIndex((0,) * drive_dim, 0, 0)


@dataclass(frozen=True)
class Frequencies:
    """The real frequency vector the lattice is paired against."""

    drive: tuple[float, ...]
    base: float
    carrier: float

    def __post_init__(self):
        object.__setattr__(self, "drive", tuple(float(w) for w in self.drive))

    @property
    def dim(self) -> int:
        return len(self.drive) + 2

    def dot(self, index: MultiIndex) -> float:
        """Pair a lattice index against the frequency vector.

        The accumulation order is fixed (drive entries left to right, then
        base, then carrier) and must not be changed: resonance screens
        compare this value against hard thresholds, and reports pin the
        result bit for bit.
        """
        acc = 0.0
        for k, w in zip(index.drive, self.drive, strict=True):
            acc += k * w
        acc += index.base * self.base
        acc += index.carrier * self.carrier
        return acc

    def norm(self) -> float:
        return math.sqrt(
            sum(w * w for w in self.drive) + self.base * self.base + self.carrier * self.carrier
        )

    def with_carrier(self, carrier: float) -> "Frequencies":
        return Frequencies(self.drive, self.base, float(carrier))


def _sort_key(index: MultiIndex):
    return (index.l1(), index.drive, index.base, index.carrier)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential decay of shell maxima.

    ``rate`` is kappa in  max_{|nu|=s} |c_nu| ~ amplitude * exp(-kappa*s);
    positive means the coefficients decay.
    """

    rate: float
    log_amplitude: float
    shells: int


class FourierSeries:
    """Immutable sparse series ``sum c_nu exp(i <freqs,nu> t)``.

    Parameters
    ----------
    terms : mapping or iterable of (MultiIndex, complex)
        Coefficients; exact duplicates are summed.
    drive_dim : int
        Length of the drive part of every index.
    is_real : bool
        Declares the series to represent a real-valued function.  The
        constructor verifies conjugate symmetry of the coefficients and
        raises ``ValueError`` if the declaration is inconsistent.
    discarded : float
        l1 mass dropped by the operation that produced this series.
    prune : float
        Drop terms with ``|c| <= prune`` at construction (on top of the
        underflow floor).  Dropped mass is added to ``discarded``.
    """

    __slots__ = ("_terms", "drive_dim", "is_real", "discarded")

    def __init__(
        self,
        terms: Mapping[MultiIndex, complex] | Iterable[tuple[MultiIndex, complex]],
        drive_dim: int,
        *,
        is_real: bool = False,
        discarded: float = 0.0,
        prune: float = 0.0,
    ):
        items = terms.items() if isinstance(terms, Mapping) else terms
        floor = max(float(prune), UNDERFLOW_FLOOR)
        acc: dict[MultiIndex, complex] = {}
        for index, value in items:
            if not isinstance(index, MultiIndex):
                index = MultiIndex(tuple(index[0]), int(index[1]), int(index[2]))
            if len(index.drive) != drive_dim:
                raise ValueError(
                    f"index {tuple(index)} has drive length {len(index.drive)}, expected {drive_dim}"
                )
            acc[index] = acc.get(index, 0j) + complex(value)
        dropped = 0.0
        clean: dict[MultiIndex, complex] = {}
        for index in sorted(acc, key=_sort_key):
            c = acc[index]
            if abs(c) <= floor:
                dropped += abs(c)
            else:
                clean[index] = c
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "drive_dim", int(drive_dim))
        object.__setattr__(self, "is_real", bool(is_real))
        object.__setattr__(self, "discarded", float(discarded) + dropped)
        if self.is_real:
            self._check_conjugate_symmetry()

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("FourierSeries is immutable")

    def _check_conjugate_symmetry(self):
        scale = max((abs(c) for c in self._terms.values()), default=0.0)
        tol = 1e-10 * max(1.0, scale)
        for index, c in self._terms.items():
            mirror = self._terms.get(-index, 0j)
            if abs(mirror - c.conjugate()) > tol:
                raise ValueError(
                    f"series marked real but coefficient at {tuple(index)} breaks "
                    f"conjugate symmetry by {abs(mirror - c.conjugate()):.3e}"
                )

    # -- basic introspection -------------------------------------------------

    @classmethod
    def zero(cls, drive_dim: int, *, is_real: bool = True) -> "FourierSeries":
        return cls({}, drive_dim, is_real=is_real)

    @classmethod
    def constant(cls, value: complex, drive_dim: int) -> "FourierSeries":
        z = complex(value)
        return cls({zero_index(drive_dim): z}, drive_dim, is_real=(z.imag == 0.0))

    @property
    def terms(self) -> Mapping[MultiIndex, complex]:
        return MappingProxyType(self._terms)

    def sorted_items(self) -> list[tuple[MultiIndex, complex]]:
        """Items in canonical order (l1 shell, then lexicographic)."""
        return [(i, self._terms[i]) for i in sorted(self._terms, key=_sort_key)]

    def support(self) -> list[MultiIndex]:
        return sorted(self._terms, key=_sort_key)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(sorted(self._terms, key=_sort_key))

    def __getitem__(self, index: MultiIndex) -> complex:
        return self._terms.get(index, 0j)

    def __contains__(self, index: MultiIndex) -> bool:
        return index in self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, FourierSeries):
            return NotImplemented
        return self.drive_dim == other.drive_dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.drive_dim, tuple(self.sorted_items())))

    def __repr__(self) -> str:
        return (
            f"FourierSeries({len(self._terms)} terms, drive_dim={self.drive_dim}, "
            f"l1={self.l1_norm():.6g}, real={self.is_real})"
        )

    def l1_norm(self) -> float:
        return math.fsum(abs(c) for _, c in self.sorted_items())

    def max_l1_index(self) -> int:
        return max((i.l1() for i in self._terms), default=0)

    def average(self) -> complex:
        """Coefficient of the zero index (the time average)."""
        return self._terms.get(zero_index(self.drive_dim), 0j)

    # -- linear structure ----------------------------------------------------

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        if not isinstance(other, FourierSeries):
            return NotImplemented
        if self.drive_dim != other.drive_dim:
            raise ValueError("drive dimensions differ")
        acc = dict(self._terms)
        for index, c in other.sorted_items():
            acc[index] = acc.get(index, 0j) + c
        return FourierSeries(acc, self.drive_dim, is_real=self.is_real and other.is_real)

    def __sub__(self, other: "FourierSeries") -> "FourierSeries":
        return self + (-1.0) * other

    def __neg__(self) -> "FourierSeries":
        return (-1.0) * self

    def scale(self, factor: complex) -> "FourierSeries":
        z = complex(factor)
        real = self.is_real and z.imag == 0.0
        return FourierSeries(
            {i: z * c for i, c in self._terms.items()}, self.drive_dim, is_real=real
        )

    def __mul__(self, other):
        if isinstance(other, FourierSeries):
            return self.mul(other)
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def conjugate(self) -> "FourierSeries":
        return FourierSeries(
            {-i: c.conjugate() for i, c in self._terms.items()},
            self.drive_dim,
            is_real=self.is_real,
        )

    def prune(self, floor: float) -> "FourierSeries":
        """Drop terms with ``|c| <= floor``; dropped mass goes to ``discarded``."""
        return FourierSeries(self._terms, self.drive_dim, is_real=self.is_real, prune=floor)

    def remove_average(self) -> "FourierSeries":
        acc = dict(self._terms)
        acc.pop(zero_index(self.drive_dim), None)
        return FourierSeries(acc, self.drive_dim, is_real=self.is_real)

    # -- convolution ---------------------------------------------------------

    def mul(
        self,
        other: "FourierSeries",
        cutoff: int | None = None,
        threads: int = 1,
    ) -> "FourierSeries":
        """Sparse convolution product.

        Parameters
        ----------
        cutoff : int or None
            If given, product indices with l1 norm above ``cutoff`` are not
            kept; their total absolute mass is recorded in ``discarded``.
        threads : int
            Worker threads for forming the pairwise products.  The merge
            happens sequentially in canonical order either way, so the
            result is bit-identical for any thread count.
        """
        if not isinstance(other, FourierSeries):
            raise TypeError("mul expects a FourierSeries")
        if self.drive_dim != other.drive_dim:
            raise ValueError("drive dimensions differ")
        left = self.sorted_items()
        right = other.sorted_items()

        def row(item):
            index_a, c_a = item
            return [(index_a + index_b, c_a * c_b) for index_b, c_b in right]

        if threads > 1 and len(left) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(row, left))
        else:
            rows = [row(item) for item in left]

        acc: dict[MultiIndex, complex] = {}
        for r in rows:
            for index, value in r:
                acc[index] = acc.get(index, 0j) + value

        discarded = 0.0
        if cutoff is not None:
            kept: dict[MultiIndex, complex] = {}
            for index in sorted(acc, key=_sort_key):
                if index.l1() > cutoff:
                    discarded += abs(acc[index])
                else:
                    kept[index] = acc[index]
            acc = kept
        return FourierSeries(
            acc,
            self.drive_dim,
            is_real=self.is_real and other.is_real,
            discarded=discarded,
        )

    # -- calculus ------------------------------------------------------------

    def derivative(self, freqs: Frequencies) -> "FourierSeries":
        """Time derivative: multiply each coefficient by ``i*<freqs,nu>``."""
        out = {i: c * (1j * freqs.dot(i)) for i, c in self._terms.items()}
        return FourierSeries(out, self.drive_dim, is_real=self.is_real)

    def primitive(
        self, freqs: Frequencies, divisor_floor: float | None = None
    ) -> "FourierSeries":
        """Zero-average antiderivative: divide by ``i*<freqs,nu>``.

        Raises
        ------
        NonzeroAverage
            If the zero-index coefficient is not (numerically) zero.
        ResonantMode
            If some populated index pairs to a divisor smaller in modulus
            than ``divisor_floor`` (default ``1e-12 * freqs.norm()``).
        """
        if divisor_floor is None:
            divisor_floor = 1e-12 * freqs.norm()
        avg = self.average()
        if abs(avg) > 1e-12 * max(1.0, self.l1_norm()):
            raise NonzeroAverage(
                f"cannot integrate a series with mean {avg!r}; remove the average first"
            )
        out: dict[MultiIndex, complex] = {}
        for index, c in self._terms.items():
            if index.is_zero():
                continue
            d = freqs.dot(index)
            if abs(d) < divisor_floor:
                raise ResonantMode(index, d)
            out[index] = c / (1j * d)
        return FourierSeries(out, self.drive_dim, is_real=self.is_real)

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, freqs: Frequencies, t):
        """Evaluate at time(s) ``t``; returns complex scalar or ndarray."""
        items = self.sorted_items()
        if not items:
            return np.zeros_like(np.asarray(t, dtype=float), dtype=complex) if np.ndim(t) else 0j
        phases = np.array([freqs.dot(i) for i, _ in items])
        coeffs = np.array([c for _, c in items])
        t_arr = np.asarray(t, dtype=float)
        values = np.exp(1j * np.outer(t_arr, phases)) @ coeffs
        if np.ndim(t) == 0:
            return complex(values[0])
        return values

    # -- diagnostics ----------------------------------------------------------

    def shell_maxima(self) -> dict[int, float]:
        shells: dict[int, float] = {}
        for index, c in self._terms.items():
            s = index.l1()
            shells[s] = max(shells.get(s, 0.0), abs(c))
        return dict(sorted(shells.items()))

    def fit_decay(self) -> DecayFit:
        """Fit ``log(max_{|nu|=s} |c_nu|) ~ log A - rate*s`` by least squares.

        Requires at least three populated shells.
        """
        shells = self.shell_maxima()
        if len(shells) < 3:
            raise InsufficientSupport(
                f"decay fit needs >= 3 populated shells, found {len(shells)}"
            )
        s = np.array(list(shells.keys()), dtype=float)
        logm = np.log(np.array(list(shells.values())))
        slope, intercept = np.polyfit(s, logm, 1)
        return DecayFit(rate=float(-slope), log_amplitude=float(intercept), shells=len(shells))
