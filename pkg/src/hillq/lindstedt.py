"""Order-by-order expansion of the reduced equation.

The reduced problem is a scalar quadratic equation on series,

    u' = source + eps * quad * u**2 ,

solved as a formal power series ``u = sum_k eps^k u_k``.  Matching powers
of eps gives, writing D for the diagonal operator ``i * <freqs, nu>``,

    D u_0 = source,
    D u_k = [quad * (sum u_{k1} u_{k2}, k1+k2 = k-1)]   (k >= 1).

Each order is solved mode by mode, so a right-hand-side coefficient at the
zero index cannot be matched: its value (the compatibility residual) is
recorded, the zero mode of ``u_k`` is set to zero, and the genuine secular
content shows up instead in the obstruction constants

    obstruction[k] = 2 * average(quad * u_k),

which feed the corrected rotation frequency

    rotation(eps) = rotation + i*eps/2 * sum_k eps^k * obstruction[k].

A real rotation therefore needs purely imaginary obstruction constants;
``corrected_rotation`` enforces this up to a tolerance and raises
:class:`RealityViolation` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RealityViolation, ResonantMode, TruncationBlowup
from .floquet import RiccatiSystem
from .fourier import FourierSeries, Frequencies, MultiIndex, zero_index

__all__ = [
    "PerturbationResult",
    "expand",
    "first_obstruction_order",
    "corrected_rotation",
]


@dataclass(frozen=True)
class PerturbationResult:
    """Coefficients of the formal series solution, plus bookkeeping.

    Attributes
    ----------
    orders : tuple of FourierSeries
        ``u_0 .. u_K``; every index has carrier slot exactly +2 and the
        zero mode of every order is identically zero.
    obstructions : tuple of complex
        ``2 * average(quad * u_k)`` for k = 0..K; entry k controls the
        eps^(k+1) correction of the rotation frequency.
    first_obstruction : int or None
        1-based position of the first obstruction above the default noise
        floor, or None when all of them sit below it.
    compat_residuals : tuple of float
        Moduli of the zero-index right-hand-side coefficients, one per
        order (index 0 is the source average).  Structurally these vanish;
        they are recorded rather than assumed.
    discarded : tuple of float
        l1 mass dropped by the cutoff at each order.
    freqs : Frequencies
        The frequency vector the expansion was done against.
    """

    orders: tuple[FourierSeries, ...]
    obstructions: tuple[complex, ...]
    first_obstruction: int | None
    compat_residuals: tuple[float, ...]
    discarded: tuple[float, ...]
    freqs: Frequencies

    @property
    def depth(self) -> int:
        return len(self.orders) - 1


def _solve_order(rhs: FourierSeries, freqs: Frequencies, floor: float, order: int):
    """Invert D = i<freqs,nu> on ``rhs`` with the zero mode forced to zero."""
    compat = abs(rhs.average())
    out: dict[MultiIndex, complex] = {}
    for index, c in rhs.sorted_items():
        if index.is_zero():
            continue
        d = freqs.dot(index)
        if abs(d) < floor:
            raise ResonantMode(index, d, order=order)
        out[index] = c / (1j * d)
    return FourierSeries(out, rhs.drive_dim), compat


def expand(
    system: RiccatiSystem,
    order: int,
    cutoff: int | None = None,
    *,
    divisor_floor: float | None = None,
    blowup_fraction: float = 1e-3,
    obstruction_tol: float | None = None,
    threads: int = 1,
) -> PerturbationResult:
    """Expand the reduced equation to ``eps**order``.

    Parameters
    ----------
    order : int
        Highest order K kept; orders u_0..u_K are produced.
    cutoff : int or None
        l1 truncation applied to every convolution; ``None`` keeps exact
        supports (preferred whenever the data is a finite trigonometric
        polynomial -- the cutoff is a safety net, not part of the scheme).
    divisor_floor : float
        Smallest divisor modulus accepted (default ``1e-12 * |freqs|``).
    blowup_fraction : float
        Raise :class:`TruncationBlowup` when the mass discarded at some
        order exceeds this fraction of the mass kept there.
    obstruction_tol : float
        Noise floor for ``first_obstruction`` (default
        ``1e-10 * max(1, max |obstruction|)``).

    Raises
    ------
    ResonantMode
        A divisor below the floor was needed at some order.
    TruncationBlowup
        The cutoff removed more than ``blowup_fraction`` of an order.
    ValueError
        The source has a nonzero average (no zero-mean reduction exists).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    freqs = system.freqs
    if divisor_floor is None:
        divisor_floor = 1e-12 * freqs.norm()
    if abs(system.source.average()) > 1e-12 * max(1.0, system.source.l1_norm()):
        raise ValueError("source series must have zero average")

    quad = system.quad
    orders: list[FourierSeries] = []
    compat: list[float] = []
    dropped: list[float] = []
    obstructions: list[complex] = []

    for k in range(order + 1):
        if k == 0:
            rhs = system.source
            lost = rhs.discarded
        else:
            # sum_{k1+k2=k-1} u_{k1} u_{k2}; symmetric pairs counted once
            # and doubled (exact in floating point).
            pair_sum = FourierSeries.zero(system.source.drive_dim, is_real=False)
            lost = 0.0
            for k1 in range(0, (k - 1) // 2 + 1):
                k2 = k - 1 - k1
                prod = orders[k1].mul(orders[k2], cutoff=cutoff, threads=threads)
                lost += prod.discarded
                if k1 != k2:
                    prod = prod.scale(2.0)
                pair_sum = pair_sum + prod
            rhs = quad.mul(pair_sum, cutoff=cutoff, threads=threads)
            lost += rhs.discarded
        kept = rhs.l1_norm()
        if lost > blowup_fraction * max(kept, 1e-30):
            raise TruncationBlowup(
                f"order {k}: discarded l1 mass {lost:.3e} exceeds "
                f"{blowup_fraction:.1e} of the retained {kept:.3e}"
            )
        u_k, c_k = _solve_order(rhs, freqs, divisor_floor, k)
        orders.append(u_k)
        compat.append(c_k)
        dropped.append(lost)
        obstructions.append(2.0 * quad.mul(u_k, cutoff=None, threads=threads).average())

    return PerturbationResult(
        orders=tuple(orders),
        obstructions=tuple(obstructions),
        first_obstruction=first_obstruction_order(obstructions, obstruction_tol),
        compat_residuals=tuple(compat),
        discarded=tuple(dropped),
        freqs=freqs,
    )


def first_obstruction_order(obstructions, tol: float | None = None) -> int | None:
    """1-based position of the first obstruction above the noise floor.

    The default floor is ``1e-10 * max(1, max |obstruction|)``; returns
    None when every entry sits below it.
    """
    mags = [abs(g) for g in obstructions]
    if tol is None:
        tol = 1e-10 * max(1.0, max(mags, default=0.0))
    for j, m in enumerate(mags, start=1):
        if m > tol:
            return j
    return None


def corrected_rotation(result: PerturbationResult, eps: float) -> float:
    """Rotation frequency corrected through the expansion's obstructions.

    Evaluates ``rotation + i*eps/2 * sum_k eps^k obstruction[k]`` and
    checks that the correction is real in the end: the imaginary residue
    must stay below ``1e-9 * (1 + |rotation|)``.

    Raises
    ------
    RealityViolation
        If the obstruction constants are not purely imaginary enough for
        the corrected frequency to be real at this eps.
    """
    rotation = result.freqs.carrier
    tail = 0j
    for g in reversed(result.obstructions):
        tail = g + eps * tail
    value = rotation + 0.5j * eps * tail
    if abs(value.imag) > 1e-9 * (1.0 + abs(rotation)):
        raise RealityViolation(
            f"corrected rotation picked up imaginary part {value.imag:.3e} at eps={eps!r}"
        )
    return value.real
