import math

import pytest

from hillq.errors import RealityViolation, ResonantMode, TruncationBlowup
from hillq.floquet import DrivePotential, PeriodicPotential, RiccatiSystem, riccati_coefficients, solve_floquet
from hillq.fourier import FourierSeries, Frequencies, MultiIndex
from hillq.lindstedt import corrected_rotation, expand, first_obstruction_order

ROOT2 = math.sqrt(2.0)


def mi(d, b, c):
    return MultiIndex((d,), b, c)


def cosine_system(freqs=None):
    """quad = 1 on carrier -2, source = cosine drive on carrier +2."""
    if freqs is None:
        freqs = Frequencies((ROOT2,), 1.0, 1.0)
    quad = FourierSeries({mi(0, 0, -2): 1.0}, 1)
    source = FourierSeries({mi(1, 0, 2): 0.5, mi(-1, 0, 2): 0.5}, 1)
    return RiccatiSystem(quad=quad, source=source, freqs=freqs)


def test_leading_order_coefficients():
    result = expand(cosine_system(), 0)
    u0 = result.orders[0]
    assert u0[mi(1, 0, 2)] == pytest.approx(0.5 / (1j * (ROOT2 + 2.0)), abs=1e-15)
    assert u0[mi(-1, 0, 2)] == pytest.approx(0.5 / (1j * (-ROOT2 + 2.0)), abs=1e-15)
    assert len(u0) == 2


def test_second_order_zero_carrier_mode():
    # The cross term of u_0 with itself lands on (0, 0, 2) with weight
    # 2 * (0.5/i(2+r2)) * (0.5/i(2-r2)) = -1/4, divided by 2i gives i/8.
    result = expand(cosine_system(), 1)
    u1 = result.orders[1]
    assert u1[mi(0, 0, 2)] == pytest.approx(1j / 8.0, abs=1e-15)
    assert set(u1.support()) == {mi(2, 0, 2), mi(0, 0, 2), mi(-2, 0, 2)}


def test_obstruction_sequence_for_zero_mean_drive():
    result = expand(cosine_system(), 5)
    # no mean in the drive: the first obstruction vanishes identically
    assert result.obstructions[0] == 0j
    assert result.obstructions[1] == pytest.approx(0.25j, abs=1e-15)
    assert result.first_obstruction == 2
    # every order lives on carrier slot +2 with no zero modes
    for u in result.orders:
        assert all(i.carrier == 2 for i in u.support())
    # compatibility residuals are structurally zero here
    assert max(result.compat_residuals) == 0.0
    assert max(result.discarded) == 0.0


def test_corrected_rotation_matches_quadratic_shift():
    result = expand(cosine_system(), 3)
    eps = 1e-2
    value = corrected_rotation(result, eps)
    # rotation + i*eps/2 * (eps * i/4) = 1 - eps^2/8 + higher order
    assert value == pytest.approx(1.0 - eps**2 / 8.0, abs=1e-9)


def test_mean_drive_gives_first_order_obstruction():
    fd = solve_floquet(PeriodicPotential.constant(1.0, 2.5), 256)
    drive = DrivePotential.cosine((ROOT2,), amplitude=1.0, mean=0.7)
    system = riccati_coefficients(fd, drive, cutoff=None)
    result = expand(system, 2)
    assert result.obstructions[0] == pytest.approx(-0.7j, abs=1e-12)
    assert result.first_obstruction == 1


def test_first_obstruction_order_rules():
    assert first_obstruction_order([0.0, 0.0, 3j]) == 3
    assert first_obstruction_order([-2j, 5j, 0.0]) == 1
    assert first_obstruction_order([1e-20j, 1e-14j]) is None
    assert first_obstruction_order([]) is None


def test_obstructions_purely_imaginary():
    result = expand(cosine_system(), 6)
    scale = max(1.0, max(abs(g) for g in result.obstructions))
    assert max(abs(g.real) for g in result.obstructions) < 1e-10 * scale


def test_scaling_covariance():
    # doubling the drive while halving eps leaves the corrected rotation
    # unchanged: obstruction[k] scales like 2^(k+1).
    base = cosine_system()
    doubled = RiccatiSystem(quad=base.quad, source=base.source.scale(2.0), freqs=base.freqs)
    r1 = expand(base, 4)
    r2 = expand(doubled, 4)
    eps = 4e-2
    assert corrected_rotation(r1, eps) == pytest.approx(
        corrected_rotation(r2, eps / 2.0), abs=1e-10
    )


def test_resonant_divisor_raises_with_order_info():
    freqs = Frequencies((1.0,), 1.0, 1.0)
    quad = FourierSeries({mi(0, 0, -2): 1.0}, 1)
    source = FourierSeries({mi(-2, 0, 2): 1.0, mi(2, 0, 2): 1.0}, 1)  # divisor 0 at -2
    with pytest.raises(ResonantMode) as err:
        expand(RiccatiSystem(quad=quad, source=source, freqs=freqs), 0)
    assert err.value.order == 0
    assert err.value.index == mi(-2, 0, 2)


def test_reachable_resonance_surfaces_at_higher_order():
    # source indices are fine; combining two of them with quad lands on
    # (-2, 0, 2) whose divisor vanishes for drive frequency 1 = rotation.
    freqs = Frequencies((1.0,), 2.5, 1.0)
    system = RiccatiSystem(
        quad=FourierSeries({mi(0, 0, -2): 1.0}, 1),
        source=FourierSeries({mi(1, 0, 2): 0.5, mi(-1, 0, 2): 0.5}, 1),
        freqs=freqs,
    )
    expand(system, 0)
    with pytest.raises(ResonantMode) as err:
        expand(system, 1)
    assert err.value.order == 1


def test_truncation_blowup_on_tight_cutoff():
    with pytest.raises(TruncationBlowup):
        expand(cosine_system(), 2, cutoff=3)


def test_source_average_must_vanish():
    freqs = Frequencies((ROOT2,), 1.0, 1.0)
    bad = RiccatiSystem(
        quad=FourierSeries({mi(0, 0, -2): 1.0}, 1),
        source=FourierSeries({MultiIndex((0,), 0, 0): 1.0}, 1),
        freqs=freqs,
    )
    with pytest.raises(ValueError):
        expand(bad, 1)


def test_reality_violation_detected():
    # a real obstruction constant is nonsense for a conservative problem;
    # build one artificially and watch the check fire.
    result = expand(cosine_system(), 2)
    from dataclasses import replace

    tampered = replace(result, obstructions=(0.5 + 0j,) + result.obstructions[1:])
    with pytest.raises(RealityViolation):
        corrected_rotation(tampered, 1e-2)


def test_threaded_expand_bit_identical():
    seq = expand(cosine_system(), 4, threads=1)
    par = expand(cosine_system(), 4, threads=4)
    for a, b in zip(seq.orders, par.orders):
        assert dict(a.terms) == dict(b.terms)
    assert seq.obstructions == par.obstructions
