import math

import numpy as np
import pytest

from hillq._integrate import solve_hill
from hillq.errors import NonResonanceViolation, UnstableUnperturbed
from hillq.floquet import (
    DrivePotential,
    PeriodicPotential,
    riccati_coefficients,
    solve_floquet,
)
from hillq.fourier import MultiIndex


ROOT2 = math.sqrt(2.0)


def test_constant_potential_rotation():
    # For p0 = c the eigen-solution is exp(i sqrt(c) t) regardless of the
    # (arbitrary) period used to analyze it.
    for c in (1.0, 2.25, 4.0):
        fd = solve_floquet(PeriodicPotential.constant(c, 5.0), 256)
        assert abs(fd.rotation - math.sqrt(c)) < 1e-10
        assert len(fd.square) == 1
        assert fd.square[MultiIndex((), 0, 2)] == pytest.approx(1.0, abs=1e-12)
        assert fd.inv_square[MultiIndex((), 0, -2)] == pytest.approx(1.0, abs=1e-12)
        assert fd.phase.l1_norm() < 1e-12


def test_rotation_branch_follows_winding():
    # p0 = 4 with a drive period long enough that the phase winds past pi:
    # the rotation number must still come out as 2, not as a folded alias.
    fd = solve_floquet(PeriodicPotential.constant(4.0, math.pi), 512)
    assert abs(fd.rotation - 2.0) < 1e-10
    assert abs(fd.inst_freq.average() - 2.0) < 1e-10


def test_second_tongue_mathieu_is_unstable():
    # mean 1, amplitude 0.2, drive frequency 1 sits inside the second
    # parametric resonance tongue (trace just above 2).
    with pytest.raises(UnstableUnperturbed):
        solve_floquet(PeriodicPotential.cosine(1.0, 1.0, 0.2), 512)
    # the first tongue, for good measure
    with pytest.raises(UnstableUnperturbed):
        solve_floquet(PeriodicPotential.cosine(2.0, 1.0, 0.3), 512)


def test_grid_self_convergence():
    p0 = PeriodicPotential.cosine(2.5, 1.0, 0.2)
    coarse = solve_floquet(p0, 256)
    fine = solve_floquet(p0, 1024)
    assert abs(coarse.rotation - fine.rotation) < 1e-8
    assert abs(coarse.trace - fine.trace) < 1e-10


def test_inst_freq_mean_is_rotation():
    fd = solve_floquet(PeriodicPotential.cosine(2.5, 1.0, 0.2), 1024)
    assert abs(fd.inst_freq.average() - fd.rotation) < 1e-10


def test_square_times_inverse_is_delta():
    fd = solve_floquet(PeriodicPotential.cosine(2.5, 1.0, 0.3), 1024)
    conv = fd.square.mul(fd.inv_square)
    err = max(abs(c - (1.0 if i.is_zero() else 0.0)) for i, c in conv.terms.items())
    assert err < 1e-8


def test_wronskian_drift_and_modulus_floor():
    fd = solve_floquet(PeriodicPotential.cosine(2.5, 1.0, 0.3), 1024)
    assert fd.wronskian_drift < 1e-9
    assert fd.min_modulus > 0.5


def test_phase_reconstructs_eigen_solution():
    p0 = PeriodicPotential.cosine(2.5, 1.0, 0.2)
    fd = solve_floquet(p0, 1024)
    freqs0 = fd.frequencies()
    assert abs(fd.phase.evaluate(freqs0, 0.0)) < 1e-12
    # integrate the same initial data across two periods and compare with
    # exp(i*rot*t + i*psi(t)) at the sample times
    h = p0.period / 512
    times, ys, _ = solve_hill(p0.evaluate, 0.0, h, 1024, 1.0, fd.deriv0)
    recon = np.exp(1j * (fd.rotation * times + fd.phase.evaluate(freqs0, times)))
    assert np.max(np.abs(recon - ys)) < 1e-7


def test_grid_must_be_power_of_two():
    p0 = PeriodicPotential.constant(1.0, 2.5)
    with pytest.raises(ValueError):
        solve_floquet(p0, 300)
    with pytest.raises(ValueError):
        solve_floquet(p0, 128)


def test_potential_validation():
    with pytest.raises(ValueError):
        PeriodicPotential(1.0, {1: 1.0 + 0.3j})  # not conjugate-symmetric
    with pytest.raises(ValueError):
        PeriodicPotential(-1.0, {0: 1.0})
    with pytest.raises(ValueError):
        DrivePotential((1.0, 2.0), {(1,): 0.5, (-1,): 0.5})  # mode length


def test_riccati_coefficients_for_cosine_drive():
    fd = solve_floquet(PeriodicPotential.constant(1.0, 2.5), 256)
    system = riccati_coefficients(fd, DrivePotential.cosine((ROOT2,)), cutoff=12)
    assert abs(system.source[MultiIndex((1,), 0, 2)] - 0.5) < 1e-12
    assert abs(system.source[MultiIndex((-1,), 0, 2)] - 0.5) < 1e-12
    assert abs(system.quad[MultiIndex((0,), 0, -2)] - 1.0) < 1e-12
    assert all(i.carrier == 2 for i in system.source.support())
    assert all(i.carrier == -2 for i in system.quad.support())
    assert system.freqs.drive == (ROOT2,)
    assert system.freqs.carrier == pytest.approx(1.0, abs=1e-10)


def test_riccati_screen_sees_reachable_resonance():
    # With drive frequency equal to the rotation number, the index reached
    # by combining two first-order terms with the quadratic coefficient has
    # an exactly zero divisor: -2*w1 + 2*rot = 0.  The screen must find it
    # even though the source support itself is harmless.
    fd = solve_floquet(PeriodicPotential.constant(1.0, 2.5), 256)
    drive = DrivePotential.cosine((1.0,))
    with pytest.raises(NonResonanceViolation):
        riccati_coefficients(fd, drive, cutoff=6)
    # restricted to the source support only (no cutoff), nothing is flagged
    riccati_coefficients(fd, drive, cutoff=None)


def test_riccati_screen_with_wide_quad_support():
    # a modulated base potential carries quadratic-coefficient modes wider
    # than the screening box; those shifts must be skipped, not wrapped
    fd = solve_floquet(PeriodicPotential.cosine(2.5, 1.0, 0.2), 1024)
    drive = DrivePotential.cosine((fd.rotation,))
    with pytest.raises(NonResonanceViolation):
        riccati_coefficients(fd, drive, cutoff=6)
    clean = DrivePotential.cosine((math.sqrt(2.0),))
    system = riccati_coefficients(fd, clean, cutoff=6)
    assert len(system.source) > 0


def test_drive_potential_evaluate_matches_series():
    drive = DrivePotential(
        (ROOT2, math.sqrt(3.0)),
        {(1, 0): 0.5, (-1, 0): 0.5, (0, 2): 0.25j, (0, -2): -0.25j},
    )
    t = np.linspace(0.0, 7.0, 23)
    series = drive.series()
    from hillq.fourier import Frequencies

    freqs = Frequencies(drive.freqs, 1.0, 1.0)
    assert np.max(np.abs(series.evaluate(freqs, t) - drive.evaluate(t))) < 1e-12
