import math

import numpy as np
import pytest

from hillq.errors import InsufficientSupport, NonzeroAverage, ResonantMode
from hillq.fourier import FourierSeries, Frequencies, MultiIndex, zero_index


def mi(d, b, c):
    return MultiIndex((d,), b, c)


def random_series(rng, n_terms=12, box=4, drive_dim=1, real=False):
    terms = {}
    while len(terms) < n_terms:
        drive = tuple(int(rng.integers(-box, box + 1)) for _ in range(drive_dim))
        base = int(rng.integers(-box, box + 1))
        carrier = int(rng.integers(-box, box + 1))
        index = MultiIndex(drive, base, carrier)
        if index.l1() > box:
            continue
        terms[index] = complex(rng.normal(), rng.normal())
    if real:
        sym = {}
        for index, c in terms.items():
            sym[index] = sym.get(index, 0j) + 0.5 * c
            sym[-index] = sym.get(-index, 0j) + 0.5 * c.conjugate()
        terms = sym
    return FourierSeries(terms, drive_dim, is_real=real)


def max_coeff_diff(a, b):
    keys = set(a.terms) | set(b.terms)
    return max((abs(a[k] - b[k]) for k in keys), default=0.0)


# -- frozen examples ---------------------------------------------------------


def test_cosine_square_convolution():
    cos = FourierSeries({mi(0, 1, 0): 0.5, mi(0, -1, 0): 0.5}, 1, is_real=True)
    sq = cos.mul(cos, cutoff=2)
    assert set(sq.terms) == {mi(0, 2, 0), mi(0, 0, 0), mi(0, -2, 0)}
    assert sq[mi(0, 2, 0)] == pytest.approx(0.25)
    assert sq[mi(0, 0, 0)] == pytest.approx(0.5)
    assert sq[mi(0, -2, 0)] == pytest.approx(0.25)
    assert sq.discarded == 0.0
    assert sq.is_real


def test_primitive_base_mode():
    freqs = Frequencies((math.sqrt(2.0),), 1.0, 1.0)
    s = FourierSeries({mi(0, 1, 0): 1.0}, 1)
    p = s.primitive(freqs)
    assert p[mi(0, 1, 0)] == pytest.approx(-1j, abs=1e-15)


def test_primitive_drive_mode():
    root2 = math.sqrt(2.0)
    freqs = Frequencies((root2,), 1.0, 1.0)
    s = FourierSeries({mi(1, 0, 0): 1.0}, 1)
    p = s.primitive(freqs)
    assert p[mi(1, 0, 0)] == pytest.approx(-1j / root2, abs=1e-15)


def test_fit_decay_exponential_box():
    terms = {}
    for d in range(-10, 11):
        for b in range(-10, 11):
            for c in range(-10, 11):
                index = mi(d, b, c)
                if index.l1() <= 10:
                    terms[index] = math.exp(-index.l1())
    s = FourierSeries(terms, 1)
    fit = s.fit_decay()
    assert fit.rate == pytest.approx(1.0, abs=1e-6)
    assert fit.shells == 11


def test_fit_decay_needs_three_shells():
    s = FourierSeries({mi(0, 0, 0): 1.0, mi(0, 1, 0): 0.5}, 1)
    with pytest.raises(InsufficientSupport):
        s.fit_decay()


# -- algebraic invariants (seeded random draws) --------------------------------


def test_mul_commutes_and_associates():
    rng = np.random.default_rng(20260813)
    for _ in range(5):
        a = random_series(rng)
        b = random_series(rng)
        c = random_series(rng)
        ab = a.mul(b)
        ba = b.mul(a)
        scale = max(ab.l1_norm(), 1.0)
        assert max_coeff_diff(ab, ba) <= 1e-12 * scale
        left = a.mul(b).mul(c)
        right = a.mul(b.mul(c))
        scale = max(left.l1_norm(), 1.0)
        assert max_coeff_diff(left, right) <= 1e-12 * scale


def test_evaluate_is_multiplicative():
    rng = np.random.default_rng(42)
    freqs = Frequencies((math.sqrt(2.0),), 1.0, math.sqrt(3.0))
    a = random_series(rng)
    b = random_series(rng)
    t = rng.uniform(-5.0, 5.0, size=20)
    prod = a.mul(b).evaluate(freqs, t)
    direct = a.evaluate(freqs, t) * b.evaluate(freqs, t)
    scale = max(1.0, np.max(np.abs(direct)))
    assert np.max(np.abs(prod - direct)) <= 1e-10 * scale


def test_primitive_inverts_derivative():
    rng = np.random.default_rng(7)
    freqs = Frequencies((math.sqrt(2.0),), 1.0, 0.4321)
    for _ in range(5):
        s = random_series(rng).remove_average()
        back = s.derivative(freqs).primitive(freqs)
        assert max_coeff_diff(back, s) <= 1e-12 * max(1.0, s.l1_norm())


def test_real_marked_series_evaluates_real():
    rng = np.random.default_rng(99)
    freqs = Frequencies((math.sqrt(5.0),), 1.0, 0.77)
    s = random_series(rng, real=True)
    t = rng.uniform(-10.0, 10.0, size=50)
    vals = s.evaluate(freqs, t)
    assert np.max(np.abs(vals.imag)) <= 1e-12 * max(1.0, np.max(np.abs(vals)))


def test_real_flag_rejects_asymmetric_coefficients():
    with pytest.raises(ValueError):
        FourierSeries({mi(0, 1, 0): 1.0 + 0.5j}, 1, is_real=True)


def test_threaded_mul_bit_identical():
    rng = np.random.default_rng(5)
    a = random_series(rng, n_terms=25, box=6)
    b = random_series(rng, n_terms=25, box=6)
    seq = a.mul(b, cutoff=8, threads=1)
    par = a.mul(b, cutoff=8, threads=4)
    assert dict(seq.terms) == dict(par.terms)
    assert seq.discarded == par.discarded


def test_cutoff_discards_l1_mass():
    a = FourierSeries({mi(3, 0, 0): 1.0, mi(0, 3, 0): 1.0}, 1)
    full = a.mul(a)
    cut = a.mul(a, cutoff=5)
    lost = sum(abs(full[k]) for k in full.terms if k.l1() > 5)
    assert cut.discarded == pytest.approx(lost)
    assert all(k.l1() <= 5 for k in cut.terms)


def test_scalar_ops_and_average():
    s = FourierSeries({mi(0, 0, 0): 2.0, mi(0, 1, 0): 1.0}, 1)
    assert s.average() == 2.0
    assert (2 * s)[mi(0, 1, 0)] == 2.0
    assert (s - s).l1_norm() == 0.0
    assert s.remove_average().average() == 0j


def test_primitive_requires_zero_average():
    freqs = Frequencies((1.5,), 1.0, 1.0)
    s = FourierSeries({mi(0, 0, 0): 1.0, mi(0, 1, 0): 1.0}, 1)
    with pytest.raises(NonzeroAverage):
        s.primitive(freqs)


def test_primitive_flags_small_divisor():
    freqs = Frequencies((1.0,), 1.0, 1.0)
    s = FourierSeries({MultiIndex((1,), -1, 0): 1.0}, 1)  # divisor exactly 0
    with pytest.raises(ResonantMode):
        s.primitive(freqs)


def test_series_is_immutable():
    s = FourierSeries({mi(0, 1, 0): 1.0}, 1)
    with pytest.raises(AttributeError):
        s.drive_dim = 2
    with pytest.raises(TypeError):
        s.terms[mi(0, 1, 0)] = 2.0


def test_conjugate_of_real_series_is_itself():
    rng = np.random.default_rng(11)
    s = random_series(rng, real=True)
    assert max_coeff_diff(s.conjugate(), s) <= 1e-14 * max(1.0, s.l1_norm())


def test_evaluate_scalar_matches_array():
    rng = np.random.default_rng(3)
    s = random_series(rng)
    freqs = Frequencies((math.sqrt(2.0),), 1.0, 1.1)
    v_scalar = s.evaluate(freqs, 0.3)
    v_array = s.evaluate(freqs, np.array([0.3]))
    assert v_scalar == v_array[0]


def test_zero_index_helper():
    assert zero_index(2) == MultiIndex((0, 0), 0, 0)
    assert zero_index(1).is_zero()
