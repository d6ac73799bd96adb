import math

import numpy as np
import pytest
from scipy.integrate import quad, trapezoid

from magtrace.errors import DomainError
from magtrace.testfn import bump_hat_pair, fourier_check, gaussian_pair, scale_pair


def trapezoid_inverse(p, t, n=20001):
    """Independent inverse transform: the trapezoid rule is spectrally
    accurate for smooth integrands vanishing to all orders at the ends."""
    out = np.zeros(len(t), dtype=complex)
    for lo, hi in p.support_hat:
        xi = np.linspace(lo, hi, n)
        out += trapezoid(p.phi_hat(xi)[None, :] * np.exp(1j * np.outer(t, xi)), xi, axis=1)
    return out / (2 * math.pi)


@pytest.fixture(scope="module")
def bump():
    return bump_hat_pair(2.0, 0.5)


@pytest.fixture(scope="module")
def twobump():
    return bump_hat_pair(2.0, 0.5, symmetric=True)


def test_gaussian_examples():
    sigma = 0.7
    p = gaussian_pair(sigma)
    assert p.hat_at_zero() == pytest.approx(sigma * math.sqrt(2 * math.pi), rel=1e-15)
    one = gaussian_pair(1.0)
    assert one.phi_hat(1.0) / one.phi_hat(0.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert p.phi(0.0) == 1.0
    assert p.support_hat is None and not p.excludes_zero()
    # round trip at t = 0
    val, _ = quad(lambda xi: p.phi_hat(xi), -np.inf, np.inf, epsabs=1e-13)
    assert abs(val / (2 * math.pi) - 1.0) <= 1e-10
    with pytest.raises(DomainError):
        gaussian_pair(0.0)


@pytest.mark.parametrize("sigma", [0.2, 1.0, 3.0])
def test_gaussian_fourier_check(sigma):
    assert fourier_check(gaussian_pair(sigma)) <= 1e-8


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_hat_derivatives_by_differences(m, bump):
    h = 1e-4
    for p in (gaussian_pair(0.8), bump):
        for xi in (-0.3, 0.4, 1.9, 2.2):
            fd = (p.hat_deriv(m - 1, xi + h) - p.hat_deriv(m - 1, xi - h)) / (2 * h)
            assert abs(fd - p.hat_deriv(m, xi)) <= 1e-6 * max(1.0, abs(p.hat_deriv(m, xi))) * 10 ** m


def test_bump_support(bump):
    assert bump.support_hat == ((1.5, 2.5),)
    assert bump.excludes_zero()
    assert bump.support_max() == 2.5
    for edge in (1.5, 2.5):
        for m in range(5):
            assert bump.hat_deriv(m, edge) == 0.0
            for d in (1e-3, 1e-2):
                outside = edge + d if edge > 2 else edge - d
                assert abs(bump.hat_deriv(m, outside)) <= 1e-14
    assert bump.phi_hat(2.0) == pytest.approx(1.0)


def test_bump_degenerate():
    for w in (0.0, -1.0, math.inf):
        with pytest.raises(DomainError):
            bump_hat_pair(1.0, w)


def test_bump_fourier_check(bump, twobump):
    assert fourier_check(bump) <= 1e-8
    assert fourier_check(twobump) <= 1e-8


def test_bump_matches_trapezoid_oracle(bump, twobump):
    t = np.linspace(-30, 30, 61)
    for p in (bump, twobump):
        assert np.max(np.abs(np.asarray(p.phi(t)) - trapezoid_inverse(p, t))) <= 1e-9


def test_twobump_is_real_and_even(twobump):
    assert twobump.real
    t = np.linspace(0.1, 20, 50)
    ref = trapezoid_inverse(twobump, t)
    assert np.max(np.abs(ref.imag)) <= 1e-10
    assert np.allclose(twobump.phi(t), twobump.phi(-t), atol=1e-12, rtol=0)
    # the single bump gives a complex phi
    assert not bump_hat_pair(2.0, 0.5).real


def test_parseval(twobump):
    # phi^2 is band-limited, so the trapezoid rule is exact up to truncation;
    # mollifier transforms decay slowly, hence the wide window
    t = np.linspace(-400, 400, 16001)
    lhs = trapezoid(np.asarray(twobump.phi(t)) ** 2, t)
    rhs = sum(quad(lambda xi: twobump.phi_hat(xi) ** 2, lo, hi, epsabs=1e-13)[0]
              for lo, hi in twobump.support_hat) / (2 * math.pi)
    assert abs(lhs - rhs) <= 1e-8


def test_envelope_bounds_phi(bump):
    t = np.linspace(-100, 100, 4001)
    assert np.all(np.abs(bump.phi(t)) <= bump.envelope(t))
    # decay certificate: |phi(t)| <= A_m / |t|^m for m <= 4
    A = bump.schwartz_certificate["A_m"]
    tt = t[np.abs(t) > 1]
    for m in range(5):
        assert np.all(np.abs(bump.phi(tt)) <= A[m] / np.abs(tt) ** m * 1.01)


def test_spline_matches_direct(bump):
    t = np.random.default_rng(5).uniform(-50, 50, 40)
    inv = bump.phi
    assert np.max(np.abs(inv(t) - inv.direct(t))) <= 1e-9


def test_scale_pair():
    g = gaussian_pair(1.0)
    assert scale_pair(g, 1.0) is g
    s = math.sqrt(2)
    psi = scale_pair(g, s)
    assert psi.hat_at_zero() == pytest.approx(g.hat_at_zero() / s, rel=1e-15)
    t = np.linspace(-3, 3, 13)
    assert np.allclose(psi.phi(t), g.phi(s * t), rtol=0, atol=1e-15)
    assert fourier_check(psi) <= 1e-8
    back = scale_pair(psi, 1 / s)
    xi = np.linspace(-4, 4, 17)
    assert np.max(np.abs(back.phi_hat(xi) - g.phi_hat(xi))) <= 1e-12
    assert np.max(np.abs(back.phi(t) - g.phi(t))) <= 1e-12
    with pytest.raises(DomainError):
        scale_pair(g, 0.0)


def test_scale_pair_support(twobump):
    psi = scale_pair(twobump, 3.0)
    assert psi.support_hat == ((-7.5, -4.5), (4.5, 7.5))
    assert fourier_check(psi) <= 1e-8
    for m in range(3):
        assert psi.hat_deriv(m, 6.0) == pytest.approx(twobump.hat_deriv(m, 2.0) / 3.0 ** (m + 1))
