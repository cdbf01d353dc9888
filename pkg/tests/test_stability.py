import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractoda.constants import DomainError, Params, lambda_ns, max_rayleigh, sphere_area, threshold_sides
from fractoda.fraclap import ConvergenceWarning, RadialFunction
from fractoda.homog import bubble_family, make_constant_profile, translated_family
from fractoda.stability import (
    TestFamily, cutoff, cutoff_log_mass, hardy_profile, hardy_test_family,
    leading_log_coefficients, seminorm, seminorm_extension, stability_margin, witness_search,
)


def _sigma(x):
    a, b = mp.exp(-1 / x), mp.exp(-1 / (1 - x))
    return a / (a + b)


MASS_CONST = float(mp.quad(lambda x: _sigma(x) ** 2 / (1 + x), [0, 1])
                   + mp.quad(lambda x: (1 - _sigma(x)) ** 2 / (1 + x), [0, 1]))


def test_cutoff_shape():
    eps = 1e-2
    eta = cutoff(eps)
    assert np.all(eta(np.array([eps, 1.0, 1 / eps])) == 1.0)
    assert np.all(eta(np.array([0.0, eps / 2, 2 / eps, 1e6])) == 0.0)
    r = np.geomspace(eps / 2, eps, 200)
    assert np.all(np.diff(eta(r)) >= 0)
    with pytest.raises(DomainError):
        cutoff(0.5)


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4, 0.3])
def test_cutoff_log_mass_against_mpmath(eps):
    assert cutoff_log_mass(eps) == pytest.approx(2 * math.log(1 / eps) + MASS_CONST, rel=1e-12)


def test_hardy_family_zero_sum():
    p = Params(5, 0.5, 3)
    fam = hardy_test_family(p, [1.0, -2.0, 1.0], 1e-2)
    r = fam.sample_radii()
    assert np.max(np.abs(sum(f(r) for f in fam.phi))) == 0.0
    with pytest.raises(DomainError):
        hardy_test_family(p, [1.0, 1.0, 1.0], 1e-2)
    with pytest.raises(ValueError):
        hardy_test_family(p, [1.0, -1.0], 1e-2)


def test_hardy_profile_no_overflow():
    p = Params(20, 0.5, 2)
    v = hardy_profile(p, 1e-4)(np.array([0.0, 1e-9, 5e-5, 1e-4, 1.0]))
    assert np.all(np.isfinite(v)) and v[0] == 0.0 and v[1] == 0.0


def _bump_fourier_seminorm(n, s, k):
    # int |xi|^(2s) |phi^|^2 / (2 pi)^n, phi = (1 - r^2)_+^k
    c = mp.gamma(k + 1) * 2 ** (k + mp.mpf(n) / 2) * mp.pi ** (mp.mpf(n) / 2)
    def f(xi):
        ft = c * xi ** (-mp.mpf(n) / 2 - k) * mp.besselj(mp.mpf(n) / 2 + k, xi)
        return xi ** (2 * s + n - 1) * ft ** 2
    I = mp.quadosc(f, [0, mp.inf], omega=1)
    return float(sphere_area(n) * I / (2 * mp.pi) ** n)


@pytest.mark.parametrize("n,s", [(1, 0.5), (1, 0.25), (2, 0.5), (3, 0.75)])
def test_seminorm_against_fourier(n, s):
    p = Params(n, s)
    got = seminorm(RadialFunction.bump(1.0, 4), p).value
    assert got == pytest.approx(_bump_fourier_seminorm(n, s, 4), rel=1e-5)


@pytest.mark.parametrize("n,s", [(1, 0.5), (2, 0.5), (3, 0.75)])
def test_seminorm_two_routes(n, s):
    p = Params(n, s)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        r = seminorm(RadialFunction.bump(1.0, 4), p, cross_check=True)
    assert not r.flagged and r.discrepancy < 0.03


def test_seminorm_zero_and_errors():
    p = Params(2, 0.5)
    zero = RadialFunction(lambda r: np.zeros(np.shape(r)), "compact", 1.0, features=(1.0,))
    assert seminorm(zero, p).value == 0.0
    with pytest.raises(DomainError):
        seminorm(RadialFunction.gaussian(), p)
    with pytest.raises(DomainError):
        seminorm_extension(RadialFunction.log_profile(1.0), p)


def test_hardy_seminorm_growth():
    # S(eps) - Lambda |S| L(eps) does not depend on eps
    p = Params(5, 0.5)
    d = []
    for eps in (1e-2, 1e-3, 1e-4):
        S = seminorm(hardy_profile(p, eps), p).value
        d.append(S - lambda_ns(p) * sphere_area(5) * cutoff_log_mass(eps))
    assert max(d) - min(d) < 1e-6 * abs(d[0]) + 1e-8


def test_zero_test_family_margin():
    p = Params(5, 0.5, 3)
    fam = make_constant_profile(p)
    rep = stability_margin(fam, hardy_test_family(p, [0.0, 0.0, 0.0], 1e-2))
    assert rep.margin == 0.0 and rep.lhs == 0.0


def test_hardy_path_matches_general_path():
    p = Params(5, 0.5, 3)
    fam = make_constant_profile(p)
    c = max_rayleigh(3)[1]
    h = hardy_test_family(p, c, 1e-2)
    g = TestFamily(p, h.phi, h.support)
    a, b = stability_margin(fam, h), stability_margin(fam, g)
    assert a.lhs == pytest.approx(b.lhs, rel=1e-6)
    assert a.rhs == pytest.approx(b.rhs, rel=1e-6)


@given(scale=st.floats(0.1, 10.0))
def test_margin_is_quadratic(scale):
    p = Params(5, 0.5, 3)
    fam = make_constant_profile(p)
    c = np.array([1.0, -2.0, 1.0])
    m1 = stability_margin(fam, hardy_test_family(p, c, 1e-2)).margin
    m2 = stability_margin(fam, hardy_test_family(p, scale * c, 1e-2)).margin
    assert m2 == pytest.approx(scale ** 2 * m1, rel=1e-10)


def test_negative_margin_when_threshold_holds():
    p = Params(5, 0.5, 3)
    lhs, rhs = threshold_sides(p)
    assert lhs > 1.1 * rhs
    rep = stability_margin(make_constant_profile(p), hardy_test_family(p, max_rayleigh(3)[1], 1e-3))
    assert rep.margin < 0


@pytest.mark.parametrize("n,s,Q", [(20, 0.5, 2), (20, 0.25, 2), (100, 0.5, 3)])
def test_no_hardy_witness_when_threshold_fails(n, s, Q):
    p = Params(n, s, Q)
    lhs, rhs = threshold_sides(p)
    assert lhs < rhs / 1.1
    fam = make_constant_profile(p)
    if Q == 2:
        cs = [np.array([1.0, -1.0])]
    else:
        t = np.linspace(0, 2 * np.pi, 24, endpoint=False)
        B = np.array([[1, 1], [-1, 1], [0, -2]]) / np.array([math.sqrt(2), math.sqrt(6)])
        cs = [B @ np.array([math.cos(a), math.sin(a)]) for a in t]
    for c in cs:
        for eps in (1e-2, 1e-3):
            assert stability_margin(fam, hardy_test_family(p, c, eps)).margin >= 0


def test_leading_coefficients():
    p = Params(5, 0.5, 3)
    fam = make_constant_profile(p)
    assert leading_log_coefficients(fam, p, [0, 0, 0]).lhs_coeff == 0.0
    lc = leading_log_coefficients(fam, p, max_rayleigh(3)[1])
    assert lc.log_linear and lc.fit_rel_error < 1e-6
    assert lc.lhs_coeff == pytest.approx(2 * lc.lhs_mass)
    assert lc.fit_lhs == pytest.approx(lc.lhs_coeff, rel=1e-6)
    with pytest.raises(DomainError):
        leading_log_coefficients(bubble_family(1.0), Params(1, 0.5, 2), [1, -1])


def test_witness_search():
    p = Params(5, 0.5, 3)
    w = witness_search(make_constant_profile(p), p)
    assert w.found and w.margin < 0 and abs(w.c.sum()) < 1e-12
    assert w.to_dict()["found"] is True


def test_witness_search_domain():
    p = Params(3, 1.0, 2)
    with pytest.raises(DomainError):
        witness_search(make_constant_profile(p), p)
    with pytest.raises(DomainError):
        witness_search(translated_family(Params(1, 0.25, 2)), Params(1, 0.25, 2))


def test_margin_needs_radial_family():
    p = Params(1, 0.25, 2)
    with pytest.raises(DomainError):
        stability_margin(translated_family(p), hardy_test_family(p, [1, -1], 1e-2))


@given(mu=st.floats(0.2, 5.0))
def test_seminorm_scaling_and_positivity(mu):
    p = Params(2, 0.4)
    b = RadialFunction.bump(1.0, 4)
    base = seminorm(b, p).value
    assert base > 0
    assert seminorm(b.dilate(1 / mu), p).value == pytest.approx(mu ** (2 - 0.8) * base, rel=1e-6)


def test_margin_sign_invariance():
    p = Params(5, 0.5, 3)
    fam = make_constant_profile(p)
    c = np.array([0.3, -1.0, 0.7])
    a = stability_margin(fam, hardy_test_family(p, c, 1e-2))
    b = stability_margin(fam, hardy_test_family(p, -c, 1e-2))
    assert (a.lhs, a.rhs) == pytest.approx((b.lhs, b.rhs), rel=1e-14)
