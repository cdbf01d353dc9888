import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractoda.constants import DomainError, Params, lambda_alpha, sphere_area
from fractoda.homog import (
    SolutionFamily, bubble_family, bumped_family, check_zero_sum, decay_check,
    make_constant_profile, representation_check, rescale, residual_main, sphere_identity,
    translated_family, zero_family,
)

R3 = [0.25, 1.0, 4.0]


@pytest.mark.parametrize("Q", [2, 3, 4])
def test_homogeneous_residual(Q):
    t = residual_main(make_constant_profile(Params(5, 0.5, Q)), R3)
    assert t.converged
    assert t.max_relative < 1e-6


@pytest.mark.parametrize("n,s,Q", [(1, 0.25, 3), (2, 0.75, 2), (3, 0.3, 5)])
def test_homogeneous_residual_other_params(n, s, Q):
    assert residual_main(make_constant_profile(Params(n, s, Q)), R3).max_relative < 1e-5


def test_homogeneous_structure():
    fam = make_constant_profile(Params(4, 0.6, 4))
    assert sum(fam.psi) == pytest.approx(0.0, abs=1e-14)
    assert fam.psi == tuple(-v for v in fam.psi[::-1])
    for lhs, rhs in sphere_identity(fam):
        assert lhs == pytest.approx(rhs, rel=1e-12)
    x = np.geomspace(1e-3, 1e3, 40)
    assert check_zero_sum(fam, x) < 1e-12
    # V_a equals lambda_a r^(-2s)
    for a in range(1, 4):
        assert np.allclose(fam.V(a, x), lambda_alpha(fam.params, a) * x ** (-1.2), rtol=1e-12)
    assert np.all(fam.V(0, x) == 0) and np.all(fam.V(4, x) == 0)


def test_bubble_residual():
    for mu in (0.5, 1.0, 3.0):
        t = residual_main(bubble_family(mu), [0.1, 0.7, 2.0, 9.0])
        assert t.max_relative < 1e-6


def test_translated_residual():
    fam = translated_family(Params(1, 0.25, 3))
    assert residual_main(fam, [0.3, 1.0, 5.0]).max_relative < 1e-6
    with pytest.raises(DomainError):
        translated_family(Params(2, 0.5, 2))


def test_bumped_family_is_not_a_solution():
    fam = bumped_family(Params(3, 0.5, 2), (0.5, -0.5))
    assert residual_main(fam, [0.3, 0.6]).max_relative > 1e-2
    with pytest.raises(DomainError):
        bumped_family(Params(3, 0.5, 2), (0.5, 0.4))
    with pytest.raises(DomainError):
        fam.extension(1)


def test_zero_family():
    fam = zero_family(Params(3, 0.5, 3))
    assert np.all(fam.traces([0.5, 2.0]) == 0)


@given(lam=st.floats(0.05, 20.0))
def test_rescale_fixed_point(lam):
    fam = make_constant_profile(Params(3, 0.5, 3))
    g = rescale(fam, lam)
    x = np.array([0.3, 1.0, 7.0])
    assert np.allclose(g.traces(x), fam.traces(x), atol=1e-12)


@given(lam=st.floats(0.1, 10.0), mu=st.floats(0.2, 5.0))
def test_rescale_definition_and_composition(lam, mu):
    for fam in (bubble_family(mu), translated_family(Params(1, 0.25, 2), d=math.pi),
                bumped_family(Params(2, 0.5, 2), (1.0, -1.0))):
        x = np.array([0.2, 1.1, 4.0])
        k = fam.scaling_exponents
        g = rescale(fam, lam)
        want = fam.traces(lam * x) - k[:, None] * math.log(lam)
        assert np.allclose(g.traces(x), want, atol=1e-11)
        h = rescale(rescale(fam, lam), mu)
        assert np.allclose(h.traces(x), rescale(fam, lam * mu).traces(x), atol=1e-11)
    assert rescale(bubble_family(2.0), 1.0) == bubble_family(2.0)


def test_json_roundtrip():
    for fam in (make_constant_profile(Params(5, 0.5, 3)), bubble_family(2.0),
                bumped_family(Params(2, 0.5, 2), (1.0, -1.0)),
                translated_family(Params(1, 0.25, 2))):
        assert SolutionFamily.from_json(fam.to_json()) == fam


def _ball_oracle(lam, n, s, p, r):
    f = lambda t: lam ** p * t ** (-2 * p * s) * t ** (n - 1)
    return float(sphere_area(n) * mp.quad(f, [0, r])) / r ** (n - 2 * p * s)


@pytest.mark.parametrize("pexp", [1.0, 2.0])
def test_decay_ball(pexp):
    fam = make_constant_profile(Params(5, 0.5, 3))
    r = [1.0, 4.0, 16.0, 64.0]
    t = decay_check(fam, pexp, r)
    assert np.all(t.variation < 1e-10)
    for a in (1, 2):
        o = _ball_oracle(lambda_alpha(fam.params, a), 5, 0.5, pexp, 1.0)
        assert np.allclose(t.ratios[a - 1], o, rtol=1e-10)


def test_decay_annulus_full_range():
    # n = 3, s = 1/2, p = 3.5: n <= 2ps so only the annulus form is finite
    fam = make_constant_profile(Params(3, 0.5, 2))
    with pytest.raises(DomainError):
        decay_check(fam, 3.5, [1.0])
    t = decay_check(fam, 3.5, [1.0, 8.0, 64.0], mode="annulus")
    lam = lambda_alpha(fam.params, 1)
    o = float(sphere_area(3) * mp.quad(lambda x: lam ** 3.5 * x ** -3.5 * x ** 2, [0.5, 1]))
    assert np.allclose(t.ratios, o, rtol=1e-10)
    with pytest.raises(DomainError):
        decay_check(fam, 5.0, [1.0], mode="annulus")


def test_decay_bubble_not_constant():
    t = decay_check(bubble_family(1.0), 1.0, [1.0, 10.0, 100.0], mode="annulus")
    assert t.oracle is None and np.all(t.variation > 1e-2)


def test_representation_constancy():
    rep = representation_check(make_constant_profile(Params(5, 0.5, 2)), [0.5, 1, 2, 4])
    assert np.all(rep.spread < 1e-6)
    rep3 = representation_check(make_constant_profile(Params(4, 0.75, 3)), [0.5, 2.0])
    assert np.all(rep3.spread < 1e-6)

