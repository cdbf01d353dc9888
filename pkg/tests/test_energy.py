import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractoda.constants import DomainError, Params, hemisphere_weight, kappa
from fractoda.energy import (
    derivative_closed_form, derivative_numeric, energy_E, energy_I, energy_report,
    hemisphere_term, integrated_derivative, paired_form, telescoped_weights,
)
from fractoda.homog import (
    bubble_family, bumped_family, make_constant_profile, translated_family, zero_family,
)

LAMS = [1.0, 2.0, 4.0, 8.0]


@pytest.mark.parametrize("n,s,Q", [(5, 0.5, 2), (1, 0.25, 3), (3, 0.75, 4)])
def test_homogeneous_energy_is_constant(n, s, Q):
    p = Params(n, s, Q)
    fam = make_constant_profile(p)
    E = np.array([energy_E(fam, p, l) for l in LAMS])
    assert np.max(np.abs(E - E[0])) <= 1e-9 * (1 + abs(E[0]))
    for l in LAMS:
        assert abs(derivative_closed_form(fam, p, l)) < 1e-12


def test_zero_family_closed_form():
    # D = 0 and V_b = 1, so I = -lam^(2s-n) kappa (Q-1) |B_lam|
    p = Params(1, 0.5, 3)
    fam = zero_family(p)
    k = fam.scaling_exponents
    for lam in (0.5, 2.0):
        I = energy_I(fam, p, lam)
        assert I == pytest.approx(-lam ** (2 * p.s - 1) * kappa(p.s) * 2 * (2 * lam), rel=1e-12)
        # the boundary term is -lam^(2s-1-n) sum k_a int y^(1-2s) (-k_a log lam)
        extra = lam ** (2 * p.s - 1 - p.n) * np.sum(k * k) * math.log(lam) \
            * lam ** (p.n + 1 - 2 * p.s) * hemisphere_weight(p)
        assert energy_E(fam, p, lam) == pytest.approx(I + extra, rel=1e-8)


def test_translated_family_monotone_and_derivative():
    p = Params(1, 0.25, 3)
    fam = translated_family(p)
    rep = energy_report(fam, p, LAMS)
    assert rep.monotone
    assert np.all(np.diff(rep.E) > 0)
    assert np.allclose(rep.dE_numeric, rep.dE_closed, rtol=1e-3)


def test_bubble_monotone_and_derivative():
    p = Params(1, 0.5, 2)
    fam = bubble_family(1.0)
    rep = energy_report(fam, p, [0.25, 0.5, 2.0, 4.0])
    assert rep.monotone and np.all(rep.dE_closed > 0)
    assert np.allclose(rep.dE_numeric, rep.dE_closed, rtol=1e-3)


def test_derivative_exponent():
    # the closed form carries lam^(2s-n); one more power of lam would miss by lam
    p = Params(1, 0.25, 3)
    fam = translated_family(p)
    for lam in (0.5, 3.0):
        num = derivative_numeric(fam, p, lam, rel_step=1e-3)
        assert derivative_closed_form(fam, p, lam) == pytest.approx(num, rel=1e-4)
        assert abs(lam * derivative_closed_form(fam, p, lam) - num) > 0.1 * abs(num)


def test_integrated_derivative():
    p = Params(1, 0.5, 2)
    fam = bubble_family(1.0)
    dE = energy_E(fam, p, 4.0) - energy_E(fam, p, 0.5)
    assert integrated_derivative(fam, p, 0.5, 4.0, points=65) == pytest.approx(dE, rel=1e-3)


def test_translation_smoke():
    # the family translated to d, centred at d, reproduces the homogeneous energy
    p = Params(1, 0.25, 2)
    hom = make_constant_profile(p)
    tr = translated_family(p, d=16.0)
    for lam in (1.0, 3.0):
        assert energy_E(tr, p, lam, x0=16.0) == pytest.approx(energy_E(hom, p, lam), rel=1e-10)


def test_domain_errors():
    p = Params(1, 0.25, 2)
    with pytest.raises(DomainError):
        energy_E(translated_family(p, d=2.0), p, 3.0)
    with pytest.raises(DomainError):
        energy_E(make_constant_profile(p), p, 1.0, x0=0.5)
    with pytest.raises(DomainError):
        energy_E(make_constant_profile(p), p, -1.0)
    with pytest.raises(DomainError):
        energy_E(make_constant_profile(Params(3, 0.5, 2)), Params(3, 0.5, 2), 1.0, x0=1.0)
    q = Params(3, 0.5, 2)
    with pytest.raises(DomainError):
        energy_E(bumped_family(q, (1.0, -1.0)), q, 1.0)
    with pytest.raises(DomainError):
        energy_E(make_constant_profile(q), Params(3, 0.5, 3), 1.0)


@given(Q=st.integers(2, 9), data=st.data())
def test_telescoping(Q, data):
    f = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=Q, max_size=Q)))
    u = f[:-1] - f[1:]
    lhs = sum((Q + 1 - 2 * a) * f[a - 1] for a in range(1, Q + 1))
    # both sides vanish on constants, so the identity holds without zero sum
    assert lhs == pytest.approx(float(telescoped_weights(Q) @ u), abs=1e-9)
    g = f - f.mean()
    ug = g[:-1] - g[1:]
    lhs_g = sum((Q + 1 - 2 * a) * g[a - 1] for a in range(1, Q + 1))
    assert lhs_g == pytest.approx(float(telescoped_weights(Q) @ ug), abs=1e-9)
    pf = float(paired_form(Q, ug[:, None])[0])
    if Q % 2:
        assert pf == pytest.approx(lhs_g, abs=1e-9)
    else:
        mid = Q // 2
        assert pf - lhs_g == pytest.approx(mid * (Q - mid) * ug[mid - 1], abs=1e-9)


def test_hemisphere_gap_constant():
    p = Params(5, 0.5, 3)
    fam = make_constant_profile(p)
    gaps = [hemisphere_term(fam, p, l).gap for l in (1.0, 2.0, 4.0)]
    assert max(gaps) - min(gaps) < 1e-6 * (1 + abs(gaps[0]))


def test_report_csv():
    p = Params(5, 0.5, 2)
    rep = energy_report(make_constant_profile(p), p, [1.0, 2.0], with_gap=True)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "lambda,E,I,dE_numeric,dE_closed,gap" and len(lines) == 3
    assert rep.to_dict()["monotone"] is True
