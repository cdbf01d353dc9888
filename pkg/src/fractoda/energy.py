"""Monotonicity energy for extended Toda families.

With ``k_a = (2a - Q - 1) s`` and the half-ball ``B_lam^+(x0)``:

    I(lam) = lam^(2s-n) sum_a [ 1/2 int y^(1-2s) |grad U_a|^2
                                - kappa_s int_{B_lam} V_{a-1} ]
    E(lam) = I(lam) - lam^(2s-1-n) sum_a k_a int_{dB_lam^+} y^(1-2s)
                                          (U_a - k_a log lam) dsigma
    E'(lam) = lam^(2s-n) sum_a int_{dB_lam^+} y^(1-2s) (d_rho U_a - k_a/lam)^2

where ``U_a`` is the extension of ``f_a`` and ``V_0 = 0``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import DomainError, Params, hemisphere_weight, kappa, sphere_area
from .extension import dirichlet_energy, hemisphere_integral
from .homog import SolutionFamily, representation_check, rescale
from .quadrature import gauss_legendre

__all__ = [
    "EnergyReport",
    "energy_I",
    "energy_E",
    "derivative_closed_form",
    "derivative_numeric",
    "hemisphere_term",
    "HemisphereReport",
    "telescoped_weights",
    "energy_report",
    "integrated_derivative",
]


def _check(fam: SolutionFamily, p: Params, lam: float, x0: float):
    p.require_fractional()
    if (fam.params.n, fam.params.s, fam.params.Q) != (p.n, p.s, p.Q):
        raise DomainError("family and params differ")
    if lam <= 0:
        raise DomainError("lam must be positive")
    if p.n > 1 and x0 != 0.0:
        raise DomainError("radial families in n >= 2 need x0 = 0")
    # a log singularity is fine at the ball centre, not elsewhere inside
    dist = abs(fam.center - x0)
    if any(fam.log_coef) and 0.0 < dist <= lam * 1.0001:
        raise DomainError("singular point of the family lies in the ball")


def _recentre(fam: SolutionFamily, x0: float):
    # shift a ball centred on the singular point to the origin; otherwise
    # x0 + rho rounds to x0 for the small rho the quadratures reach
    if fam.center != 0.0 and fam.center == x0:
        return replace(fam, center=0.0), 0.0
    return fam, x0


# ---------------------------------------------------------------------------
# boundary integral of the nonlinearity


def _graded_line(g, a, b, sing, levels=60, m=12, panels=8):
    """``int_a^b g`` with dyadic grading toward an interior singular point."""
    t, w = gauss_legendre(m)
    if sing is None or not (a < sing < b):
        e = np.linspace(a, b, panels + 1)
        x = (e[:-1, None] + np.diff(e)[:, None] * t)
        return float((g(x) * np.diff(e)[:, None] * w).sum())
    total = 0.0
    for side in (-1.0, 1.0):
        L = (sing - a) if side < 0 else (b - sing)
        d = L * 2.0 ** -np.arange(levels, -1, -1.0)
        e = np.concatenate(([0.0], d))
        x = e[:-1, None] + np.diff(e)[:, None] * t
        vals = (g(sing + side * x) * np.diff(e)[:, None] * w).sum(axis=1)
        q = vals[1] / vals[2] if vals[2] != 0 else 0.0
        core = vals[1] * q / (1 - q) if 0 < q < 1 else vals[0]
        total += float(vals[1:].sum() + core)
    return total


def _radial_ball(g, lam, n, levels=80, m=12):
    t, w = gauss_legendre(m)
    e = np.concatenate(([0.0], lam * 2.0 ** -np.arange(levels, -1, -1.0)))
    x = e[:-1, None] + np.diff(e)[:, None] * t
    vals = (g(x) * x ** (n - 1.0) * np.diff(e)[:, None] * w).sum(axis=1)
    q = vals[1] / vals[2] if vals[2] != 0 else 0.0
    core = vals[1] * q / (1 - q) if 0 < q < 1 else vals[0]
    return sphere_area(n) * float(vals[1:].sum() + core)


def _nonlinear_mass(fam: SolutionFamily, lam: float, x0: float) -> float:
    """``sum_b int_{B_lam(x0)} V_b dx`` (b = 1..Q-1)."""
    n = fam.params.n
    total = 0.0
    for b in range(1, fam.Q):
        g = lambda x, b=b: fam.V(b, x)
        if n == 1:
            sing = fam.center if fam.kind != "bubble" else None
            total += _graded_line(g, x0 - lam, x0 + lam, sing)
        else:
            total += _radial_ball(g, lam, n)
    return total


# ---------------------------------------------------------------------------
# energies


def _dirichlet_sum(fam, p, lam, x0, **kw):
    return sum(dirichlet_energy(fam.extension(a), (x0, lam), params=p, **kw)
               for a in range(1, fam.Q + 1))


def energy_I(fam: SolutionFamily, p: Params, lam: float, x0: float = 0.0, **kw) -> float:
    """The unanchored energy ``I(lam)``."""
    _check(fam, p, lam, x0)
    fam, x0 = _recentre(fam, x0)
    D = _dirichlet_sum(fam, p, lam, x0, **kw)
    B = _nonlinear_mass(fam, lam, x0)
    return lam ** (2.0 * p.s - p.n) * (0.5 * D - kappa(p.s) * B)


def _hemisphere_bracket(fam, p, lam, x0):
    k = fam.scaling_exponents
    tot = 0.0
    for a in range(1, fam.Q + 1):
        if k[a - 1] == 0.0:
            continue
        U = fam.extension(a)
        ka = k[a - 1]
        tot += ka * hemisphere_integral(
            lambda x, y, U=U, ka=ka: U.value(x, y) - ka * math.log(lam), p, x0, lam)
    return tot


def energy_E(fam: SolutionFamily, p: Params, lam: float, x0: float = 0.0, **kw) -> float:
    """The full monotone energy ``E(lam)``."""
    I = energy_I(fam, p, lam, x0, **kw)
    fam, x0 = _recentre(fam, x0)
    return I - lam ** (2.0 * p.s - 1.0 - p.n) * _hemisphere_bracket(fam, p, lam, x0)


def derivative_closed_form(fam: SolutionFamily, p: Params, lam: float,
                           x0: float = 0.0) -> float:
    """``lam^(2s-n) sum_a int y^(1-2s) (d_rho U_a - k_a/lam)^2`` on the hemisphere."""
    _check(fam, p, lam, x0)
    fam, x0 = _recentre(fam, x0)
    k = fam.scaling_exponents
    tot = 0.0
    for a in range(1, fam.Q + 1):
        U = fam.extension(a)
        ka = k[a - 1]

        def sq(x, y, U=U, ka=ka):
            gx, gy = U.grad(x, y)
            dr = (gx * (x - x0) + gy * y) / lam
            return (dr - ka / lam) ** 2

        tot += hemisphere_integral(sq, p, x0, lam)
    return lam ** (2.0 * p.s - p.n) * tot


def derivative_numeric(fam: SolutionFamily, p: Params, lam: float, x0: float = 0.0,
                       rel_step: float = 0.01) -> float:
    """Central difference of ``E`` with step ``rel_step * lam``."""
    h = rel_step * lam
    return (energy_E(fam, p, lam + h, x0) - energy_E(fam, p, lam - h, x0)) / (2.0 * h)


def integrated_derivative(fam: SolutionFamily, p: Params, lam1: float, lam2: float,
                          x0: float = 0.0, points: int = 33) -> float:
    """Trapezoid integral of ``derivative_closed_form`` on a geometric grid."""
    ls = np.geomspace(lam1, lam2, points)
    d = np.array([derivative_closed_form(fam, p, l, x0) for l in ls])
    trap = getattr(np, "trapezoid", None) or np.trapz
    return float(trap(d, ls))


# ---------------------------------------------------------------------------
# hemisphere term in terms of the representation constants


def telescoped_weights(Q: int) -> np.ndarray:
    """``l (Q - l)`` for l = 1..Q-1: ``sum (Q+1-2a) f_a = sum l(Q-l) u_l``."""
    l = np.arange(1, Q)
    return l * (Q - l)


def paired_form(Q: int, u: np.ndarray) -> np.ndarray:
    """``sum_{l <= Q/2} l(Q-l) (u_l + u_{Q-l})`` (agrees with the telescoped
    sum for odd Q; counts the middle term twice for even Q)."""
    out = np.zeros(np.shape(u)[1:])
    for l in range(1, Q // 2 + 1):
        out = out + l * (Q - l) * (u[l - 1] + u[Q - l - 1])
    return out


@dataclass(frozen=True)
class HemisphereReport:
    lam: float
    value: float
    c_s: float
    per_ell: np.ndarray
    prediction: float
    gap: float


def hemisphere_term(fam: SolutionFamily, p: Params, lam: float, *,
                    sample=(0.5, 1.0, 2.0, 4.0)) -> HemisphereReport:
    """``sum_a (Q+1-2a) int_{dB_1^+} y^(1-2s) U_a^lam dsigma`` and its prediction.

    The prediction is ``c_s sum_l l(Q-l) d_l`` with ``d_l`` the constants
    from :func:`representation_check` on the rescaled family.
    """
    p.require_supercritical()
    fl = rescale(fam, lam)
    Q = p.Q
    value = 0.0
    for a in range(1, Q + 1):
        U = fl.extension(a)
        value += (Q + 1 - 2 * a) * hemisphere_integral(U.value, p, 0.0, 1.0)
    cs = hemisphere_weight(p)
    d = representation_check(fl, sample).constant
    per = cs * telescoped_weights(Q) * d
    pred = float(per.sum())
    return HemisphereReport(lam, value, cs, per, pred, value - pred)


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class EnergyReport:
    lambdas: np.ndarray
    E: np.ndarray
    I: np.ndarray
    dE_numeric: np.ndarray
    dE_closed: np.ndarray
    c_s: float
    monotone: bool
    gap: np.ndarray = field(default=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "E", "I", "dE_numeric", "dE_closed", "gap"])
        gap = self.gap if self.gap is not None else np.full(self.lambdas.size, np.nan)
        for row in zip(self.lambdas, self.E, self.I, self.dE_numeric, self.dE_closed, gap):
            w.writerow([f"{v:.12g}" for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(), "E": self.E.tolist(), "I": self.I.tolist(),
            "dE_numeric": self.dE_numeric.tolist(), "dE_closed": self.dE_closed.tolist(),
            "c_s": self.c_s, "monotone": self.monotone,
        }


def energy_report(fam: SolutionFamily, p: Params, lambdas, x0: float = 0.0, *,
                  slack: float = 1e-6, with_gap: bool = False) -> EnergyReport:
    """Sample ``E``, ``I`` and both derivatives along ``lambdas``."""
    ls = np.asarray(lambdas, dtype=float)
    E = np.array([energy_E(fam, p, l, x0) for l in ls])
    I = np.array([energy_I(fam, p, l, x0) for l in ls])
    dn = np.array([derivative_numeric(fam, p, l, x0) for l in ls])
    dc = np.array([derivative_closed_form(fam, p, l, x0) for l in ls])
    mono = bool(np.all(np.diff(E) >= -slack * (1.0 + np.abs(E[:-1]))))
    gap = None
    if with_gap:
        gap = np.array([hemisphere_term(fam, p, l).gap for l in ls])
    return EnergyReport(ls, E, I, dn, dc, hemisphere_weight(p), mono, gap)
