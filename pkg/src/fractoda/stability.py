"""Stability quadratic form, Hardy-type test families and the log asymptotics.

For test profiles ``phi_1..phi_Q`` the form compares

    lhs = sum_a  int phi_a (-Delta)^s phi_a
    rhs = sum_a  int V_{a-1} (phi_a - phi_{a-1})^2,      V_0 = 0, phi_0 = 0,

and a family is stable when ``lhs >= rhs`` for every admissible test.  The
Hardy-type profiles ``c_a r^-(n-2s)/2 eta_eps(r)`` make both sides grow
like ``log(1/eps)``; comparing the growth rates gives the threshold.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .constants import (DomainError, Params, kappa, lambda_alpha, lambda_ns,
                        max_rayleigh, sphere_area, zero_sum_basis)
from .extension import dirichlet_energy, solve_extension_radial
from .fraclap import ConvergenceWarning, RadialFunction, frac_lap_radial
from .homog import SolutionFamily
from .quadrature import panel_rule

__all__ = [
    "cutoff",
    "cutoff_log_mass",
    "TestFamily",
    "hardy_test_family",
    "SeminormResult",
    "seminorm",
    "seminorm_extension",
    "StabilityReport",
    "stability_margin",
    "LogCoefficients",
    "leading_log_coefficients",
    "WitnessResult",
    "witness_search",
    "EPS_LADDER",
]

EPS_LADDER = (1e-2, 1e-3, 1e-4)


def _check_eps(eps):
    if not (0.0 < eps < 0.5):
        raise DomainError("eps must lie in (0, 1/2)")


def cutoff(eps: float) -> RadialFunction:
    """Smooth ``eta_eps``: 1 on ``[eps, 1/eps]``, 0 off ``[eps/2, 2/eps]``."""
    _check_eps(eps)
    return RadialFunction(
        lambda r: _kernels.cutoff(r, eps), "compact", 2.0 / eps, smoothness=math.inf,
        features=(eps / 2.0, eps, 1.0 / eps, 2.0 / eps), label=f"cutoff({eps:g})")


def _log_panels(lo, hi, feats, width):
    pts = np.log(np.asarray(feats, dtype=float))
    pts = pts[(pts > lo) & (pts < hi)]
    edges = np.unique(np.concatenate(([lo], pts, [hi])))
    pieces = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(math.ceil((b - a) / width)))
        pieces.append(np.linspace(a, b, k + 1)[1:])
    return np.concatenate(pieces)


def cutoff_log_mass(eps: float, *, m: int = 16, width: float = 0.125) -> float:
    """``int_0^inf r^-1 eta_eps(r)^2 dr`` by Gauss-Legendre in ``log r``."""
    _check_eps(eps)
    e = _log_panels(math.log(eps / 2), math.log(2 / eps), [eps, 1 / eps], width)
    rule = panel_rule(e, m)
    eta = _kernels.cutoff(np.exp(rule.x), eps)
    return float((eta * eta) @ rule.w)


# ---------------------------------------------------------------------------
# test families


@dataclass(frozen=True)
class TestFamily:
    """Radial test profiles ``phi_1..phi_Q`` supported in ``support``."""

    __test__ = False  # not a pytest class

    params: Params
    phi: tuple[RadialFunction, ...]
    support: tuple[float, float]
    coeffs: np.ndarray | None = None
    eps: float | None = None
    zero_sum: bool = True

    def __post_init__(self):
        if len(self.phi) != self.params.Q:
            raise ValueError("need Q test profiles")
        if self.zero_sum:
            r = self.sample_radii()
            vals = [f(r) for f in self.phi]
            scale = max(1.0, max(float(np.max(np.abs(v))) for v in vals))
            tot = np.max(np.abs(sum(vals)))
            if tot > 1e-12 * scale:
                raise DomainError(f"test family violates zero sum ({tot:.2e})")

    @property
    def is_hardy(self) -> bool:
        return self.coeffs is not None

    def sample_radii(self, k: int = 400) -> np.ndarray:
        lo, hi = self.support
        return np.geomspace(lo * 0.5, hi * 2.0, k)


def hardy_profile(p: Params, eps: float) -> RadialFunction:
    """``r^-(n-2s)/2 eta_eps(r)``."""
    beta = (p.n - 2.0 * p.s) / 2.0
    eta = cutoff(eps)

    def ev(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        pos = r >= eps / 2.0
        e = eta(r[pos])
        out[pos] = np.where(e > 0.0, r[pos] ** (-beta), 0.0) * e
        return out

    return RadialFunction(ev, "compact", 2.0 / eps, smoothness=math.inf,
                          features=eta.features, label=f"hardy({eps:g})")


def hardy_test_family(p: Params, c, eps: float, *, zero_sum: bool = True) -> TestFamily:
    """``phi_a = c_a r^-(n-2s)/2 eta_eps(r)``."""
    p.require_supercritical()
    _check_eps(eps)
    c = np.asarray(c, dtype=float)
    if c.shape != (p.Q,):
        raise ValueError("c needs Q entries")
    if zero_sum and abs(c.sum()) > 1e-12 * max(1.0, np.max(np.abs(c))):
        raise DomainError("coefficients must sum to zero")
    base = hardy_profile(p, eps)
    phis = [_scaled(base, ca) for ca in c]
    if zero_sum:
        # last profile as the exact negated sum so the check is not
        # spoiled by rounding in sum(c)
        head = phis[:-1]
        phis[-1] = replace(base, evaluator=lambda r: -sum(f(r) for f in head))
    phis = tuple(phis)
    return TestFamily(p, phis, (eps / 2.0, 2.0 / eps), c.copy(), eps, zero_sum)


def _scaled(f: RadialFunction, a: float) -> RadialFunction:
    ev = f.evaluator
    return replace(f, evaluator=lambda r: a * ev(r))


# ---------------------------------------------------------------------------
# the seminorm  int phi (-Delta)^s phi


@dataclass(frozen=True)
class SeminormResult:
    value: float
    error: float
    crosscheck: float | None = None
    discrepancy: float | None = None
    flagged: bool = False


def _radial_product(r, n, *factors):
    """``r^(n-1) * prod(factors)`` in log space; each factor alone may overflow
    against ``r^(n-1)`` in high dimension while the product stays moderate."""
    sign = np.ones_like(r)
    logs = (n - 1.0) * np.log(r)
    for f in factors:
        f = np.asarray(f, dtype=float)
        sign = sign * np.sign(f)
        with np.errstate(divide="ignore"):
            logs = logs + np.log(np.abs(f))
    return np.where(sign == 0.0, 0.0, sign * np.exp(logs))


def _support_rule(phi: RadialFunction, width: float, m: int):
    if phi.decay != "compact" or phi.decay_param is None:
        raise DomainError("seminorm needs a compactly supported profile")
    R = float(phi.decay_param)
    feats = [f for f in phi.features if 0 < f < R]
    lo = min(feats) if feats else R
    # profiles that vanish near the origin get log panels from their inner edge
    probe = lo * np.geomspace(1e-6, 0.999, 16)
    if feats and not np.any(phi(probe)):
        e = np.exp(_log_panels(math.log(lo), math.log(R), feats, width))
        return panel_rule(e, m)
    e = np.unique(np.concatenate((np.linspace(0.0, R, 41), feats)))
    return panel_rule(e, m)


def seminorm(phi: RadialFunction, p: Params, *, cross_check: bool = False,
             width: float = 0.125, m: int = 12, tol: float = 1e-6,
             cross_rtol: float = 0.03, **ext_kw) -> SeminormResult:
    """``int phi (-Delta)^s phi dx`` for a compactly supported radial ``phi``.

    The primary route integrates ``phi * frac_lap_radial(phi)`` over the
    support.  With ``cross_check=True`` the weighted Dirichlet energy of the
    extension, divided by ``kappa_s``, is computed as a second route
    (:func:`seminorm_extension`); a relative gap above ``cross_rtol`` sets
    ``flagged`` and warns.
    """
    p.require_fractional()
    n = p.n
    rule = _support_rule(phi, width, m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        res = frac_lap_radial(phi, p, rule.x, tol=tol, full_output=True)
    f = phi(rule.x)
    S = sphere_area(n)
    value = S * float(_radial_product(rule.x, n, f, res.value) @ rule.w)
    error = S * float(np.abs(_radial_product(rule.x, n, f, res.error)) @ rule.w)
    if not cross_check:
        return SeminormResult(value, error)
    other = seminorm_extension(phi, p, **ext_kw)
    disc = abs(other - value) / max(abs(value), 1e-300)
    flagged = disc > cross_rtol
    if flagged:
        warnings.warn(f"seminorm routes disagree by {disc:.2%}", ConvergenceWarning,
                      stacklevel=2)
    return SeminormResult(value, error, other, disc, flagged)


def seminorm_extension(phi: RadialFunction, p: Params, *, cells_per_unit: int = 10,
                       box: float | None = None) -> float:
    """Extension-energy route: ``dirichlet_energy / kappa_s``.

    The field is solved on ``[0, box]^2`` at two meshes (``h`` and ``h/2``)
    and the energies are Richardson-extrapolated with order 2.  Needs a
    profile that is finite at the origin with support radius ``R``; the box
    defaults to ``12 R``.
    """
    p.require_fractional()
    if phi.decay != "compact" or not phi.finite_at_zero:
        raise DomainError("extension route needs a bounded compact profile")
    R = float(phi.decay_param)
    L = box if box is not None else 12.0 * R
    s = p.s
    vals = []
    for k in (1, 2):
        I = int(round(cells_per_unit * L / R)) * k
        dr = L / I
        J = int(math.ceil(8.0 * L ** s / dr)) + 1
        F = solve_extension_radial(phi, p, (0.0, L, L), (I, J))
        vals.append(dirichlet_energy(F, (0.0, L * (1 - 1e-9))))
    e = vals[1] + (vals[1] - vals[0]) / 3.0
    return e / kappa(s)


@lru_cache(maxsize=128)
def _hardy_seminorm(n: float, s: float, eps: float) -> tuple[float, float]:
    p = Params(n, s)
    r = seminorm(hardy_profile(p, eps), p)
    return r.value, r.error


# ---------------------------------------------------------------------------
# stability margin


@dataclass(frozen=True)
class StabilityReport:
    lhs: float
    rhs: float
    margin: float
    eps: float | None = None
    coeffs: tuple | None = None
    leading_log_coefficients: tuple | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _interaction_weights(fam: SolutionFamily, test: TestFamily, m=16, width=0.125):
    """``w_b = int V_b phi_hardy^2`` per b for a Hardy test (homogeneous: closed)."""
    p = fam.params
    S = sphere_area(p.n)
    if fam.kind == "homogeneous":
        L = cutoff_log_mass(test.eps)
        return np.array([S * lambda_alpha(p, b) * L for b in range(1, p.Q)])
    base = hardy_profile(p, test.eps)
    e = _log_panels(math.log(test.eps / 2), math.log(2 / test.eps),
                    [test.eps, 1 / test.eps], width)
    rule = panel_rule(np.exp(e), m)
    ph = base(rule.x)
    return np.array([S * float(_radial_product(rule.x, p.n, fam.V(b, rule.x), ph, ph) @ rule.w)
                     for b in range(1, p.Q)])


def _general_rhs(fam: SolutionFamily, test: TestFamily, m=16) -> float:
    p = fam.params
    S = sphere_area(p.n)
    lo, hi = test.support
    rule = panel_rule(np.geomspace(lo, hi, 200 + 1), m)
    phis = [np.zeros_like(rule.x)] + [f(rule.x) for f in test.phi]
    total = 0.0
    for a in range(1, p.Q + 1):
        Vw = fam.V(a - 1, rule.x)          # V_0 = 0 realizes f_0 = -inf
        d = phis[a] - phis[a - 1]
        total += S * float(_radial_product(rule.x, p.n, Vw, d, d) @ rule.w)
    return total


def stability_margin(fam: SolutionFamily, test: TestFamily) -> StabilityReport:
    """``lhs - rhs`` of the stability form for a radial family and test."""
    p = fam.params
    if (p.n, p.s, p.Q) != (test.params.n, test.params.s, test.params.Q):
        raise DomainError("family and test parameters differ")
    if not fam.radial:
        raise DomainError("support mismatch: family is not radial about the origin")
    if test.is_hardy:
        c = test.coeffs
        S_eps, _ = _hardy_seminorm(p.n, p.s, test.eps)
        lhs = float(np.sum(c * c)) * S_eps
        w = _interaction_weights(fam, test)
        rhs = float(np.sum(w * np.diff(c) ** 2))
        return StabilityReport(lhs, rhs, lhs - rhs, test.eps, tuple(c))
    lhs = sum(seminorm(f, p).value for f in test.phi)
    rhs = _general_rhs(fam, test)
    return StabilityReport(lhs, rhs, lhs - rhs)


# ---------------------------------------------------------------------------
# leading logarithmic coefficients


@dataclass(frozen=True)
class LogCoefficients:
    """Growth rates of both sides of the form along the Hardy family.

    ``lhs_coeff``/``rhs_coeff`` multiply ``log(1/eps)``; the ``*_mass``
    variants multiply the cut-off mass ``int r^-1 eta_eps^2`` (which is
    ``2 log(1/eps) + const``).  ``fit_*`` are the measured slopes of each
    side against ``log(1/eps)``.
    """

    lhs_coeff: float
    rhs_coeff: float
    lhs_mass: float
    rhs_mass: float
    fit_lhs: float | None = None
    fit_rhs: float | None = None
    fit_margin: float | None = None
    log_linear: bool | None = None
    fit_rel_error: float | None = None

    @property
    def margin_coeff(self) -> float:
        return self.lhs_coeff - self.rhs_coeff


def _closed_coefficients(p: Params, c: np.ndarray) -> tuple[float, float]:
    S = sphere_area(p.n)
    lhs = lambda_ns(p) * S * float(np.sum(c * c))
    lam = np.array([lambda_alpha(p, a) for a in range(1, p.Q)])
    rhs = S * float(np.sum(lam * np.diff(c) ** 2))
    return lhs, rhs


def _slopes(x, y):
    s = np.diff(y) / np.diff(x)
    return s


def leading_log_coefficients(fam: SolutionFamily, p: Params, c, *, fit: bool = True,
                             eps_ladder=EPS_LADDER, fit_tol: float = 0.05,
                             linear_tol: float = 0.10) -> LogCoefficients:
    """Closed-form growth coefficients plus an empirical slope fit."""
    if fam.kind != "homogeneous":
        raise DomainError("leading coefficients are defined for the homogeneous family")
    c = np.asarray(c, dtype=float)
    lm, rm = _closed_coefficients(p, c)
    out = LogCoefficients(2.0 * lm, 2.0 * rm, lm, rm)
    if not fit or not np.any(c):
        return out
    xs = np.log(1.0 / np.asarray(eps_ladder))
    reps = [stability_margin(fam, hardy_test_family(p, c, e)) for e in eps_ladder]
    L = np.array([r.lhs for r in reps])
    R = np.array([r.rhs for r in reps])
    M = L - R
    fl, fr, fm = (float(np.polyfit(xs, v, 1)[0]) for v in (L, R, M))
    seg = _slopes(xs, M)
    linear = bool(np.all(np.abs(seg - fm) <= linear_tol * abs(fm)))
    if not linear:
        warnings.warn("margin is not log-linear over the eps ladder", ConvergenceWarning,
                      stacklevel=2)
    target = out.margin_coeff
    rel = abs(fm - target) / abs(target) if target != 0 else abs(fm)
    return LogCoefficients(out.lhs_coeff, out.rhs_coeff, lm, rm, fl, fr, fm, linear, rel)


# ---------------------------------------------------------------------------
# witness search


@dataclass(frozen=True)
class WitnessResult:
    c: np.ndarray
    eps: float
    margin: float
    found: bool
    evaluations: int
    note: str

    def to_dict(self) -> dict:
        return {"c": [float(v) for v in self.c], "eps": self.eps, "margin": self.margin,
                "found": self.found, "evaluations": self.evaluations, "note": self.note}


def witness_search(fam: SolutionFamily, p: Params, *, eps_ladder=EPS_LADDER,
                   step: float = 0.5, min_step: float = 1e-3, max_iter: int = 200,
                   seed_c=None) -> WitnessResult:
    """Most negative Hardy-family margin over the unit zero-sum sphere.

    Coordinate search in the orthonormal zero-sum basis, seeded at the
    Rayleigh maximizer, halving the step whenever no coordinate move
    improves.  A negative margin certifies instability; a nonnegative
    result only says no Hardy-type witness was found.
    """
    if fam.kind != "homogeneous":
        raise DomainError("witness search runs on the homogeneous family")
    p.require_supercritical()
    p.require_fractional()
    Q = p.Q
    B = zero_sum_basis(Q)                     # (Q, Q-1), orthonormal columns
    c0 = np.asarray(seed_c, dtype=float) if seed_c is not None else max_rayleigh(Q)[1]
    z = B.T @ c0
    z /= np.linalg.norm(z)
    best = None
    evals = 0
    for eps in eps_ladder:
        def margin(zz):
            c = B @ (zz / np.linalg.norm(zz))
            return stability_margin(fam, hardy_test_family(p, c, eps)).margin

        zc = z.copy()
        val = margin(zc)
        evals += 1
        h = step
        it = 0
        while h >= min_step and it < max_iter:
            it += 1
            improved = False
            for i in range(zc.size):
                for sgn in (1.0, -1.0):
                    trial = zc.copy()
                    trial[i] += sgn * h
                    if np.linalg.norm(trial) == 0:
                        continue
                    trial /= np.linalg.norm(trial)
                    v = margin(trial)
                    evals += 1
                    if v < val:
                        zc, val, improved = trial, v, True
            if not improved:
                h *= 0.5
        if best is None or val < best[2]:
            best = (B @ zc, eps, val)
    c, eps, val = best
    found = val < 0
    note = ("negative margin: Hardy-type witness certifies instability" if found else
            "no negative margin among Hardy-type tests; this is not a stability proof")
    return WitnessResult(c, eps, float(val), found, evals, note)
