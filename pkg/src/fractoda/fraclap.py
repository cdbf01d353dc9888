"""Fractional Laplacian and Riesz potentials of radial profiles.

All spherical integrals are reduced to one dimension.  Writing
``|z| = t|x|`` the operator becomes a 1-D integral against the angular
kernel ``k(t) = int_{S^{n-1}} |theta - t omega|^{-(n+2s)} d omega``; the
substitution ``t -> 1/t`` folds ``t > 1`` onto ``(0, 1)`` so that the
first-order parts of ``f(r) - f(rt)`` cancel pointwise and the principal
value never has to be formed from large cancelling numbers.  The folded
integral is taken in ``tau = -log t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from . import _kernels
from .constants import (
    DomainError,
    Params,
    gagliardo_constant,
    riesz_constant,
    sphere_area,
)
from .quadrature import Rule, gauss_legendre, panel_rule

__all__ = [
    "RadialFunction",
    "QuadResult",
    "ConvergenceWarning",
    "sphere_kernel",
    "riesz_sphere_kernel",
    "frac_lap_radial",
    "hardy_kernel_integral",
    "riesz_potential",
    "g_eps",
]


class ConvergenceWarning(RuntimeWarning):
    """Two successive quadrature refinements disagree beyond tolerance."""


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | float
    error: np.ndarray | float
    converged: bool


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True)
class RadialFunction:
    """A radial profile ``r -> f(r)`` evaluated on numpy arrays.

    ``decay`` is one of ``"log"``, ``"power"`` or ``"compact"`` and
    ``decay_param`` the matching exponent or support radius.  ``features``
    lists radii where the profile changes character (cut-off edges, kinks);
    quadratures place panel edges there.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    decay: str = "power"
    decay_param: float | None = None
    smoothness: float = 1.0
    features: tuple = ()
    label: str = "custom"

    def __call__(self, r):
        return self.evaluator(np.asarray(r, dtype=float))

    @property
    def finite_at_zero(self) -> bool:
        return self.decay != "log"

    # algebra used by linearity and scaling checks
    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        f, g = self.evaluator, other.evaluator
        return RadialFunction(
            lambda r: f(r) + g(r),
            decay=_weaker_decay(self, other),
            features=tuple(sorted(set(self.features) | set(other.features))),
            label=f"({self.label})+({other.label})",
        )

    def __rmul__(self, a: float) -> "RadialFunction":
        f = self.evaluator
        return replace(self, evaluator=lambda r: a * f(r), label=f"{a}*{self.label}")

    def dilate(self, mu: float) -> "RadialFunction":
        """The profile ``r -> f(mu r)``."""
        f = self.evaluator
        return replace(
            self,
            evaluator=lambda r: f(mu * r),
            features=tuple(x / mu for x in self.features),
            decay_param=(self.decay_param / mu
                         if self.decay == "compact" and self.decay_param else
                         self.decay_param),
            label=f"{self.label}(mu={mu})",
        )

    # constructors
    @classmethod
    def constant(cls, c: float) -> "RadialFunction":
        return cls(lambda r: np.full(np.shape(r), float(c)), "power", 0.0,
                   label=f"const({c})")

    @classmethod
    def log_profile(cls, coef: float, const: float = 0.0) -> "RadialFunction":
        """``const + coef * log r``."""
        return cls(lambda r: const + coef * np.log(r), "log", None,
                   label=f"{const}+{coef}*log(r)")

    @classmethod
    def gaussian(cls, width: float = 1.0) -> "RadialFunction":
        return cls(lambda r: np.exp(-(r / width) ** 2), "power", math.inf,
                   label=f"gauss({width})")

    @classmethod
    def riesz_profile(cls, n: float, s: float) -> "RadialFunction":
        """``(1 + r^2)^{-(n-2s)/2}``."""
        e = -(n - 2.0 * s) / 2.0
        return cls(lambda r: (1.0 + r * r) ** e, "power", n - 2.0 * s,
                   label="riesz_profile")

    @classmethod
    def bump(cls, radius: float = 1.0, power: int = 4) -> "RadialFunction":
        """``(1 - (r/R)^2)_+^power``: compactly supported, C^(power-1)."""
        def ev(r):
            x = 1.0 - (r / radius) ** 2
            return np.where(x > 0.0, np.maximum(x, 0.0) ** power, 0.0)
        return cls(ev, "compact", radius, smoothness=power - 1.0,
                   features=(radius,), label=f"bump({radius},{power})")


def _weaker_decay(a: RadialFunction, b: RadialFunction) -> str:
    order = {"compact": 0, "power": 1, "log": 2}
    return a.decay if order[a.decay] >= order[b.decay] else b.decay


# ---------------------------------------------------------------------------
# angular kernels


def _kernel_from_gap(n: float, s: float, u, one_minus_u2):
    """``int_S |theta - u omega|^{-(n+2s)}`` for 0 <= u < 1.

    ``one_minus_u2`` must be ``1 - u^2`` computed without cancellation.
    """
    u = np.asarray(u, dtype=float)
    if n == 1:
        one_minus_u = one_minus_u2 / (1.0 + u)
        return one_minus_u ** (-1.0 - 2.0 * s) + (1.0 + u) ** (-1.0 - 2.0 * s)
    # Euler-transformed Gegenbauer sum; c - a - b = 1 + 2s so the series is
    # regular at u = 1 and all the blow-up sits in the explicit power
    h = special.hyp2f1(-s, n / 2.0 - 1.0 - s, n / 2.0, u * u)
    return sphere_area(n) * one_minus_u2 ** (-1.0 - 2.0 * s) * h


def sphere_kernel(n: float, s: float, u) -> np.ndarray:
    """Angular kernel ``k(u)`` on ``0 <= u < 1``; ``k(1/u) = u^{n+2s} k(u)``."""
    u = np.asarray(u, dtype=float)
    return _kernel_from_gap(n, s, u, (1.0 - u) * (1.0 + u))


def riesz_sphere_kernel(n: float, s: float, u, one_minus_u=None) -> np.ndarray:
    """``int_S |theta - u omega|^{-(n-2s)} d omega`` for ``0 <= u < 1``."""
    u = np.asarray(u, dtype=float)
    d = (1.0 - u) if one_minus_u is None else np.asarray(one_minus_u, dtype=float)
    a = n - 2.0 * s
    if n == 1:
        return d ** (-a) + (1.0 + u) ** (-a)
    z = u * u
    g = d * (1.0 + u)
    area = sphere_area(n)
    if s > 0.5:
        return area * special.hyp2f1(a / 2.0, 1.0 - s, n / 2.0, z)
    if s < 0.5:
        return area * g ** (2.0 * s - 1.0) * special.hyp2f1(
            s, n / 2.0 - 1.0 + s, n / 2.0, z)
    # s = 1/2: c = a + b and the series is logarithmic at u = 1
    out = special.hyp2f1((n - 1.0) / 2.0, 0.5, n / 2.0, np.minimum(z, 0.75))
    near = z > 0.75
    if np.any(near):
        out = np.where(near, _hyp2f1_log_edge((n - 1.0) / 2.0, 0.5,
                                              np.where(near, g, 0.25)), out)
    return area * out


def _hyp2f1_log_edge(a: float, b: float, w, terms: int = 40):
    """``2F1(a, b; a+b; 1-w)`` for small ``w`` via the logarithmic expansion.

    ``w`` is passed directly so that ``1 - z`` keeps full relative precision.
    """
    w = np.asarray(w, dtype=float)
    pref = math.gamma(a + b) / (math.gamma(a) * math.gamma(b))
    logw = np.log(w)
    total = np.zeros_like(w)
    coef = 1.0
    wk = np.ones_like(w)
    for k in range(terms):
        total += coef * (2.0 * special.digamma(k + 1.0) - special.digamma(a + k)
                         - special.digamma(b + k) - logw) * wk
        coef *= (a + k) * (b + k) / (k + 1.0) ** 2
        wk = wk * w
    return pref * total


# ---------------------------------------------------------------------------
# tau-rule for the folded principal-value integral


@dataclass(frozen=True)
class _TauRule:
    tau: np.ndarray
    w: np.ndarray
    kern: np.ndarray          # k(e^{-tau})
    tau_c: float              # below tau_c the integrand is modelled
    probe: np.ndarray         # two probe points inside (0, tau_c]
    kern_probe: np.ndarray


def _tau_edges(s: float, levels: int, width: float, tau_max: float | None):
    if tau_max is None:
        # folded integrand decays like tau * e^{-2 s tau}
        tau_max = max(60.0, 40.0 / s)
    near = 2.0 ** -np.arange(levels, -1, -1.0)       # tau_c ... 1
    mid_hi = min(40.0, tau_max)
    mid = np.arange(1.0 + width, mid_hi + 0.5 * width, width)
    edges = [near, mid]
    t = mid[-1] if mid.size else 1.0
    far = []
    step = width
    while t < tau_max:
        step *= 1.15
        t += step
        far.append(t)
    edges.append(np.array(far))
    return np.concatenate(edges)


@lru_cache(maxsize=128)
def _tau_rule(n: float, s: float, m: int, levels: int, width: float,
              tau_max: float | None) -> _TauRule:
    edges = _tau_edges(s, levels, width, tau_max)
    r = panel_rule(edges, m)
    tau = r.x
    kern = _kernel_from_gap(n, s, np.exp(-tau), -np.expm1(-2.0 * tau))
    tau_c = float(edges[0])
    probe = np.array([tau_c, 0.5 * tau_c])
    kp = _kernel_from_gap(n, s, np.exp(-probe), -np.expm1(-2.0 * probe))
    for a in (tau, r.w, kern, probe, kp):
        a.setflags(write=False)
    return _TauRule(tau, r.w, kern, tau_c, probe, kp)


def _folded_bracket(f: RadialFunction, r: np.ndarray, tau: np.ndarray,
                    n: float, s: float, f_r: np.ndarray) -> np.ndarray:
    """``(f(r)-f(r e^-tau)) e^{-n tau} + (f(r)-f(r e^tau)) e^{-2s tau}``."""
    inner = f(r[:, None] * np.exp(-tau)[None, :])
    outer = f(r[:, None] * np.exp(tau)[None, :])
    fr = f_r[:, None]
    return (fr - inner) * np.exp(-n * tau)[None, :] + (fr - outer) * np.exp(
        -2.0 * s * tau)[None, :]


def _folded_integral(f, r, n, s, rule: _TauRule) -> np.ndarray:
    f_r = f(r)
    body = _folded_bracket(f, r, rule.tau, n, s, f_r) * rule.kern[None, :]
    total = body @ rule.w
    # near tau = 0 the integrand is tau^{1-2s}(j0 + j1 tau + ...); fit the
    # two coefficients from exact probes and integrate the model on [0, tau_c]
    jp = _folded_bracket(f, r, rule.probe, n, s, f_r) * rule.kern_probe[None, :]
    a = 1.0 - 2.0 * s
    t1, t2 = rule.probe
    g1 = jp[:, 0] / t1 ** a
    g2 = jp[:, 1] / t2 ** a
    j1 = (g1 - g2) / (t1 - t2)
    j0 = g1 - j1 * t1
    tc = rule.tau_c
    total = total + j0 * tc ** (a + 1.0) / (a + 1.0) + j1 * tc ** (a + 2.0) / (a + 2.0)
    return total


@lru_cache(maxsize=64)
def _sigma_rule(m: int, width: float, lo: float, hi: float) -> Rule:
    edges = np.arange(lo, hi + 0.5 * width, width)
    return panel_rule(edges, m)


def _frac_lap_at_origin(f: RadialFunction, n, s, m, width, tau_max):
    if not f.finite_at_zero:
        raise DomainError("profile is singular at r = 0")
    hi = max(60.0, 40.0 / s) if tau_max is None else tau_max
    # f(0) - f(rho) ~ rho^2 for smooth radial f; below rho = 1e-4 the
    # difference is all rounding, so stop there and add the rho^2 tail
    lo = math.log(1e-4)
    rule = _sigma_rule(m, width, lo, hi)
    f0 = float(f(np.array([0.0]))[0])
    # int_0^inf (f(0)-f(rho)) rho^{-1-2s} d rho with rho = e^sigma
    g = lambda sig: (f0 - f(np.exp(sig))) * np.exp(-2.0 * s * sig)
    tail = float(g(np.array([lo]))[0]) / (2.0 - 2.0 * s)
    return sphere_area(n) * (float(g(rule.x) @ rule.w) + tail)


def frac_lap_radial(
    f: RadialFunction,
    p: Params,
    r,
    *,
    tol: float = 1e-4,
    m: int = 10,
    levels: int = 10,
    width: float = 0.5,
    tau_max: float | None = None,
    full_output: bool = False,
):
    """``(-Delta)^s f`` at radii ``r`` (array or scalar).

    The value comes from an ``m``-point panel rule; a second pass with
    ``m + 4`` points supplies the error estimate.  A
    :class:`ConvergenceWarning` is issued when the two differ by more than
    ``tol`` relative to ``max(|value|, |f(r)| r^{-2s})``.
    """
    p.require_fractional()
    n, s = p.n, p.s
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0):
        raise DomainError("radii must be nonnegative")
    C = gagliardo_constant(p)
    out = np.empty_like(r_arr)
    err = np.zeros_like(r_arr)
    pos = r_arr > 0
    zero = ~pos
    if np.any(pos):
        rp = r_arr[pos]
        coarse = _folded_integral(f, rp, n, s, _tau_rule(n, s, m, levels, width, tau_max))
        fine = _folded_integral(f, rp, n, s, _tau_rule(n, s, m + 4, levels, width, tau_max))
        out[pos] = C * rp ** (-2.0 * s) * fine
        err[pos] = C * rp ** (-2.0 * s) * np.abs(fine - coarse)
    if np.any(zero):
        a = _frac_lap_at_origin(f, n, s, m, width, tau_max)
        b = _frac_lap_at_origin(f, n, s, m + 4, width, tau_max)
        out[zero] = C * b
        err[zero] = C * abs(a - b)
    scale = np.maximum(np.abs(out), 1e-300)
    converged = bool(np.all(err <= tol * scale + 1e-13))
    if not converged:
        warnings.warn(
            f"frac_lap_radial: refinement gap {np.max(err / scale):.2e} exceeds tol {tol}",
            ConvergenceWarning, stacklevel=2,
        )
    if full_output:
        v = out if np.ndim(r) else float(out[0])
        e = err if np.ndim(r) else float(err[0])
        return QuadResult(v, e, converged)
    return out if np.ndim(r) else float(out[0])


# ---------------------------------------------------------------------------
# Hardy kernel integral


def hardy_kernel_integral(p: Params, *, m: int = 16, levels: int = 24) -> float:
    """Principal-value integral whose product with ``C(n,s)`` is ``Lambda``.

    It equals ``int_0^inf (1 - t^{-b}) t^{n-1} k(t) dt`` with
    ``b = (n-2s)/2``; folding ``t -> 1/t`` turns the integrand into
    ``k(u) u^{2s-1} (1 - u^b)^2``, which is positive and needs no principal
    value.  In ``tau = -log u`` the factor ``1 - u^b = -expm1(-b tau)``
    is exact, so the rule can be graded all the way to ``tau = 2^-levels``.
    """
    p.require_supercritical()
    p.require_fractional()
    n, s = p.n, p.s
    b = (n - 2.0 * s) / 2.0
    tau_max = max(80.0, 60.0 / s)
    near = 2.0 ** -np.arange(levels, -1, -1.0)
    mid = np.arange(1.5, 40.0 + 0.25, 0.5)
    far = np.geomspace(41.0, tau_max, 40)
    edges = np.concatenate((near, mid, far))
    rule = panel_rule(edges, m)

    def integrand(tau):
        kern = _kernel_from_gap(n, s, np.exp(-tau), -np.expm1(-2.0 * tau))
        return kern * np.exp(-2.0 * s * tau) * np.expm1(-b * tau) ** 2

    total = float(integrand(rule.x) @ rule.w)
    # integrand ~ tau^{1-2s}(j0 + j1 tau) on [0, tau_c]
    tc = float(near[0])
    a = 1.0 - 2.0 * s
    probe = np.array([tc, 0.5 * tc])
    g = integrand(probe) / probe ** a
    j1 = (g[0] - g[1]) / (probe[0] - probe[1])
    j0 = g[0] - j1 * probe[0]
    return total + j0 * tc ** (a + 1.0) / (a + 1.0) + j1 * tc ** (a + 2.0) / (a + 2.0)


# ---------------------------------------------------------------------------
# Riesz potential


@lru_cache(maxsize=16)
def _unit_rule(m: int, depth0: int, depth1: int):
    """Rule on (0, 1) graded dyadically toward both ends.

    Returns ``(u, one_minus_u, w, ends)``.  Toward ``u = 0`` panels are
    dyadic down to ``2^-depth0``; toward ``u = 1`` they are dyadic in
    ``1 - u`` down to ``2^-depth1``.  The two innermost panels at each end
    are listed in ``ends`` so callers can add a geometric tail estimate for
    the uncovered pieces ``(0, 2^-depth0)`` and ``(1 - 2^-depth1, 1)``.
    """
    t, w = gauss_legendre(m)
    lo_edges = 2.0 ** -np.arange(depth0, 0, -1.0)
    u_lo = (lo_edges[:-1, None] + np.diff(lo_edges)[:, None] * t).ravel()
    w_lo = (np.diff(lo_edges)[:, None] * w).ravel()
    hi_edges = 2.0 ** -np.arange(depth1, 0, -1.0)
    d_hi = (hi_edges[:-1, None] + np.diff(hi_edges)[:, None] * t).ravel()
    w_hi = (np.diff(hi_edges)[:, None] * w).ravel()
    u = np.concatenate((u_lo, 1.0 - d_hi))
    d = np.concatenate((1.0 - u_lo, d_hi))
    wt = np.concatenate((w_lo, w_hi))
    k = u_lo.size
    ends = (
        (slice(0, m), slice(m, 2 * m)),
        (slice(k, k + m), slice(k + m, k + 2 * m)),
    )
    for a in (u, d, wt):
        a.setflags(write=False)
    return u, d, wt, ends


def _geometric_tail(vals: np.ndarray, w: np.ndarray, last: slice, prev: slice):
    """Sum of the uncovered dyadic panels beyond ``last``.

    For an integrand that is a power of the distance to the endpoint the
    dyadic panel contributions form a geometric series; its ratio is read
    off the two innermost panels.
    """
    i_last = vals[:, last] @ w[last]
    i_prev = vals[:, prev] @ w[prev]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = i_last / i_prev
    ok = np.isfinite(q) & (q > 0.0) & (q < 0.95)
    return np.where(ok, i_last * q / (1.0 - np.where(ok, q, 0.0)), 0.0)


def riesz_potential(
    density: RadialFunction,
    p: Params,
    x,
    *,
    m: int = 12,
    depth0: int = 100,
    depth1: int = 60,
    tol: float = 1e-6,
) -> np.ndarray | float:
    """``c(n,s) int (|x-z|^{-(n-2s)} - (1+|z|)^{-(n-2s)}) rho(|z|) dz``.

    The ``z`` integral is split at ``|z| = |x|`` and both halves are mapped
    to ``u in (0, 1)`` (``|z| = |x| u`` and ``|z| = |x| / u``); the weak
    singularity at ``u = 1`` is resolved by dyadic grading in ``1 - u``.
    A second pass at ``m + 4`` nodes gives the refinement check.
    """
    p.require_supercritical()
    n, s = p.n, p.s
    a = n - 2.0 * s
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise DomainError("riesz_potential needs x > 0")
    area = sphere_area(n)

    def run(mm):
        u, d, w, ends = _unit_rule(mm, depth0, depth1)
        kR = riesz_sphere_kernel(n, s, u, d)
        r = xs[:, None]
        # inner half: |z| = r u
        t_in = r * u[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            rho_in = density(t_in)
            inner = rho_in * t_in ** (n - 1.0) * (
                r ** (-a) * kR[None, :] - area * (1.0 + t_in) ** (-a)) * r
            t_out = r / u[None, :]
            rho_out = density(t_out)
            outer = rho_out * t_out ** (n - 1.0) * (
                t_out ** (-a) * kR[None, :] - area * (1.0 + t_out) ** (-a)
            ) * r / (u * u)[None, :]
        vals = np.where(rho_in == 0.0, 0.0, inner) + np.where(rho_out == 0.0, 0.0, outer)
        total = vals @ w
        for last, prev in ends:
            total = total + _geometric_tail(vals, w, last, prev)
        return total

    c = riesz_constant(p)
    v1 = run(m)
    v2 = run(m + 4)
    if not np.all(np.isfinite(v2)) or np.any(np.abs(v2 - v1) > tol * np.maximum(1.0, np.abs(v2))):
        warnings.warn("riesz_potential: refinement did not settle (divergent tail?)",
                      ConvergenceWarning, stacklevel=2)
    out = c * v2
    return out if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------------------
# cut-off autocorrelation


def g_eps(t, eps: float, *, m: int = 12, width: float = 0.25) -> np.ndarray | float:
    """``int_0^inf r^-1 eta(r) (eta(r) - eta(r t)) dr`` for the cut-off eta.

    Panels live in ``log r`` over ``[eps/2, 2/eps]`` with edges at every
    transition of ``eta(r)`` and ``eta(r t)``.
    """
    if not (0.0 < eps < 0.5):
        raise DomainError("eps must lie in (0, 1/2)")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0):
        raise DomainError("t must be positive")
    base = np.log([eps / 2.0, eps, 1.0 / eps, 2.0 / eps])
    lo, hi = base[0], base[-1]
    out = np.empty(ts.size)
    for i, tt in enumerate(ts):
        lt = math.log(tt)
        pts = np.concatenate((base, base - lt))
        pts = pts[(pts > lo) & (pts < hi)]
        edges = np.unique(np.concatenate(([lo], pts, [hi])))
        pieces = [edges[:1]]
        for a0, b0 in zip(edges[:-1], edges[1:]):
            k = max(1, int(math.ceil((b0 - a0) / width)))
            pieces.append(np.linspace(a0, b0, k + 1)[1:])
        rule = panel_rule(np.concatenate(pieces), m)
        r = np.exp(rule.x)
        e1 = _kernels.cutoff(r, eps)
        e2 = _kernels.cutoff(r * tt, eps)
        # dr / r = d log r
        out[i] = float((e1 * (e1 - e2)) @ rule.w)
    return out if np.ndim(t) else float(out[0])
