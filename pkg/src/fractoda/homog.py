"""Explicit solution families of the fractional Toda system and their checks.

The system is ``(-Delta)^s f_a = V_a - V_{a-1}`` with
``V_a = exp(-(f_{a+1} - f_a))`` for ``a = 1..Q-1`` and ``V_0 = V_Q = 0``.
Families:

``homogeneous``
    ``f_a = psi_a + k_a log r`` with ``k_a = (2a-Q-1)s`` and constants fixed
    by ``exp(psi_a - psi_{a+1}) = lambda_a``, ``sum psi = 0``.
``perturbed``
    the homogeneous family translated to ``x = d`` (``n = 1``); an exact
    solution that is not homogeneous about the origin.
``bubble``
    ``f_1 = -f_2 = 1/2 log(mu / (mu^2 + x^2))`` for ``n = 1``, ``s = 1/2``,
    ``Q = 2``.
``custom``
    homogeneous plus a compact bump per component with zero sum; valid
    data but not a solution.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .constants import DomainError, Params, a_ns, lambda_alpha, sphere_area
from .extension import BubbleExtension, HomogeneousExtension
from .fraclap import ConvergenceWarning, RadialFunction, frac_lap_radial, riesz_potential
from .quadrature import gauss_legendre

__all__ = [
    "BumpSpec",
    "SolutionFamily",
    "make_constant_profile",
    "translated_family",
    "bubble_family",
    "bumped_family",
    "zero_family",
    "residual_main",
    "ResidualTable",
    "rescale",
    "decay_check",
    "DecayTable",
    "representation_check",
    "RepresentationReport",
    "sphere_identity",
    "check_zero_sum",
]

KINDS = ("homogeneous", "perturbed", "bubble", "custom")


@dataclass(frozen=True)
class BumpSpec:
    """``amplitudes[a] * (1 - (r/radius)^2)_+^power`` added to ``f_a``."""

    radius: float
    power: int
    amplitudes: tuple[float, ...]


@dataclass(frozen=True)
class SolutionFamily:
    """Q radial (or translated-radial) profiles with zero sum.

    ``psi`` and ``log_coef`` describe the ``psi_a + c_a log|x - center|``
    part of each trace; ``mu`` and ``bump`` add the bubble or bump parts.
    """

    params: Params
    kind: str
    psi: tuple[float, ...]
    log_coef: tuple[float, ...]
    center: float = 0.0
    mu: float | None = None
    bump: BumpSpec | None = None

    def __post_init__(self):
        Q = self.params.Q
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if len(self.psi) != Q or len(self.log_coef) != Q:
            raise ValueError("psi and log_coef need Q entries")
        if self.bump is not None and len(self.bump.amplitudes) != Q:
            raise ValueError("bump amplitudes need Q entries")
        if self.center != 0.0 and self.params.n != 1:
            raise DomainError("translated families are only radial in n = 1")

    @property
    def Q(self) -> int:
        return self.params.Q

    @property
    def scaling_exponents(self) -> np.ndarray:
        """``(2a - Q - 1) s`` for a = 1..Q."""
        Q, s = self.Q, self.params.s
        return np.array([(2 * a - Q - 1) * s for a in range(1, Q + 1)])

    @property
    def radial(self) -> bool:
        """True when every profile is radial about the origin."""
        return self.center == 0.0

    # -- traces -------------------------------------------------------------
    def profile(self, alpha: int) -> RadialFunction:
        """``f_alpha`` as a function of the distance to ``center``."""
        if not 1 <= alpha <= self.Q:
            raise IndexError(alpha)
        i = alpha - 1
        c0, k = self.psi[i], self.log_coef[i]
        if self.kind == "bubble":
            sign = 1.0 if alpha == 1 else -1.0
            mu = self.mu
            return RadialFunction(
                lambda r: c0 + sign * 0.5 * (math.log(mu) - np.log(mu * mu + r * r)),
                "log", None, features=(mu,), label=f"bubble{alpha}")
        base = RadialFunction.log_profile(k, c0) if k != 0.0 else RadialFunction.constant(c0)
        if self.bump is not None and self.bump.amplitudes[i] != 0.0:
            amp = self.bump.amplitudes[i]
            b = RadialFunction.bump(self.bump.radius, self.bump.power)
            out = base + amp * b
            return replace(out, decay=base.decay)
        return base

    def trace(self, alpha: int, x) -> np.ndarray:
        """``f_alpha`` at boundary points ``x`` (radii, or signed x for n = 1)."""
        x = np.asarray(x, dtype=float)
        return self.profile(alpha)(np.abs(x - self.center))

    def traces(self, x) -> np.ndarray:
        return np.stack([self.trace(a, x) for a in range(1, self.Q + 1)])

    def u(self, ell: int, x) -> np.ndarray:
        """``u_ell = f_ell - f_{ell+1}``."""
        return self.trace(ell, x) - self.trace(ell + 1, x)

    def V(self, ell: int, x) -> np.ndarray:
        """``exp(-(f_{ell+1} - f_ell))`` with the conventions ``V_0 = V_Q = 0``."""
        x = np.asarray(x, dtype=float)
        if ell <= 0 or ell >= self.Q:
            return np.zeros(np.shape(x))
        return np.exp(self.u(ell, x))

    # -- extensions ---------------------------------------------------------
    def extension(self, alpha: int):
        """Closed-form extension of ``f_alpha`` to the upper half-space."""
        i = alpha - 1
        n, s = self.params.n, self.params.s
        if self.kind == "bubble":
            sign = 1.0 if alpha == 1 else -1.0
            return BubbleExtension(self.mu, 0.5 * sign, self.psi[i])
        if self.bump is not None and any(self.bump.amplitudes):
            raise DomainError("bumped families have no closed-form extension")
        return HomogeneousExtension(n, s, self.psi[i], self.log_coef[i], self.center)

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        p = self.params
        return {
            "n": p.n, "s": p.s, "Q": p.Q, "kind": self.kind,
            "psi": list(self.psi), "log_coef": list(self.log_coef),
            "center": self.center, "mu": self.mu,
            "bump": asdict(self.bump) if self.bump else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SolutionFamily":
        b = d.get("bump")
        return cls(
            Params(d["n"], d["s"], d["Q"]), d["kind"], tuple(d["psi"]),
            tuple(d["log_coef"]), d.get("center", 0.0), d.get("mu"),
            BumpSpec(b["radius"], b["power"], tuple(b["amplitudes"])) if b else None,
        )

    @classmethod
    def from_json(cls, text: str) -> "SolutionFamily":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# constructors


def _homogeneous_psi(p: Params) -> tuple[float, ...]:
    Q = p.Q
    # psi_a - psi_{a+1} = log lambda_a; cumulative sums then centre
    steps = np.array([math.log(lambda_alpha(p, a)) for a in range(1, Q)])
    psi = np.concatenate(([0.0], -np.cumsum(steps)))
    psi -= psi.mean()
    # exact antisymmetry psi_a = -psi_{Q+1-a}
    psi = 0.5 * (psi - psi[::-1])
    return tuple(float(v) for v in psi)


def make_constant_profile(p: Params) -> SolutionFamily:
    """The homogeneous family with constant angular parts."""
    p.require_supercritical()
    k = tuple((2 * a - p.Q - 1) * p.s for a in range(1, p.Q + 1))
    return SolutionFamily(p, "homogeneous", _homogeneous_psi(p), k)


def translated_family(p: Params, d: float = 16.0) -> SolutionFamily:
    """Homogeneous family centred at ``x = d`` (n = 1 only)."""
    if p.n != 1:
        raise DomainError("translated families need n = 1")
    base = make_constant_profile(p)
    return replace(base, kind="perturbed", center=float(d))


def bubble_family(mu: float = 1.0) -> SolutionFamily:
    """Explicit non-homogeneous solution for n = 1, s = 1/2, Q = 2."""
    if mu <= 0:
        raise DomainError("mu must be positive")
    return SolutionFamily(Params(1, 0.5, 2), "bubble", (0.0, 0.0), (0.0, 0.0), mu=float(mu))


def bumped_family(p: Params, amplitudes, radius: float = 1.0, power: int = 4) -> SolutionFamily:
    """Homogeneous family plus zero-sum compact bumps (not a solution)."""
    amps = tuple(float(a) for a in amplitudes)
    if len(amps) != p.Q:
        raise ValueError("need Q amplitudes")
    if abs(sum(amps)) > 1e-12 * max(1.0, max(map(abs, amps))):
        raise DomainError("bump amplitudes must sum to zero")
    base = make_constant_profile(p)
    return replace(base, kind="custom", bump=BumpSpec(float(radius), int(power), amps))


def zero_family(p: Params) -> SolutionFamily:
    """All profiles identically zero (valid data, not a solution)."""
    z = tuple(0.0 for _ in range(p.Q))
    return SolutionFamily(p, "custom", z, z)


def check_zero_sum(fam: SolutionFamily, x, tol: float = 1e-10) -> float:
    """Max of ``|sum_a f_a|`` on samples; raises if above ``tol``."""
    tot = np.max(np.abs(np.sum(fam.traces(x), axis=0)))
    if tot > tol:
        raise AssertionError(f"zero-sum violated: {tot:.3e}")
    return float(tot)


def sphere_identity(fam: SolutionFamily) -> list[tuple[float, float]]:
    """Pairs ``(|S| exp(psi_a - psi_{a+1}), lambda_a |S|)`` for constant psi."""
    if fam.kind != "homogeneous":
        raise DomainError("sphere identity concerns the homogeneous family")
    p = fam.params
    S = sphere_area(p.n)
    return [(S * math.exp(fam.psi[a - 1] - fam.psi[a]), lambda_alpha(p, a) * S)
            for a in range(1, p.Q)]


# ---------------------------------------------------------------------------
# residual of the system


@dataclass(frozen=True)
class ResidualTable:
    radii: np.ndarray
    lhs: np.ndarray          # (Q, R): (-Delta)^s f_a
    rhs: np.ndarray          # (Q, R): V_a - V_{a-1}
    absolute: np.ndarray
    relative: np.ndarray
    converged: bool

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative))

    @property
    def max_absolute(self) -> float:
        return float(np.max(self.absolute))


def residual_main(fam: SolutionFamily, radii, *, tol: float = 1e-6) -> ResidualTable:
    """Residual of the system at distances ``radii`` from the family centre.

    Relative residuals are normalized by ``|V_a| + |V_{a-1}|``.
    """
    p = fam.params
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    xs = fam.center + r
    Q = fam.Q
    lhs = np.empty((Q, r.size))
    ok = True
    for a in range(1, Q + 1):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            res = frac_lap_radial(fam.profile(a), p, r, tol=tol, full_output=True)
        ok = ok and res.converged and not caught
        lhs[a - 1] = res.value
    V = np.stack([fam.V(b, xs) for b in range(0, Q + 1)])     # V_0..V_Q
    rhs = V[1:] - V[:-1]
    absolute = np.abs(lhs - rhs)
    scale = V[1:] + V[:-1]
    relative = absolute / np.where(scale > 0, scale, 1.0)
    return ResidualTable(r, lhs, rhs, absolute, relative, ok)


# ---------------------------------------------------------------------------
# rescaling


def rescale(fam: SolutionFamily, lam: float) -> SolutionFamily:
    """``f_a(lam x) - (2a-Q-1) s log lam``; homogeneous families are fixed."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    if lam == 1.0:
        return fam
    k = fam.scaling_exponents
    lg = math.log(lam)
    if fam.kind == "bubble":
        # f_1(lam x) - k_1 log lam is the bubble with mu / lam
        return replace(fam, mu=fam.mu / lam)
    # psi + c log|lam x - d| - k log lam = psi + (c - k) log lam + c log|x - d/lam|
    c = np.asarray(fam.log_coef)
    psi = tuple(float(v) for v in np.asarray(fam.psi) + (c - k) * lg)
    if np.all(c == k):
        psi = fam.psi
    bump = fam.bump
    if bump is not None:
        bump = replace(bump, radius=bump.radius / lam)
    return replace(fam, psi=psi, center=fam.center / lam, bump=bump)


# ---------------------------------------------------------------------------
# decay of the nonlinearity


@dataclass(frozen=True)
class DecayTable:
    radii: np.ndarray
    pexp: float
    mode: str
    ratios: np.ndarray        # (Q-1, R)
    oracle: np.ndarray | None  # closed form for homogeneous families

    @property
    def variation(self) -> np.ndarray:
        """Relative spread ``(max - min) / mean`` per component."""
        return (self.ratios.max(axis=1) - self.ratios.min(axis=1)) / np.abs(self.ratios.mean(axis=1))


def _radial_power_integral(g, r, n, levels=80, m=12):
    """``int_0^r g(rho) rho^(n-1) d rho`` with dyadic grading toward 0."""
    t, w = gauss_legendre(m)
    edges = r * 2.0 ** -np.arange(levels, -1, -1.0)
    a, h = edges[:-1, None], np.diff(edges)[:, None]
    x = a + h * t
    vals = g(x) * x ** (n - 1.0) * h * w
    panel = vals.sum(axis=1)
    total = panel.sum()
    # geometric extrapolation of the untouched [0, edges[0]] piece
    q = panel[0] / panel[1] if panel[1] != 0 else 0.0
    if 0.0 < q < 1.0:
        total += panel[0] * q / (1.0 - q)
    return float(total)


def decay_check(fam: SolutionFamily, pexp: float, radii, *, mode: str = "ball") -> DecayTable:
    """``int V_a^p / r^(n - 2ps)`` over balls (or dyadic annuli) of radius r.

    ``mode="ball"`` integrates over ``B_r`` and needs ``n > 2ps``;
    ``mode="annulus"`` uses ``B_r \\ B_{r/2}`` and accepts the full range
    ``1 <= p < min(5, 1 + n/(2s))``.
    """
    p = fam.params
    n, s = p.n, p.s
    if not fam.radial:
        raise DomainError("decay_check needs a family radial about the origin")
    upper = min(5.0, 1.0 + n / (2.0 * s))
    if not (1.0 <= pexp < upper):
        raise DomainError(f"exponent {pexp} outside [1, {upper:.6g})")
    if mode == "ball" and not n > 2.0 * pexp * s:
        raise DomainError("ball mode needs n > 2ps; use mode='annulus'")
    if mode not in ("ball", "annulus"):
        raise ValueError(mode)
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    S = sphere_area(n)
    e = n - 2.0 * pexp * s
    ratios = np.empty((fam.Q - 1, r.size))
    for a in range(1, fam.Q):
        g = lambda x, a=a: fam.V(a, x) ** pexp
        for j, rr in enumerate(r):
            if mode == "ball":
                val = S * _radial_power_integral(g, rr, n)
            else:
                val = S * _annulus_integral(g, rr / 2.0, rr, n)
            ratios[a - 1, j] = val / rr ** e
    oracle = None
    if fam.kind == "homogeneous":
        lam = np.array([lambda_alpha(p, a) for a in range(1, fam.Q)])
        if mode == "ball":
            oracle = lam ** pexp * S / e
        else:
            shell = math.log(2.0) if e == 0 else (1.0 - 2.0 ** (-e)) / e
            oracle = lam ** pexp * S * shell
    return DecayTable(r, float(pexp), mode, ratios, oracle)


def _annulus_integral(g, r0, r1, n, m=24, panels=8):
    t, w = gauss_legendre(m)
    edges = np.geomspace(r0, r1, panels + 1)
    a, h = edges[:-1, None], np.diff(edges)[:, None]
    x = a + h * t
    return float((g(x) * x ** (n - 1.0) * h * w).sum())


# ---------------------------------------------------------------------------
# representation by the Riesz potential


@dataclass(frozen=True)
class RepresentationReport:
    radii: np.ndarray
    h: np.ndarray            # (Q-1, R): u_ell - potential
    spread: np.ndarray       # max - min per ell
    constant: np.ndarray     # mean of h per ell (the inferred d_ell)


def riesz_density(fam: SolutionFamily, ell: int) -> RadialFunction:
    """``(-Delta)^s u_ell = 2 V_ell - V_{ell-1} - V_{ell+1}`` as a profile."""
    if not fam.radial:
        raise DomainError("representation needs a radial family")
    return RadialFunction(
        lambda r: 2.0 * fam.V(ell, r) - fam.V(ell - 1, r) - fam.V(ell + 1, r),
        "power", 2.0 * fam.params.s, label=f"density{ell}")


def representation_check(fam: SolutionFamily, radii) -> RepresentationReport:
    """``h_ell = u_ell - riesz_potential(density_ell)`` on sample radii."""
    p = fam.params
    p.require_supercritical()
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    h = np.empty((fam.Q - 1, r.size))
    for ell in range(1, fam.Q):
        pot = riesz_potential(riesz_density(fam, ell), p, r)
        h[ell - 1] = fam.u(ell, r) - pot
    return RepresentationReport(r, h, h.max(axis=1) - h.min(axis=1), h.mean(axis=1))


def homogeneous_density_coefficient(p: Params) -> float:
    """``(-Delta)^s u_ell = A r^(-2s)`` for every ell in the homogeneous family."""
    return a_ns(p)
