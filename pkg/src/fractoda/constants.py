"""Gamma-function constants, the stability threshold and the Rayleigh bound.

Every closed form here is evaluated with :func:`math.gamma` (exact at small
integers, correctly rounded to a few ulp elsewhere) or :func:`math.lgamma`
once arguments get large enough to overflow.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, linalg

__all__ = [
    "DomainError",
    "NoCrossingError",
    "Params",
    "ConstantSet",
    "kappa",
    "a_ns",
    "lambda_ns",
    "lambda_alpha",
    "calA_alpha",
    "threshold_sides",
    "threshold_holds",
    "threshold_status",
    "critical_dimension",
    "rayleigh_matrix",
    "max_rayleigh",
    "riesz_constant",
    "poisson_constant",
    "gagliardo_constant",
    "sphere_area",
    "hemisphere_weight",
    "constant_set",
]

# Past this log-magnitude a product of Gammas overflows; switch to log space.
_LOG_SAFE = 700.0


class DomainError(ValueError):
    """Raised when parameters fall outside the domain of a formula."""


class NoCrossingError(RuntimeError):
    """Raised when the threshold bracket does not change sign."""


@dataclass(frozen=True)
class Params:
    """Dimension ``n``, fractional order ``s`` and number of equations ``Q``.

    ``n`` is normally a positive integer, but threshold formulas accept any
    real ``n > 2s`` so the critical-dimension curve can be traced.
    """

    n: float
    s: float
    Q: int = 2

    def __post_init__(self):
        if not (0.0 < self.s <= 1.0):
            raise DomainError(f"order s={self.s} outside (0, 1]")
        if self.Q < 2 or int(self.Q) != self.Q:
            raise DomainError(f"Q={self.Q} must be an integer >= 2")
        if self.n < 1:
            raise DomainError(f"dimension n={self.n} must be >= 1")

    @property
    def supercritical(self) -> bool:
        """True when ``n > 2s``, the regime of every threshold formula."""
        return self.n > 2.0 * self.s

    def require_supercritical(self) -> None:
        if not self.supercritical:
            raise DomainError(
                f"requires n > 2s, got n={self.n}, 2s={2 * self.s}"
            )

    def require_fractional(self) -> None:
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"requires 0 < s < 1, got s={self.s}")

    def with_(self, **changes) -> "Params":
        d = asdict(self)
        d.update(changes)
        return Params(**d)


def _gamma_ratio(num, den) -> float:
    """Product of Gamma(num) over product of Gamma(den), overflow safe."""
    # Each product must stay finite, not only each factor.
    if (sum(math.lgamma(a) for a in num) < _LOG_SAFE
            and sum(math.lgamma(b) for b in den) < _LOG_SAFE):
        top = 1.0
        for a in num:
            top *= math.gamma(a)
        bot = 1.0
        for b in den:
            bot *= math.gamma(b)
        return top / bot
    # Arguments here are positive, so lgamma carries no sign information.
    return math.exp(
        sum(math.lgamma(a) for a in num) - sum(math.lgamma(b) for b in den)
    )


def kappa(s: float) -> float:
    """Extension constant ``Gamma(1-s) / (2^(2s-1) Gamma(s))``."""
    if not (0.0 < s < 1.0):
        raise DomainError(f"kappa undefined at s={s}: needs 0 < s < 1")
    return math.gamma(1.0 - s) / (2.0 ** (2.0 * s - 1.0) * math.gamma(s))


def _log_identity_core(n: float, s: float) -> float:
    # Gamma(n/2) Gamma(1+s) / Gamma((n-2s)/2), shared by A and lambda_alpha
    return _gamma_ratio((n / 2.0, 1.0 + s), ((n - 2.0 * s) / 2.0,))


def a_ns(p: Params) -> float:
    """Constant ``A`` in ``(-Delta)^s (-2s log r) = A r^(-2s)``."""
    p.require_supercritical()
    return 2.0 ** (2.0 * p.s) * _log_identity_core(p.n, p.s)


def lambda_ns(p: Params) -> float:
    """Hardy constant: ``(-Delta)^s r^(-(n-2s)/2) = Lambda r^(-(n+2s)/2)``."""
    p.require_supercritical()
    n, s = p.n, p.s
    return 2.0 ** (2.0 * s) * _gamma_ratio(
        ((n + 2.0 * s) / 4.0, (n + 2.0 * s) / 4.0),
        ((n - 2.0 * s) / 4.0, (n - 2.0 * s) / 4.0),
    )


def lambda_alpha(p: Params, alpha: int) -> float:
    """Coefficient of ``r^(-2s)`` in the homogeneous weight ``V_alpha``.

    The integer product ``alpha*(Q-alpha)`` is formed first so that the
    values at ``alpha`` and ``Q-alpha`` are bit-identical.
    """
    p.require_supercritical()
    if not (1 <= alpha <= p.Q - 1):
        raise IndexError(f"alpha={alpha} outside 1..{p.Q - 1}")
    weight = float(alpha * (p.Q - alpha))
    return 2.0 ** (2.0 * p.s - 1.0) * _log_identity_core(p.n, p.s) * weight


def calA_alpha(p: Params, alpha: int) -> float:
    """``2^(2s-1) Gamma(n/2)Gamma(1+s)/Gamma((n-2s)/2) (2 alpha - 1 - Q)``."""
    p.require_supercritical()
    if not (1 <= alpha <= p.Q):
        raise IndexError(f"alpha={alpha} outside 1..{p.Q}")
    weight = float(2 * alpha - 1 - p.Q)
    return 2.0 ** (2.0 * p.s - 1.0) * _log_identity_core(p.n, p.s) * weight


def threshold_sides(p: Params) -> tuple[float, float]:
    """Return ``(lhs, rhs)`` of the stability threshold inequality."""
    p.require_supercritical()
    n, s, Q = p.n, p.s, p.Q
    lhs = _log_identity_core(n, s) * (Q * (Q - 1) / 2.0)
    rhs = _gamma_ratio(
        ((n + 2.0 * s) / 4.0, (n + 2.0 * s) / 4.0),
        ((n - 2.0 * s) / 4.0, (n - 2.0 * s) / 4.0),
    )
    return lhs, rhs


def threshold_holds(p: Params) -> bool:
    """True iff the strict inequality ``lhs > rhs`` holds."""
    lhs, rhs = threshold_sides(p)
    return lhs > rhs


def threshold_status(p: Params, rtol: float = 1e-12) -> str:
    """One of ``"holds"``, ``"fails"`` or ``"boundary"`` (equality to rtol)."""
    lhs, rhs = threshold_sides(p)
    if abs(lhs - rhs) <= rtol * max(abs(lhs), abs(rhs)):
        return "boundary"
    return "holds" if lhs > rhs else "fails"


def _log_threshold_gap(n: float, s: float, Q: int) -> float:
    # log(lhs) - log(rhs); smooth in real n and decreasing past its root
    lg = math.lgamma
    return (
        lg(n / 2.0) + lg(1.0 + s) - lg((n - 2.0 * s) / 2.0)
        + math.log(Q * (Q - 1) / 2.0)
        - 2.0 * (lg((n + 2.0 * s) / 4.0) - lg((n - 2.0 * s) / 4.0))
    )


def critical_dimension(
    s: float,
    Q: int,
    *,
    tol: float = 1e-8,
    n_hi: float = 200.0,
    n_cap: float = 1e12,
) -> float:
    """Real dimension ``n*`` where the threshold switches from true to false.

    The search starts on ``(2s, n_hi]`` and doubles the upper end until the
    sign changes or ``n_cap`` is passed.  Small ``s`` with larger ``Q`` puts
    the crossing far beyond 200 (about 440 at ``s=1/4, Q=3``).
    """
    Params(n=max(1.0, 2.0 * s + 1e-9), s=s, Q=Q)
    lo = 2.0 * s * (1.0 + 1e-12) + 1e-12
    if _log_threshold_gap(lo, s, Q) <= 0.0:
        raise NoCrossingError(f"threshold already false at n=2s+ (s={s}, Q={Q})")
    hi = n_hi
    while _log_threshold_gap(hi, s, Q) > 0.0:
        lo = hi
        hi *= 2.0
        if hi > n_cap:
            raise NoCrossingError(
                f"no crossing in bracket [2s, {n_cap:g}] for s={s}, Q={Q}"
            )
    # bisection to an absolute width of tol, then one secant polish
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if _log_threshold_gap(mid, s, Q) > 0.0:
            lo = mid
        else:
            hi = mid
    g_lo, g_hi = _log_threshold_gap(lo, s, Q), _log_threshold_gap(hi, s, Q)
    if g_lo != g_hi:
        root = lo - g_lo * (hi - lo) / (g_hi - g_lo)
        if lo <= root <= hi:
            return root
    return 0.5 * (lo + hi)


def rayleigh_matrix(Q: int) -> np.ndarray:
    """Matrix of ``sum_alpha alpha(Q-alpha)(c_{alpha+1}-c_alpha)^2``."""
    A = np.zeros((Q, Q))
    for a in range(1, Q):
        w = float(a * (Q - a))
        i = a - 1
        A[i, i] += w
        A[i + 1, i + 1] += w
        A[i, i + 1] -= w
        A[i + 1, i] -= w
    return A


def zero_sum_basis(Q: int) -> np.ndarray:
    """Orthonormal ``Q x (Q-1)`` basis of ``{c : sum c = 0}``."""
    D = np.zeros((Q, Q - 1))
    for j in range(Q - 1):
        D[j, j] = 1.0
        D[j + 1, j] = -1.0
    B, _ = np.linalg.qr(D)
    return B


def _canonical_sign(c: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    c = c / np.linalg.norm(c)
    nz = np.flatnonzero(np.abs(c) > atol)
    if nz.size and c[nz[0]] < 0:
        c = -c
    return c


def max_rayleigh(Q: int) -> tuple[float, np.ndarray]:
    """Maximize the interaction quotient over zero-sum vectors.

    Returns the maximal value and a unit maximizer whose first nonzero entry
    is positive.
    """
    if Q < 2:
        raise DomainError("Q must be >= 2")
    B = zero_sum_basis(Q)
    M = B.T @ rayleigh_matrix(Q) @ B
    vals, vecs = linalg.eigh(0.5 * (M + M.T))
    return float(vals[-1]), _canonical_sign(B @ vecs[:, -1])


def sphere_area(n: float) -> float:
    """Area of the unit sphere ``S^(n-1)`` in ``R^n`` (2 when n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def riesz_constant(p: Params) -> float:
    """``c(n,s)`` with ``(-Delta)^s (c |x|^(2s-n)) = delta``."""
    p.require_supercritical()
    n, s = p.n, p.s
    return math.gamma((n - 2.0 * s) / 2.0) / (
        4.0 ** s * math.pi ** (n / 2.0) * math.gamma(s)
    )


def poisson_constant(p: Params, validate: bool = False) -> float:
    """``d`` making ``d y^(2s) |(x-z, y)|^(-(n+2s))`` a unit-mass kernel.

    With ``validate`` the unit mass at ``(x, y) = (0, 1)`` is recomputed by
    adaptive quadrature and a :class:`DomainError` is raised past 1e-6.
    """
    n, s = p.n, p.s
    if not (0.0 < s < 1.0):
        raise DomainError("Poisson kernel needs 0 < s < 1")
    d = math.gamma((n + 2.0 * s) / 2.0) / (math.pi ** (n / 2.0) * math.gamma(s))
    if validate:
        radial = lambda r: r ** (n - 1.0) * (r * r + 1.0) ** (-(n + 2.0 * s) / 2.0)
        head, _ = integrate.quad(radial, 0.0, 1.0, limit=200)
        # tail via r = 1/t keeps the integrand bounded
        tail, _ = integrate.quad(
            lambda t: t ** (2.0 * s - 1.0) * (1.0 + t * t) ** (-(n + 2.0 * s) / 2.0),
            0.0, 1.0, limit=200,
        )
        mass = d * sphere_area(n) * (head + tail)
        if abs(mass - 1.0) > 1e-6:
            raise DomainError(f"Poisson kernel mass {mass!r} != 1")
    return d


def gagliardo_constant(p: Params) -> float:
    """``C(n,s) = s 4^s Gamma(n/2+s) / (pi^(n/2) Gamma(1-s))``.

    This is the normalization under which the principal-value integral is
    the Fourier multiplier ``|xi|^(2s)``.
    """
    p.require_fractional()
    n, s = p.n, p.s
    return (
        s * 4.0 ** s * math.gamma(n / 2.0 + s)
        / (math.pi ** (n / 2.0) * math.gamma(1.0 - s))
    )


def hemisphere_weight(p: Params) -> float:
    """``c_s``: integral of ``y^(1-2s)`` over the unit upper hemisphere.

    The unit hemisphere in ``R^(n+1)_+``; for n = 1 this is the upper half
    circle.
    """
    p.require_fractional()
    n, s = p.n, p.s
    beta = math.exp(math.lgamma(1.0 - s) + math.lgamma(n / 2.0)
                    - math.lgamma(1.0 - s + n / 2.0))
    return sphere_area(n) * 0.5 * beta


@dataclass(frozen=True)
class ConstantSet:
    """All scalar constants for one parameter triple."""

    params: Params
    kappa: float | None
    a_ns: float
    lambda_ns: float
    lambda_alpha: tuple[float, ...]
    calA_alpha: tuple[float, ...]
    riesz_c: float
    poisson_d: float | None
    gagliardo_c: float | None
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params)
        return d


def constant_set(p: Params) -> ConstantSet:
    """Evaluate every constant; those undefined at ``s = 1`` become None."""
    p.require_supercritical()
    notes = {}
    if p.s < 1.0:
        kap = kappa(p.s)
        pd = poisson_constant(p)
        gc = gagliardo_constant(p)
    else:
        kap = pd = gc = None
        notes["kappa"] = notes["poisson_d"] = notes["gagliardo_c"] = (
            "undefined at s=1"
        )
    return ConstantSet(
        params=p,
        kappa=kap,
        a_ns=a_ns(p),
        lambda_ns=lambda_ns(p),
        lambda_alpha=tuple(lambda_alpha(p, a) for a in range(1, p.Q)),
        calA_alpha=tuple(calA_alpha(p, a) for a in range(1, p.Q + 1)),
        riesz_c=riesz_constant(p),
        poisson_d=pd,
        gagliardo_c=gc,
        notes=notes,
    )
