"""Weighted harmonic extension to the upper half-space.

Three independent routes to the extension ``U(x, y)`` of a radial trace:

* :func:`poisson_extend` convolves with the unit-mass kernel
  ``d y^(2s) |(x-z, y)|^-(n+2s)`` after reducing the sphere integral to a
  hypergeometric closed form;
* :func:`solve_extension_radial` solves ``div(y^(1-2s) grad U) = 0`` with a
  conservative finite-volume scheme in ``(r, y)``;
* :class:`HomogeneousExtension` evaluates the exact extension of
  ``psi + k log|x|`` as ``psi + k (log rho + Theta(phi))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse, special
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import linalg as splinalg

from . import _kernels
from .constants import DomainError, Params, poisson_constant, sphere_area
from .fraclap import ConvergenceWarning, RadialFunction
from .quadrature import gauss_legendre, panel_rule

__all__ = [
    "QuadratureError",
    "MeshError",
    "HalfSpaceField",
    "poisson_extend",
    "neumann_trace",
    "solve_extension_radial",
    "graded_y",
    "dirichlet_energy",
    "AngularProfile",
    "HomogeneousExtension",
    "BubbleExtension",
    "GridExtension",
]


class QuadratureError(RuntimeError):
    """A quadrature failed its built-in consistency check."""


class MeshError(ValueError):
    """The requested mesh cannot resolve the boundary layer."""


# ---------------------------------------------------------------------------
# Poisson kernel quadrature


def _sphere_poisson_kernel(n, s, r, rho, y):
    """``int_S |(r theta - rho omega, y)|^-(n+2s) d omega`` for n >= 2."""
    A = r * r + rho * rho + y * y
    w2 = (2.0 * r * rho / A) ** 2
    one_minus = ((r - rho) ** 2 + y * y) * ((r + rho) ** 2 + y * y) / (A * A)
    h = special.hyp2f1((n - 2.0 * s) / 4.0, (n - 2.0 * s - 2.0) / 4.0, n / 2.0, w2)
    return sphere_area(n) * A ** (-(n + 2.0 * s) / 2.0) * one_minus ** (-0.5 - s) * h


def _poisson_rule(f: RadialFunction, n, x, y, m, far_levels):
    """Nodes and weights for one target plus the far-end panel slices.

    Panels are dyadic in ``|z - x|`` on both sides of the target, so the
    outermost panels form a geometric sequence for the tail estimate.
    Features of ``f`` and a dyadic ladder toward the origin are added inside.
    """
    ax = abs(x)
    feats = np.asarray(f.features, dtype=float)
    span = ax + 1.0 + (float(np.max(np.abs(feats))) if feats.size else 0.0)
    K = max(far_levels, int(math.ceil(math.log2(span / y))) + 20)
    steps = y * 2.0 ** np.arange(-4, K + 1, dtype=float)
    ladder = min(ax if ax > 0 else 1.0, y, 1.0) * 2.0 ** -np.arange(0, 60, dtype=float)
    if n == 1:
        lo, hi = x - steps[-1], x + steps[-1]
        inner = np.concatenate((x + steps, x - steps, feats, -feats, ladder, -ladder, [0.0]))
    else:
        lo, hi = 0.0, x + steps[-1]
        inner = np.concatenate((x + steps, x - steps, feats, ladder))
    inner = inner[(inner > lo) & (inner < hi)]
    e = np.unique(np.concatenate(([lo, hi], inner)))
    rule = panel_rule(e, m)
    N = rule.x.size
    ends = [(slice(N - m, N), slice(N - 2 * m, N - m))]
    if n == 1:
        ends.append((slice(0, m), slice(m, 2 * m)))
    return rule.x, rule.w, ends


def _tail(vals, w, last, prev):
    i_last = float(vals[last] @ w[last])
    i_prev = float(vals[prev] @ w[prev])
    if i_prev == 0.0:
        return 0.0
    q = i_last / i_prev
    return i_last * q / (1.0 - q) if 0.0 < q < 0.95 else 0.0


def _poisson_one(f, n, s, d, x, y, m, far_levels, fx):
    z, w, ends = _poisson_rule(f, n, x, y, m, far_levels)
    if n == 1:
        ker = ((x - z) ** 2 + y * y) ** (-(1.0 + 2.0 * s) / 2.0)
        fz = f(np.abs(z))
    else:
        ker = _sphere_poisson_kernel(n, s, x, z, y) * z ** (n - 1.0)
        fz = f(z)
    diff = np.where(ker == 0.0, 0.0, (fz - fx) * ker)
    scale = d * y ** (2.0 * s)
    mass = ker @ w
    corr = diff @ w
    for last, prev in ends:
        mass += _tail(ker, w, last, prev)
        corr += _tail(diff, w, last, prev)
    return scale * corr, scale * mass


def poisson_extend(
    f: RadialFunction,
    p: Params,
    X,
    *,
    m: int = 12,
    far_levels: int | None = None,
    mass_tol: float = 1e-6,
    full_output: bool = False,
):
    """Value of the Poisson extension at points ``X = (r, y)``.

    ``X`` is a pair of scalars or of equal-shape arrays.  For ``n = 1`` the
    trace is the even function ``f(|x|)`` and ``r`` may be negative.  The
    kernel mass is recomputed on the same nodes and must equal 1 within
    ``mass_tol`` or :class:`QuadratureError` is raised.
    """
    p.require_fractional()
    n, s = p.n, p.s
    r, y = (np.asarray(a, dtype=float) for a in X)
    r, y = np.broadcast_arrays(r, y)
    if np.any(y <= 0):
        raise DomainError("poisson_extend needs y > 0")
    if n > 1 and np.any(r < 0):
        raise DomainError("radial targets need r >= 0")
    if far_levels is None:
        far_levels = int(min(400, max(40, math.ceil(30.0 / s))))
    d = poisson_constant(p)
    flat_r, flat_y = r.ravel(), y.ravel()
    fx = f(np.abs(flat_r)) if not (f.decay == "log" and np.any(flat_r == 0)) else None
    if fx is None:
        raise DomainError("log-type trace has no value at r = 0")
    out = np.empty(flat_r.size)
    masses = np.empty(flat_r.size)
    for i in range(flat_r.size):
        corr, mass = _poisson_one(f, n, s, d, flat_r[i], flat_y[i], m, far_levels, fx[i])
        # value = f(x) * mass + corr; using mass = 1 keeps constants exact
        out[i] = fx[i] + corr
        masses[i] = mass
    bad = np.abs(masses - 1.0) > mass_tol
    if np.any(bad):
        raise QuadratureError(
            f"Poisson kernel mass off by {np.max(np.abs(masses - 1.0)):.2e}"
        )
    out = out.reshape(r.shape)
    if full_output:
        return out, masses.reshape(r.shape)
    return out if out.ndim else float(out)


def neumann_trace(
    f: RadialFunction,
    p: Params,
    r,
    *,
    y0: float = 0.04,
    levels: int = 3,
    rtol_geometric: float = 0.2,
    full_output: bool = False,
):
    """Weighted Neumann data ``-lim y^(1-2s) dU/dy`` of the extension.

    Uses the difference quotient ``N(y) = -2s y^(-2s) (U(r, y) - f(r))``
    whose error expands in ``y^(2-2s)`` and ``y^2``; three dyadic levels
    eliminate both.  A :class:`ConvergenceWarning` flags level differences
    whose ratio strays from ``2^(2-2s)`` by more than ``rtol_geometric``.
    """
    p.require_fractional()
    s = p.s
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    ys = y0 * 0.5 ** np.arange(levels)
    N = np.empty((levels, rs.size))
    for j, yy in enumerate(ys):
        U = poisson_extend(f, p, (rs, np.full_like(rs, yy)))
        N[j] = -2.0 * s * yy ** (-2.0 * s) * (U - f(np.abs(rs)))
    p1, p2 = 2.0 - 2.0 * s, 2.0
    R1 = (2.0 ** p1 * N[1:] - N[:-1]) / (2.0 ** p1 - 1.0)
    if levels >= 3:
        R2 = (2.0 ** p2 * R1[1:] - R1[:-1]) / (2.0 ** p2 - 1.0)
        val = R2[-1]
    else:
        val = R1[-1]
    diffs = np.diff(N, axis=0)
    stable = np.ones(rs.size, dtype=bool)
    if levels >= 3:
        noise = 1e-9 * np.maximum(np.abs(val), 1e-12)
        big = (np.abs(diffs[0]) > noise) & (np.abs(diffs[1]) > noise)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = diffs[0] / diffs[1] / 2.0 ** p1
        stable = ~big | (np.abs(ratio - 1.0) <= rtol_geometric)
        if not np.all(stable):
            warnings.warn("neumann_trace: extrapolation levels not geometric",
                          ConvergenceWarning, stacklevel=2)
    out = val if np.ndim(r) else float(val[0])
    if full_output:
        return out, N, stable
    return out


# ---------------------------------------------------------------------------
# finite-volume solver


@dataclass(frozen=True)
class HalfSpaceField:
    """Values ``U[i, j]`` at ``(r[i], y[j])`` with ``y[0] = 0`` the trace row."""

    r: np.ndarray
    y: np.ndarray
    values: np.ndarray
    n: float
    s: float
    residual: float = 0.0

    @property
    def weight_exponent(self) -> float:
        return 1.0 - 2.0 * self.s

    @property
    def boundary_trace(self) -> np.ndarray:
        return self.values[:, 0]

    def triples(self) -> np.ndarray:
        """``(r, y, value)`` rows with ``y`` as the outer (slow) index."""
        R, Y = np.meshgrid(self.r, self.y, indexing="xy")
        return np.column_stack((R.ravel(), Y.ravel(), self.values.T.ravel()))

    def dump(self, path, fmt: str = "csv") -> None:
        rows = self.triples()
        if fmt == "csv":
            np.savetxt(path, rows, delimiter=",", header="r,y,value", comments="",
                       fmt="%.12g")
        elif fmt == "bin":
            rows.astype("<f8").tofile(path)
        else:
            raise ValueError(f"unknown dump format {fmt!r}")


def graded_y(Y: float, J: int, s: float) -> np.ndarray:
    """``y_j = Y (j/J)^(1/s)``, j = 0..J."""
    return Y * (np.arange(J + 1) / J) ** (1.0 / s)


def _r_grid(r_min, r_max, I):
    if r_min == 0.0:
        return np.linspace(0.0, r_max, I + 1)
    return np.geomspace(r_min, r_max, I + 1)


def solve_extension_radial(
    f: RadialFunction,
    p: Params,
    domain: tuple[float, float, float],
    resolution: tuple[int, int],
    *,
    min_layer_nodes: int = 8,
    outer: str = "poisson",
) -> HalfSpaceField:
    """Finite-volume solve of ``div(r^(n-1) y^(1-2s) grad U) = 0``.

    ``domain = (r_min, r_max, Y)``.  With ``r_min = 0`` the r-grid is uniform
    and the axis carries the symmetry condition; otherwise it is geometric
    and ``r_min`` is a Dirichlet edge.  The y-grid is ``graded_y``.  Fluxes
    across y-faces use the exact transmissibility ``2s/(y_{j+1}^{2s} -
    y_j^{2s})`` of the one-dimensional weighted problem.  Dirichlet data:
    ``f`` on ``y = 0`` and the Poisson extension on the outer edges.
    """
    p.require_fractional()
    n, s = p.n, p.s
    r_min, r_max, Y = map(float, domain)
    I, J = resolution
    if r_min < 0 or r_max <= r_min or Y <= 0:
        raise MeshError("bad domain")
    if r_min == 0.0 and f.decay == "log":
        raise DomainError("log-type data needs r_min > 0")
    r = _r_grid(r_min, r_max, I)
    y = graded_y(Y, J, s)
    dr = float(np.max(np.diff(r)))
    layer = int(np.count_nonzero((y > 0) & (y < dr ** (1.0 / s))))
    if layer < min_layer_nodes:
        raise MeshError(
            f"only {layer} y-nodes below (dr)^(1/s) = {dr ** (1.0 / s):.3g}; "
            f"need {min_layer_nodes}"
        )
    nr, ny = r.size, y.size
    U = np.zeros((nr, ny))
    known = np.zeros((nr, ny), dtype=bool)
    U[:, 0] = f(r)
    known[:, 0] = True
    edge_pts = [(i, ny - 1) for i in range(nr)] + [(nr - 1, j) for j in range(1, ny - 1)]
    if r_min > 0:
        edge_pts += [(0, j) for j in range(1, ny - 1)]
    ei = np.array([a for a, _ in edge_pts])
    ej = np.array([b for _, b in edge_pts])
    if outer == "poisson":
        U[ei, ej] = poisson_extend(f, p, (r[ei], y[ej]))
    else:
        raise ValueError("outer must be 'poisson'")
    known[ei, ej] = True

    center, west, east, south, north = _kernels.fv_stencil(r, y, n, s)
    unk = ~known
    idx = -np.ones((nr, ny), dtype=np.int64)
    idx[unk] = np.arange(np.count_nonzero(unk))
    ii, jj = np.nonzero(unk)
    rows = [idx[ii, jj]]
    cols = [idx[ii, jj]]
    vals = [center[ii, jj]]
    rhs = np.zeros(ii.size)
    for di, dj, coef in ((-1, 0, west), (1, 0, east), (0, -1, south), (0, 1, north)):
        c = coef[ii, jj]
        ni, nj = ii + di, jj + dj
        inside = (ni >= 0) & (ni < nr) & (nj >= 0) & (nj < ny) & (c != 0.0)
        nb_unk = np.zeros_like(inside)
        nb_unk[inside] = unk[ni[inside], nj[inside]]
        sel = inside & nb_unk
        rows.append(idx[ii[sel], jj[sel]])
        cols.append(idx[ni[sel], nj[sel]])
        vals.append(-c[sel])
        selk = inside & ~nb_unk
        np.add.at(rhs, np.nonzero(selk)[0], c[selk] * U[ni[selk], nj[selk]])
    A = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ii.size, ii.size),
    )
    sol = splinalg.spsolve(A.tocsc(), rhs)
    res = float(np.max(np.abs(A @ sol - rhs)) / max(np.max(np.abs(rhs)), 1e-300))
    if not np.all(np.isfinite(sol)) or res > 1e-10:
        raise QuadratureError(f"linear solve residual {res:.2e} exceeds 1e-10")
    U[ii, jj] = sol
    U.setflags(write=False)
    return HalfSpaceField(r, y, U, n, s, residual=res)


# ---------------------------------------------------------------------------
# Dirichlet energy


def _clipped_cell_weights(r, y, n, s, lam):
    """Integrals of ``r^(n-1) y^(1-2s)`` and coverage over cells cut by the ball."""
    a = 2.0 - 2.0 * s
    t, w = gauss_legendre(16)
    r0, r1 = r[:-1], r[1:]
    y0, y1 = y[:-1], y[1:]
    # sample the r-extent with Gauss nodes; per node the y-extent inside the
    # ball is [y0, min(y1, sqrt(lam^2 - r^2))]
    rn = r0[:, None] + (r1 - r0)[:, None] * t[None, :]        # (I, m)
    wn = (r1 - r0)[:, None] * w[None, :]
    top = np.sqrt(np.maximum(lam * lam - rn * rn, 0.0))        # (I, m)
    hi = np.minimum(y1[None, None, :], top[:, :, None])        # (I, m, J)
    lo = y0[None, None, :]
    span = np.maximum(hi, lo)
    ywt = (span ** a - lo ** a) / a
    rw = np.einsum("imj,im->ij", ywt * (rn ** (n - 1.0))[:, :, None], wn)
    full = np.einsum("imj,im->ij",
                     ((y1 ** a - y0 ** a) / a)[None, None, :] * (rn ** (n - 1.0))[:, :, None]
                     * np.ones_like(ywt), wn)
    cover = np.divide(rw, full, out=np.zeros_like(rw), where=full > 0)
    rr = ((r1 ** n - r0 ** n) / n)[:, None] * cover
    return rw, rr


def dirichlet_energy(field, ball: tuple[float, float], *, params: Params | None = None,
                     **kw) -> float:
    """``int_{B_lam^+(x0)} y^(1-2s) |grad U|^2`` for a grid or analytic field.

    Grid fields (:class:`HalfSpaceField`) are radial and need ``x0 = 0`` with
    the half-ball inside the grid.  Analytic extensions go through
    :func:`analytic_dirichlet_energy`.
    """
    x0, lam = map(float, ball)
    if isinstance(field, HalfSpaceField):
        if x0 != 0.0:
            raise DomainError("grid fields are radial; the ball must be centered at 0")
        if field.r[0] > 0.0 or lam > field.r[-1] * (1 + 1e-12) or lam > field.y[-1] * (1 + 1e-12):
            raise DomainError("ball-exceeds-domain")
        rw, rr = _clipped_cell_weights(field.r, field.y, field.n, field.s, lam)
        e = _kernels.cell_energy(field.values, field.r, field.y, rw, rr, field.s)
        return sphere_area(field.n) * e
    if params is None:
        raise ValueError("analytic fields need params")
    return analytic_dirichlet_energy(field, params, x0, lam, **kw)


# ---------------------------------------------------------------------------
# half-ball quadrature for analytic fields


@lru_cache(maxsize=64)
def _polar_nodes(n: float, s: float, rho_levels: int, phi_levels: int, m: int):
    """Nodes on the unit half-ball in ``(rho, phi)``.

    rho in (0, 1] is graded dyadically toward 0.  phi runs over (0, pi/2]
    for radial fields (n >= 2) and (0, pi) for n = 1, graded dyadically
    toward the boundary plane.
    """
    t, w = gauss_legendre(m)
    re = np.concatenate(([0.0], 2.0 ** -np.arange(rho_levels, -1, -1.0)))
    rho = (re[:-1, None] + np.diff(re)[:, None] * t).ravel()
    wr = (np.diff(re)[:, None] * w).ravel()
    half = np.concatenate(([0.0], (np.pi / 2) * 2.0 ** -np.arange(phi_levels, 0, -1.0),
                           np.linspace(np.pi / 4, np.pi / 2, 5)[1:]))
    half = np.unique(half)
    if n == 1:
        edges = np.concatenate((half, np.pi - half[::-1][1:]))
    else:
        edges = half
    phi = (edges[:-1, None] + np.diff(edges)[:, None] * t).ravel()
    wp = (np.diff(edges)[:, None] * w).ravel()
    return rho, wr, phi, wp


def _measure(n, rho, phi):
    # volume element of R^{n+1}_+ for radial-in-x integrands
    if n == 1:
        return rho
    return sphere_area(n) * rho ** n * np.cos(phi) ** (n - 1.0)


def analytic_dirichlet_energy(field, p: Params, x0: float, lam: float, *,
                              rho_levels: int = 60, phi_levels: int | None = None,
                              m: int = 10) -> float:
    """Polar quadrature of ``y^(1-2s)|grad U|^2`` over ``B_lam^+(x0)``.

    The untouched core ``rho < lam 2^-rho_levels`` is added by geometric
    extrapolation from the two innermost dyadic shells.
    """
    n, s = p.n, p.s
    if n > 1 and x0 != 0.0:
        raise DomainError("radial fields in n >= 2 need x0 = 0")
    if phi_levels is None:
        phi_levels = int(min(300, max(60, math.ceil(30.0 / s))))
    rho, wr, phi, wp = _polar_nodes(n, s, rho_levels, phi_levels, m)
    R = lam * rho[:, None]
    P = phi[None, :]
    x = x0 + R * np.cos(P)
    y = R * np.sin(P)
    gx, gy = field.grad(x, y)
    dens = y ** (1.0 - 2.0 * s) * (gx * gx + gy * gy)
    meas = _measure(n, R, P) * lam
    shells = ((dens * meas) @ wp * wr).reshape(-1, m).sum(axis=1)
    total = float(shells.sum())
    # shells[0] is [0, 2^-levels]; extrapolate from the next two
    q = shells[1] / shells[2] if shells[2] != 0 else 0.0
    if 0.0 < q < 1.0:
        total += shells[1] * q / (1.0 - q) - shells[0]
    return total


def hemisphere_integral(values_fn, p: Params, x0: float, lam: float, *,
                        phi_levels: int | None = None, m: int = 10) -> float:
    """``int_{dB_lam^+(x0)} y^(1-2s) g dsigma`` for ``g = values_fn(x, y)``."""
    n, s = p.n, p.s
    if phi_levels is None:
        phi_levels = int(min(300, max(60, math.ceil(30.0 / s))))
    _, _, phi, wp = _polar_nodes(n, s, 1, phi_levels, m)
    x = x0 + lam * np.cos(phi)
    y = lam * np.sin(phi)
    g = values_fn(x, y)
    if n == 1:
        meas = lam * np.ones_like(phi)
    else:
        meas = sphere_area(n) * lam ** n * np.cos(phi) ** (n - 1.0)
    return float(np.sum(y ** (1.0 - 2.0 * s) * g * meas * wp))


# ---------------------------------------------------------------------------
# exact extension of log|x|


class AngularProfile:
    """``Theta(phi)`` with ``log rho + Theta(phi)`` the extension of ``log|x|``.

    ``phi`` is the angle from the boundary plane.  ``Theta(0) = 0`` and
    ``W Theta' = (n-2s) int_phi^{pi/2} W`` with
    ``W = cos^(n-1) sin^(1-2s)``; for n = 1 the profile is mirrored about
    ``pi/2``.  ``Theta'`` is evaluated through the regularized incomplete
    beta function, ``Theta`` by Gauss-Legendre on a dyadic table.
    """

    def __init__(self, n: float, s: float, levels: int = 200, m: int = 16):
        self.n, self.s = float(n), float(s)
        self.m = m
        self._half_beta = 0.5 * math.exp(
            math.lgamma(1.0 - s) + math.lgamma(n / 2.0) - math.lgamma(1.0 - s + n / 2.0))
        top = np.pi / 2
        near = top * 2.0 ** -np.arange(levels, 0, -1.0)
        edges = np.unique(np.concatenate((near, np.linspace(top / 2, top, 17))))
        t, w = gauss_legendre(m)
        a, h = edges[:-1, None], np.diff(edges)[:, None]
        inc = (self._dtheta_half(a + h * t) * h * w).sum(axis=1)
        # Theta' ~ c phi^(2s-1) below the first edge
        e0 = edges[0]
        c0 = (n - 2.0 * s) * self._half_beta
        head = c0 * e0 ** (2.0 * s) / (2.0 * s)
        self._edges = edges
        self._cum = np.concatenate(([head], head + np.cumsum(inc)))
        self._t, self._w = t, w

    def _dtheta_half(self, phi):
        n, s = self.n, self.s
        c = np.cos(phi)
        W = c ** (n - 1.0) * np.sin(phi) ** (1.0 - 2.0 * s)
        tail = special.betainc(n / 2.0, 1.0 - s, c * c) * self._half_beta
        return (n - 2.0 * s) * tail / W

    def _theta_half(self, phi):
        phi = np.asarray(phi, dtype=float)
        e = self._edges
        k = np.clip(np.searchsorted(e, phi, side="right") - 1, -1, e.size - 1)
        base = np.where(k >= 0, self._cum[np.maximum(k, 0)], 0.0)
        start = np.where(k >= 0, e[np.maximum(k, 0)], 0.0)
        below = k < 0
        out = np.empty_like(phi)
        # inside the first dyadic cell use the leading power directly
        n, s = self.n, self.s
        c0 = (n - 2.0 * s) * self._half_beta
        out[below] = c0 * phi[below] ** (2.0 * s) / (2.0 * s)
        ab = ~below
        if np.any(ab):
            a0, b0 = start[ab], phi[ab]
            h = b0 - a0
            nodes = a0[:, None] + h[:, None] * self._t[None, :]
            out[ab] = base[ab] + (self._dtheta_half(nodes) * self._w[None, :]).sum(axis=1) * h
        return out

    def theta(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self.n == 1:
            phi = np.minimum(phi, np.pi - phi)
        return self._theta_half(phi)

    def dtheta(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self.n == 1:
            sign = np.where(phi > np.pi / 2, -1.0, 1.0)
            return sign * self._dtheta_half(np.minimum(phi, np.pi - phi))
        return self._dtheta_half(phi)

    def flux(self) -> float:
        """``lim_{phi->0} W Theta'``: the weighted Neumann flux of ``log``."""
        return (self.n - 2.0 * self.s) * self._half_beta


@lru_cache(maxsize=32)
def angular_profile(n: float, s: float) -> AngularProfile:
    return AngularProfile(n, s)


@dataclass(frozen=True)
class HomogeneousExtension:
    """Exact extension of ``const + k log|x - center|``."""

    n: float
    s: float
    const: float
    k: float
    center: float = 0.0

    def _polar(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center
        y = np.asarray(y, dtype=float)
        rho = np.hypot(dx, y)
        # angle to the nearest boundary ray; avoids pi - phi cancellation
        phib = np.arctan2(y, np.abs(dx))
        return dx, y, rho, phib

    def value(self, x, y):
        _, _, rho, phib = self._polar(x, y)
        if self.k == 0.0:
            return np.full(np.shape(rho), self.const)
        th = angular_profile(self.n, self.s)._theta_half(phib)
        return self.const + self.k * (np.log(rho) + th)

    def grad(self, x, y):
        dx, yy, rho, phib = self._polar(x, y)
        if self.k == 0.0:
            z = np.zeros(np.shape(rho))
            return z, z
        dth = angular_profile(self.n, self.s)._dtheta_half(phib)
        rho2 = rho * rho
        gx = self.k * (dx - dth * yy * np.sign(dx)) / rho2
        gy = self.k * (yy + dth * np.abs(dx)) / rho2
        return gx, gy

    def trace(self, x):
        return self.const + self.k * np.log(np.abs(np.asarray(x, dtype=float) - self.center))


@dataclass(frozen=True)
class BubbleExtension:
    """``coef * (log mu - log(x^2 + (mu + y)^2)) + const`` (harmonic, n = 1)."""

    mu: float
    coef: float
    const: float = 0.0

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.const + self.coef * (math.log(self.mu) - np.log(x * x + (self.mu + y) ** 2))

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = x * x + (self.mu + y) ** 2
        return -self.coef * 2.0 * x / q, -self.coef * 2.0 * (self.mu + y) / q

    def trace(self, x):
        return self.value(x, np.zeros_like(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class GridExtension:
    """Bilinear interpolation of a :class:`HalfSpaceField` (radial, x -> |x|)."""

    field: HalfSpaceField

    def value(self, x, y):
        f = RegularGridInterpolator((self.field.r, self.field.y), self.field.values)
        pts = np.stack(np.broadcast_arrays(np.abs(x), y), axis=-1)
        return f(pts)

    def grad(self, x, y, h: float = 1e-6):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = (self.value(x + h, y) - self.value(x - h, y)) / (2 * h)
        gy = (self.value(x, y + h) - self.value(x, np.maximum(y - h, 0.0))) / (y + h - np.maximum(y - h, 0.0))
        return gx, gy
