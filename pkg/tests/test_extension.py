import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractoda.constants import DomainError, Params, kappa, sphere_area
from fractoda.extension import (
    GridExtension, HalfSpaceField, HomogeneousExtension, MeshError, QuadratureError,
    angular_profile, dirichlet_energy, graded_y, hemisphere_integral, neumann_trace,
    poisson_extend, solve_extension_radial,
)
from fractoda.fraclap import RadialFunction, frac_lap_radial

GAUSS = RadialFunction.gaussian()


def line_oracle(f, s, x, y):
    d = mp.gamma((1 + 2 * mp.mpf(s)) / 2) / (mp.sqrt(mp.pi) * mp.gamma(s))
    k = lambda z: d * y ** (2 * s) * ((x - z) ** 2 + y ** 2) ** (-(1 + 2 * s) / 2) * f(z)
    return float(mp.quad(k, [-mp.inf, x - 1, x, x + 1, mp.inf]))


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("x,y", [(0.0, 0.3), (0.7, 1.0), (-2.0, 0.05)])
def test_poisson_line_against_mpmath(s, x, y):
    v = poisson_extend(GAUSS, Params(1, s), (x, y))
    assert v == pytest.approx(line_oracle(lambda z: mp.exp(-z * z), s, x, y), abs=1e-8)


def test_poisson_disk_against_mpmath():
    # n = 2: brute-force double integral in polar coordinates
    s, r, y = 0.5, 0.6, 0.4
    d = mp.gamma(1 + s) / (mp.pi * mp.gamma(s))
    def inner(t):
        return mp.quad(lambda a: ((r - t * mp.cos(a)) ** 2 + (t * mp.sin(a)) ** 2 + y * y)
                       ** (-(2 + 2 * s) / 2), [0, mp.pi]) * 2
    val = mp.quad(lambda t: d * y ** (2 * s) * t * mp.exp(-t * t) * inner(t), [0, r, 2, mp.inf])
    assert poisson_extend(GAUSS, Params(2, s), (r, y)) == pytest.approx(float(val), abs=1e-8)


@pytest.mark.parametrize("n,s", [(1, 0.3), (2, 0.5), (3, 0.8), (5, 0.25)])
def test_unit_mass_and_constant(n, s):
    r = np.array([0.0, 0.5, 3.0])
    y = np.array([1e-3, 1.0, 50.0])
    v, mass = poisson_extend(RadialFunction.constant(2.5), Params(n, s), (r, y), full_output=True)
    assert np.all(v == 2.5)
    assert np.allclose(mass, 1.0, atol=1e-6)


def test_mass_guard():
    with pytest.raises(QuadratureError):
        poisson_extend(GAUSS, Params(1, 0.5), (0.0, 1.0), m=2, far_levels=1, mass_tol=1e-14)


@given(r=st.floats(0, 5), y=st.floats(0.01, 5))
def test_comparison_principle(r, y):
    p = Params(2, 0.5)
    lo = poisson_extend(GAUSS, p, (r, y))
    hi = poisson_extend(RadialFunction.gaussian(2.0), p, (r, y))
    assert 0.0 <= lo <= hi <= 1.0


def test_monotone_in_y_on_axis():
    y = np.geomspace(1e-3, 1e2, 30)
    v = poisson_extend(GAUSS, Params(3, 0.5), (np.zeros_like(y), y))
    assert np.all(np.diff(v) < 0)


@pytest.mark.parametrize("n,s", [(1, 0.25), (2, 0.5), (3, 0.75)])
def test_log_extension_matches_closed_form(n, s):
    p = Params(n, s)
    r = np.array([0.5, 1.0, 3.0])
    y = np.array([0.2, 1.0, 2.0])
    v = poisson_extend(RadialFunction.log_profile(1.0), p, (r, y))
    h = HomogeneousExtension(n, s, 0.0, 1.0)
    assert np.allclose(v, h.value(r, y), atol=1e-7)


@given(lam=st.floats(0.1, 10.0))
def test_log_extension_scaling(lam):
    # U(lam X) = U(X) + log(lam) for the extension of log|x|
    h = HomogeneousExtension(3, 0.4, 0.0, 1.0)
    x, y = 0.7, 0.3
    assert h.value(lam * x, lam * y) == pytest.approx(h.value(x, y) + math.log(lam), abs=1e-12)


def test_angular_profile_flux_is_neumann_of_log():
    # -lim y^(1-2s) d_y log-extension = kappa (-Delta)^s log = kappa a_ns / (2s) at r = 1
    from fractoda.constants import a_ns
    for n, s in [(3, 0.5), (2, 0.3)]:
        flux = angular_profile(n, s).flux()
        assert -flux == pytest.approx(-kappa(s) * a_ns(Params(n, s)) / (2 * s), rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_neumann_trace_matches_frac_lap(n, s):
    p = Params(n, s)
    r = np.array([0.0, 0.5, 1.5])
    N = neumann_trace(GAUSS, p, r)
    L = kappa(s) * frac_lap_radial(GAUSS, p, r)
    # L crosses zero near r = 1.5 for n = 3, so measure against its peak
    assert np.max(np.abs(N - L)) <= 1e-3 * np.max(np.abs(L))


def test_neumann_trace_constant():
    assert neumann_trace(RadialFunction.constant(4.0), Params(2, 0.5), 1.0) == 0.0


def _order(n, s, f):
    p = Params(n, s)
    dom = (0.0, 6.0, 6.0)
    ref_pts = []
    errs = []
    J0 = max(int(math.ceil(8 * 6.0 ** s / (6.0 / 24))) + 2, 24)
    J0 += J0 % 4
    for I, J in ((24, J0), (48, 2 * J0)):
        fld = solve_extension_radial(f, p, dom, (I, J))
        # sample at the nodes shared by both meshes: r = 0.25 k, y_j of the coarse mesh
        if not ref_pts:
            ii = np.arange(1, 24, 4)
            jj = np.arange(J // 8, J, J // 4)
            ref_pts = (fld.r[ii], fld.y[jj], ii, jj)
            errs.append(None)
        rr, yy, _, _ = ref_pts
        Ri = np.searchsorted(fld.r, rr)
        Yj = np.searchsorted(fld.y, yy)
        assert np.allclose(fld.r[Ri], rr) and np.allclose(fld.y[Yj], yy)
        exact = poisson_extend(f, p, np.meshgrid(rr, yy, indexing="ij"))
        errs.append(np.max(np.abs(fld.values[np.ix_(Ri, Yj)] - exact)))
    return math.log2(errs[1] / errs[2])


@pytest.mark.parametrize("n,s", [(1, 0.5), (1, 0.25), (3, 0.5)])
def test_solver_order(n, s):
    assert _order(n, s, GAUSS) >= 1.8


def test_solver_constant_and_residual():
    fld = solve_extension_radial(RadialFunction.constant(1.0), Params(2, 0.5), (0, 4, 4), (20, 80))
    assert np.allclose(fld.values, 1.0, atol=1e-12)
    assert fld.residual < 1e-10
    assert fld.weight_exponent == 0.0
    assert np.all(fld.boundary_trace == 1.0)


def test_mesh_guard():
    with pytest.raises(MeshError):
        solve_extension_radial(GAUSS, Params(1, 0.5), (0, 4, 4), (10, 10))
    with pytest.raises(MeshError):
        solve_extension_radial(GAUSS, Params(1, 0.5), (1, 0.5, 4), (10, 10))


def test_graded_y():
    y = graded_y(2.0, 10, 0.25)
    assert y[0] == 0.0 and y[-1] == 2.0 and np.all(np.diff(y) > 0)


class _PowerField:
    """U = y^(2s): weighted-harmonic with constant flux."""

    def __init__(self, s):
        self.s = s

    def grad(self, x, y):
        return np.zeros_like(x), 2 * self.s * y ** (2 * self.s - 1)


@pytest.mark.parametrize("n,s", [(1, 0.5), (1, 0.3), (2, 0.7)])
def test_analytic_energy_against_mpmath(n, s):
    lam = 1.7
    p = Params(n, s)
    e = dirichlet_energy(_PowerField(s), (0.0, lam), params=p)
    # 4 s^2 int y^(2s-1) over the half ball
    if n == 1:
        want = mp.quad(lambda x: 4 * s * s * mp.mpf(max(lam * lam - x * x, 0)) ** s / (2 * s), [-lam, lam])
    else:
        want = mp.quad(lambda r: sphere_area(n) * r ** (n - 1) * 4 * s * s
                       * mp.mpf(max(lam * lam - r * r, 0)) ** s / (2 * s), [0, lam])
    assert e == pytest.approx(float(want), rel=1e-6)


def test_grid_energy_against_mpmath():
    n, s, lam = 2, 0.5, 1.0
    r = np.linspace(0, 2, 201)
    y = graded_y(2.0, 400, s)
    fld = HalfSpaceField(r, y, np.broadcast_to(y ** (2 * s), (r.size, y.size)), n, s)
    want = mp.quad(lambda t: sphere_area(n) * t * (lam * lam - t * t) ** s * 2 * s, [0, lam])
    assert dirichlet_energy(fld, (0.0, lam)) == pytest.approx(float(want), rel=1e-3)
    with pytest.raises(DomainError):
        dirichlet_energy(fld, (0.0, 3.0))
    with pytest.raises(DomainError):
        dirichlet_energy(fld, (0.5, 1.0))


def test_energy_of_constant_is_zero():
    fld = solve_extension_radial(RadialFunction.constant(1.0), Params(1, 0.5), (0, 2, 2), (20, 120))
    assert dirichlet_energy(fld, (0.0, 1.0)) == pytest.approx(0.0, abs=1e-20)
    h = HomogeneousExtension(3, 0.5, 2.0, 0.0)
    assert dirichlet_energy(h, (0.0, 1.0), params=Params(3, 0.5)) == 0.0


def test_energy_duality():
    # int y^(1-2s)|grad U|^2 over the half-space = kappa int f (-Delta)^s f
    n, s = 1, 0.5
    p = Params(n, s)
    fld = solve_extension_radial(GAUSS, p, (0.0, 20.0, 20.0), (200, 400))
    E = dirichlet_energy(fld, (0.0, 20.0))
    r = np.linspace(0, 8, 2001)
    lap = frac_lap_radial(GAUSS, p, r)
    pair = 2 * np.trapezoid(GAUSS(r) * lap, r)
    assert E == pytest.approx(kappa(s) * pair, rel=2e-2)


def test_hemisphere_integral_of_one():
    from fractoda.constants import hemisphere_weight
    for n, s in [(1, 0.5), (3, 0.25)]:
        p = Params(n, s)
        v = hemisphere_integral(lambda x, y: np.ones_like(x), p, 0.0, 2.0)
        assert v == pytest.approx(2.0 ** (n + 1 - 2 * s) * hemisphere_weight(p), rel=1e-8)


def test_grid_extension_interpolates():
    fld = solve_extension_radial(GAUSS, Params(1, 0.5), (0, 4, 4), (40, 160))
    g = GridExtension(fld)
    assert g.value(-fld.r[3], fld.y[5]) == pytest.approx(fld.values[3, 5])


def test_dump_roundtrip(tmp_path):
    fld = solve_extension_radial(GAUSS, Params(1, 0.5), (0, 2, 2), (20, 120))
    fld.dump(tmp_path / "f.csv")
    rows = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=1)
    assert rows.shape == (fld.r.size * fld.y.size, 3)
    assert np.all(rows[: fld.r.size, 1] == 0.0)  # y is the outer index
    fld.dump(tmp_path / "f.bin", fmt="bin")
    b = np.fromfile(tmp_path / "f.bin", dtype="<f8").reshape(-1, 3)
    assert np.array_equal(b, fld.triples())
    with pytest.raises(ValueError):
        fld.dump(tmp_path / "x", fmt="xml")


def test_homogeneous_energy_scaling():
    p = Params(3, 0.5)
    h = HomogeneousExtension(3, 0.5, 0.3, -1.0)
    lams = 2.0 ** np.arange(-2, 4)
    e = np.array([dirichlet_energy(h, (0.0, l), params=p) for l in lams])
    assert np.allclose(e[1:] / e[:-1], 2.0 ** (p.n - 2 * p.s), rtol=1e-8)
