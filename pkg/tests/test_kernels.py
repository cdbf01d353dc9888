import numpy as np
import pytest

from fractoda import _kernels as K
from fractoda.extension import graded_y

pytestmark = pytest.mark.skipif(not K.NUMBA_AVAILABLE, reason="numba not installed")


def test_cutoff_flavours_agree():
    r = np.concatenate(([0.0], np.geomspace(1e-6, 1e6, 5000)))
    for eps in (0.3, 1e-2, 1e-4):
        assert np.allclose(K.cutoff_numba(r, eps), K.cutoff_numpy(r, eps), rtol=0, atol=1e-15)
    assert K.cutoff_numba(r.reshape(-1, 1), 0.1).shape == (r.size, 1)


@pytest.mark.parametrize("n,s", [(1, 0.25), (3, 0.5), (5, 0.75)])
def test_stencil_flavours_agree(n, s):
    r = np.linspace(0.0, 3.0, 31)
    y = graded_y(3.0, 60, s)
    for a, b in zip(K.fv_stencil_numba(r, y, n, s), K.fv_stencil_numpy(r, y, n, s)):
        assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_cell_energy_flavours_agree():
    rng = np.random.default_rng(3)
    r = np.linspace(0.0, 2.0, 21)
    y = graded_y(2.0, 30, 0.4)
    u = rng.standard_normal((r.size, y.size))
    rw = rng.random((r.size - 1, y.size - 1))
    rr = rng.random((r.size - 1, y.size - 1))
    a = K.cell_energy_numba(u, r, y, rw, rr, 0.4)
    b = K.cell_energy_numpy(u, r, y, rw, rr, 0.4)
    assert a == pytest.approx(b, rel=1e-12)


def test_backend_flag(monkeypatch):
    import importlib
    monkeypatch.setenv("FRACTODA_NUMBA", "0")
    mod = importlib.reload(K)
    try:
        assert mod.backend() == "numpy" and mod.cutoff is mod.cutoff_numpy
    finally:
        monkeypatch.delenv("FRACTODA_NUMBA")
        importlib.reload(K)
