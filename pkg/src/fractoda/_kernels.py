"""Hot inner loops, each in a numba and a pure-numpy flavour.

The numba versions are used when numba imports and ``FRACTODA_NUMBA`` is not
set to ``0``/``false``/``off``.  Both flavours are always importable as
``<name>_numpy`` and ``<name>_numba`` (the latter equal to the numpy one when
numba is missing) so the benchmark and the tests can compare them.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly by the import
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

_FLAG = os.environ.get("FRACTODA_NUMBA", "1").strip().lower()
NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("0", "false", "off", "no")


def _jit(fn):
    if _numba is None:
        return fn
    return _numba.njit(cache=True, fastmath=False)(fn)


# ---------------------------------------------------------------------------
# smooth cut-off: 1 on [eps, 1/eps], 0 off [eps/2, 2/eps]


def _step_numpy(x):
    # C-infinity step: 0 for x <= 0, 1 for x >= 1
    x = np.clip(x, 0.0, 1.0)
    out = np.where(x >= 1.0, 1.0, 0.0)
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    out[mid] = a / (a + b)
    return out


def cutoff_numpy(r, eps):
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    # rising edge on [eps/2, eps], falling edge on [1/eps, 2/eps]
    rise = _step_numpy(2.0 * flat / eps - 1.0)
    fall = 1.0 - _step_numpy(eps * flat - 1.0)
    return (rise * fall).reshape(r.shape)


def _step_scalar(x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    a = np.exp(-1.0 / x)
    b = np.exp(-1.0 / (1.0 - x))
    return a / (a + b)


_step_scalar_jit = _jit(_step_scalar)


def _cutoff_loop(r, eps):
    flat = r.ravel()
    out = np.empty(flat.size)
    for i in range(flat.size):
        x = flat[i]
        out[i] = _step_scalar_jit(2.0 * x / eps - 1.0) * (
            1.0 - _step_scalar_jit(eps * x - 1.0)
        )
    return out.reshape(r.shape)


_cutoff_loop_jit = _jit(_cutoff_loop)


def cutoff_numba(r, eps):
    r = np.ascontiguousarray(np.asarray(r, dtype=float))
    return _cutoff_loop_jit(r, float(eps))


# ---------------------------------------------------------------------------
# finite-volume stencil for div(r^(n-1) y^(1-2s) grad u) on a tensor grid.
# Returns the five coefficient arrays (center, west, east, south, north),
# each shaped (I, J) over all nodes; boundary rows are filled by the caller.


def fv_stencil_numpy(r, y, n, s):
    I, J = r.size, y.size
    re = 0.5 * (r[1:] + r[:-1])                     # r-faces
    rc_lo = np.concatenate(([r[0]], re))            # cell r-extent
    rc_hi = np.concatenate((re, [r[-1]]))
    ye = 0.5 * (y[1:] + y[:-1])
    yc_lo = np.concatenate(([y[0]], ye))
    yc_hi = np.concatenate((ye, [y[-1]]))
    a = 2.0 - 2.0 * s
    # exact integrals of y^(1-2s) and r^(n-1) across each cell
    ywt = (yc_hi ** a - yc_lo ** a) / a
    rwt = (rc_hi ** n - rc_lo ** n) / n
    ty = 2.0 * s / (y[1:] ** (2.0 * s) - y[:-1] ** (2.0 * s))   # per y-edge
    tr = re ** (n - 1.0) / np.diff(r)                            # per r-edge
    west = np.zeros((I, J))
    east = np.zeros((I, J))
    south = np.zeros((I, J))
    north = np.zeros((I, J))
    west[1:, :] = tr[:, None] * ywt[None, :]
    east[:-1, :] = tr[:, None] * ywt[None, :]
    south[:, 1:] = rwt[:, None] * ty[None, :]
    north[:, :-1] = rwt[:, None] * ty[None, :]
    center = west + east + south + north
    return center, west, east, south, north


def _fv_stencil_loop(r, y, n, s):
    I, J = r.size, y.size
    center = np.zeros((I, J))
    west = np.zeros((I, J))
    east = np.zeros((I, J))
    south = np.zeros((I, J))
    north = np.zeros((I, J))
    a = 2.0 - 2.0 * s
    for i in range(I):
        rlo = r[i] if i == 0 else 0.5 * (r[i] + r[i - 1])
        rhi = r[i] if i == I - 1 else 0.5 * (r[i] + r[i + 1])
        rwt = (rhi ** n - rlo ** n) / n
        for j in range(J):
            ylo = y[j] if j == 0 else 0.5 * (y[j] + y[j - 1])
            yhi = y[j] if j == J - 1 else 0.5 * (y[j] + y[j + 1])
            ywt = (yhi ** a - ylo ** a) / a
            if i > 0:
                west[i, j] = (0.5 * (r[i] + r[i - 1])) ** (n - 1.0) / (r[i] - r[i - 1]) * ywt
            if i < I - 1:
                east[i, j] = (0.5 * (r[i] + r[i + 1])) ** (n - 1.0) / (r[i + 1] - r[i]) * ywt
            if j > 0:
                south[i, j] = rwt * 2.0 * s / (y[j] ** (2.0 * s) - y[j - 1] ** (2.0 * s))
            if j < J - 1:
                north[i, j] = rwt * 2.0 * s / (y[j + 1] ** (2.0 * s) - y[j] ** (2.0 * s))
            center[i, j] = west[i, j] + east[i, j] + south[i, j] + north[i, j]
    return center, west, east, south, north


_fv_stencil_jit = _jit(_fv_stencil_loop)


def fv_stencil_numba(r, y, n, s):
    return _fv_stencil_jit(
        np.ascontiguousarray(r, dtype=float), np.ascontiguousarray(y, dtype=float),
        float(n), float(s),
    )


# ---------------------------------------------------------------------------
# cell energy of a grid field: for each cell, the r-gradient squared averaged
# over its two horizontal edges times the weight integral, plus the y-part
# using the exact transmissibility 2s / (y_{j+1}^{2s} - y_j^{2s}).
#   rw[i, j]  : integral of r^(n-1) y^(1-2s) over the (clipped) cell
#   rr[i, j]  : integral of r^(n-1) over the clipped r-extent of the cell


def cell_energy_numpy(u, r, y, rw, rr, s):
    du_r = np.diff(u, axis=0) / np.diff(r)[:, None]        # (I-1, J)
    gr2 = 0.5 * (du_r[:, :-1] ** 2 + du_r[:, 1:] ** 2)     # (I-1, J-1)
    du_y = np.diff(u, axis=1)                               # (I, J-1)
    ty = 2.0 * s / (y[1:] ** (2.0 * s) - y[:-1] ** (2.0 * s))
    gy2 = 0.5 * (du_y[:-1, :] ** 2 + du_y[1:, :] ** 2) * ty[None, :]
    return float(np.sum(gr2 * rw) + np.sum(gy2 * rr))


def _cell_energy_loop(u, r, y, rw, rr, s):
    total = 0.0
    I, J = u.shape
    for i in range(I - 1):
        hr = r[i + 1] - r[i]
        for j in range(J - 1):
            if rw[i, j] == 0.0 and rr[i, j] == 0.0:
                continue
            a = (u[i + 1, j] - u[i, j]) / hr
            b = (u[i + 1, j + 1] - u[i, j + 1]) / hr
            c = u[i, j + 1] - u[i, j]
            d = u[i + 1, j + 1] - u[i + 1, j]
            ty = 2.0 * s / (y[j + 1] ** (2.0 * s) - y[j] ** (2.0 * s))
            total += 0.5 * (a * a + b * b) * rw[i, j] + 0.5 * (c * c + d * d) * ty * rr[i, j]
    return total


_cell_energy_jit = _jit(_cell_energy_loop)


def cell_energy_numba(u, r, y, rw, rr, s):
    return float(_cell_energy_jit(
        np.ascontiguousarray(u, dtype=float), np.ascontiguousarray(r, dtype=float),
        np.ascontiguousarray(y, dtype=float), np.ascontiguousarray(rw, dtype=float),
        np.ascontiguousarray(rr, dtype=float), float(s),
    ))


if not NUMBA_AVAILABLE:  # pragma: no cover
    cutoff_numba = cutoff_numpy
    fv_stencil_numba = fv_stencil_numpy
    cell_energy_numba = cell_energy_numpy

if USE_NUMBA:
    cutoff = cutoff_numba
    fv_stencil = fv_stencil_numba
    cell_energy = cell_energy_numba
else:
    cutoff = cutoff_numpy
    fv_stencil = fv_stencil_numpy
    cell_energy = cell_energy_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
