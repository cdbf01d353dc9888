"""Time the numba and numpy flavours of each hot kernel.

Run with ``python3 benchmarks/bench_kernels.py``.  The first numba call
compiles (or loads the on-disk cache) and is excluded from the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fractoda import _kernels as K
from fractoda.extension import graded_y


def _time(fn, *args, repeat=5):
    fn(*args)  # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def cases(size: int):
    r = np.linspace(0.0, 8.0, size + 1)
    y = graded_y(8.0, 4 * size, 0.5)
    u = np.sin(r)[:, None] * np.exp(-y)[None, :]
    rw = np.ones((r.size - 1, y.size - 1))
    rr = np.ones_like(rw)
    pts = np.geomspace(1e-5, 1e5, 50 * size * size)
    return {
        "cutoff": ((pts, 1e-3), K.cutoff_numpy, K.cutoff_numba),
        "fv_stencil": ((r, y, 3.0, 0.5), K.fv_stencil_numpy, K.fv_stencil_numba),
        "cell_energy": ((u, r, y, rw, rr, 0.5), K.cell_energy_numpy, K.cell_energy_numba),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args(argv)
    print(f"numba available: {K.NUMBA_AVAILABLE}; default backend: {K.backend()}")
    print(f"{'kernel':<12} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}  max|diff|")
    for name, (args, f_np, f_nb) in cases(ns.size).items():
        t_np = _time(f_np, *args, repeat=ns.repeat)
        t_nb = _time(f_nb, *args, repeat=ns.repeat)
        a, b = f_np(*args), f_nb(*args)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(z))))
                   for x, z in zip(a if isinstance(a, tuple) else (a,),
                                   b if isinstance(b, tuple) else (b,)))
        print(f"{name:<12} {1e3 * t_np:12.3f} {1e3 * t_nb:12.3f} {t_np / t_nb:8.2f}  {diff:.2e}")


if __name__ == "__main__":
    main()
