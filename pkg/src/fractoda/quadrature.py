"""Composite Gauss-Legendre rules with geometric grading.

Rules are plain ``(x, w)`` arrays so callers can evaluate integrands on many
targets at once by broadcasting.  A graded rule also carries ``gap``, the
exact distance of each node from the endpoint it is graded toward, which
lets callers form ``1 - u`` or ``r - rho`` without cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Rule",
    "gauss_legendre",
    "panel_rule",
    "graded_rule",
    "breakpoint_rule",
    "log_rule",
]


@dataclass(frozen=True)
class Rule:
    x: np.ndarray
    w: np.ndarray
    gap: np.ndarray | None = None

    def __len__(self) -> int:
        return self.x.size

    def integrate(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        return np.tensordot(values, self.w, axes=([axis], [0]))


@lru_cache(maxsize=64)
def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, 1]``."""
    t, w = np.polynomial.legendre.leggauss(m)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def panel_rule(edges, m: int = 10) -> Rule:
    """Gauss-Legendre with ``m`` nodes on every interval between edges."""
    edges = np.asarray(edges, dtype=float)
    t, w = gauss_legendre(m)
    a = edges[:-1, None]
    h = np.diff(edges)[:, None]
    return Rule((a + h * t).ravel(), (h * w).ravel())


def graded_rule(
    length: float,
    levels: int,
    m: int = 10,
    ratio: float = 0.5,
    last_panel: bool = True,
) -> Rule:
    """Rule for ``int_0^length g(gap) dgap`` graded toward ``gap = 0``.

    Panels are ``[length*ratio^(k+1), length*ratio^k]`` for ``k < levels``
    plus, optionally, ``[0, length*ratio^levels]``.  Nodes are returned as
    gaps; callers map them to the real variable.
    """
    k = np.arange(levels + 1)
    edges = length * ratio ** k
    if last_panel:
        edges = np.append(edges, 0.0)
    edges = edges[::-1]
    r = panel_rule(edges, m)
    return Rule(r.x, r.w, r.x.copy())


def breakpoint_rule(points, lo: float, hi: float, m: int = 10,
                    max_width: float | None = None) -> Rule:
    """Panels between sorted unique breakpoints clipped to ``[lo, hi]``.

    With ``max_width`` long panels are split evenly.
    """
    pts = np.asarray(points, dtype=float)
    pts = pts[(pts > lo) & (pts < hi)]
    edges = np.unique(np.concatenate(([lo], pts, [hi])))
    if max_width is not None:
        pieces = [edges[:1]]
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(1, int(np.ceil((b - a) / max_width)))
            pieces.append(np.linspace(a, b, k + 1)[1:])
        edges = np.concatenate(pieces)
    return panel_rule(edges, m)


def log_rule(edges_log, m: int = 10) -> Rule:
    """Rule for ``int g(r) dr`` built from panels in ``log r``.

    Weights include the Jacobian ``r``; ``gap`` holds ``log r``.
    """
    r = panel_rule(edges_log, m)
    x = np.exp(r.x)
    return Rule(x, r.w * x, r.x)
