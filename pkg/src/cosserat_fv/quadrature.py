"""Symmetric quadrature rules on the reference triangle (0,0), (1,0), (0,1)."""

from __future__ import annotations

import numpy as np


def _orbit(a, b):
    # barycentric permutations of (a, a, b)
    return [(a, a, b), (a, b, a), (b, a, a)]


def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(points, weights)``; weights sum to 1 (scale by the cell area)."""
    if degree <= 1:
        bary = [(1 / 3, 1 / 3, 1 / 3)]
        w = [1.0]
    elif degree == 2:
        bary = _orbit(1 / 6, 2 / 3)
        w = [1 / 3] * 3
    elif degree <= 4:
        # Dunavant 6-point rule
        bary = _orbit(0.445948490915965, 0.108103018168070) + _orbit(0.091576213509771, 0.816847572980459)
        w = [0.223381589678011] * 3 + [0.109951743655322] * 3
    else:
        raise ValueError(f"no rule of degree {degree}")
    bary = np.array(bary)
    pts = bary[:, 1:]
    w = np.array(w)
    return pts, w / w.sum()


def gauss_segment(npts: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points on [0, 1] with weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w
