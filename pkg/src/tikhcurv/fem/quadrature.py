"""Gauss rules on the reference triangle and the reference edge.

Triangle rules are collapsed (Duffy) products of a Gauss-Jacobi rule,
which absorbs the collapse Jacobian, and a Gauss-Legendre rule. With ``n``
points per direction they integrate total degree ``2n - 1`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_EXACTNESS = 12


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 2) reference coordinates, or (nq,) edge parameters
    weights: np.ndarray
    exactness: int

    def __len__(self):
        return len(self.weights)


def _check(exactness):
    if int(exactness) != exactness or not 0 <= exactness <= MAX_EXACTNESS:
        raise ValueError(f"unsupported quadrature exactness {exactness!r} (0..{MAX_EXACTNESS})")
    return int(exactness)


@lru_cache(maxsize=None)
def quad_edge(exactness: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1]."""
    exactness = _check(exactness)
    n = exactness // 2 + 1
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, exactness)


@lru_cache(maxsize=None)
def quad_triangle(exactness: int) -> QuadratureRule:
    """Rule on the triangle (0,0), (1,0), (0,1); weights sum to 1/2."""
    exactness = _check(exactness)
    n = exactness // 2 + 1
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (xj + 1.0)
    ws = 0.25 * wj
    xl, wl = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (xl + 1.0)
    wt = 0.5 * wl
    S, T = np.meshgrid(s, t, indexing="ij")
    pts = np.column_stack([S.ravel(), (T * (1.0 - S)).ravel()])
    w = np.outer(ws, wt).ravel()
    return QuadratureRule(pts, w, exactness)
