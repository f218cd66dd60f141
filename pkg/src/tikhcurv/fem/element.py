"""Nodal Lagrange elements of degree 1..3 on the reference triangle.

Basis functions are stored as monomial coefficients, which makes derivatives
of any order exact and cheap. Local node order: the three vertices, then
``m - 1`` nodes per local edge (edge ``i`` runs from vertex ``i+1`` to
``i+2``), then interior nodes.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class LagrangeElement:
    def __init__(self, degree: int):
        if degree not in (1, 2, 3):
            raise ValueError(f"unsupported degree {degree!r}; expected 1, 2 or 3")
        self.degree = m = degree
        self.exponents = np.array([(a, k - a) for k in range(m + 1) for a in range(k, -1, -1)])
        self.nodes = self._nodes()
        self.n_basis = len(self.nodes)
        V = self._monomials(self.nodes)
        # coeffs[:, i] are the monomial coefficients of basis function i
        self.coeffs = np.linalg.solve(V, np.eye(self.n_basis))

    def _nodes(self):
        m = self.degree
        nodes = list(_REF_VERTS)
        for i in range(3):
            a, b = _REF_VERTS[(i + 1) % 3], _REF_VERTS[(i + 2) % 3]
            nodes += [a + (b - a) * k / m for k in range(1, m)]
        if m == 3:
            nodes.append(_REF_VERTS.mean(axis=0))
        return np.array(nodes)

    def _monomials(self, pts, d=(0, 0)):
        """Values of ``d``-derivatives of every monomial at ``pts``, shape (npts, nmono)."""
        pts = np.atleast_2d(pts)
        out = np.zeros((len(pts), len(self.exponents)))
        for j, (a, b) in enumerate(self.exponents):
            if a < d[0] or b < d[1]:
                continue
            fa = np.prod(np.arange(a - d[0] + 1, a + 1)) if d[0] else 1.0
            fb = np.prod(np.arange(b - d[1] + 1, b + 1)) if d[1] else 1.0
            out[:, j] = fa * fb * pts[:, 0] ** (a - d[0]) * pts[:, 1] ** (b - d[1])
        return out

    def tabulate(self, order: int, pts) -> np.ndarray:
        """Reference derivatives of all basis functions.

        Returns an array of shape ``(npts, nbasis) + (2,) * order`` holding
        the symmetric derivative tensor in reference coordinates.
        """
        if order not in (0, 1, 2, 3):
            raise ValueError(f"derivative order must be 0..3, got {order!r}")
        pts = np.atleast_2d(pts)
        out = np.empty((len(pts), self.n_basis) + (2,) * order)
        for idx in itertools.product((0, 1), repeat=order):
            d = (idx.count(0), idx.count(1))
            out[(Ellipsis,) + idx] = self._monomials(pts, d) @ self.coeffs
        return out


@lru_cache(maxsize=None)
def lagrange(degree: int) -> LagrangeElement:
    return LagrangeElement(degree)
