"""L2 projection onto continuous Lagrange spaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fem import DiscreteFunction, FunctionSpace, assemble_vector, mass_matrix
from .fem.solve import factorize

# sources are not polynomial, so integrate them beyond the degree of the basis
SOURCE_EXACTNESS = 8


@dataclass(frozen=True)
class AnalyticField:
    """A scalar field given by callables acting on ``(n, 2)`` coordinate arrays.

    ``singular_points`` lists points where the derivative callbacks blow up;
    all quadrature used here is interior Gauss, so those are never sampled
    unless they coincide with an interior quadrature node.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    laplacian: Callable[[np.ndarray], np.ndarray] | None = None
    singular_points: tuple = field(default=())

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def laplacian_field(self) -> "AnalyticField":
        if self.laplacian is None:
            raise ValueError("field has no Laplacian callback")
        return AnalyticField(self.laplacian, singular_points=self.singular_points)


def sine_field(scale=1.0 / np.sqrt(2.0)) -> AnalyticField:
    """``sin(s x) sin(s y)``; with the default ``s`` it satisfies ``-Laplace f = f``."""

    def value(x):
        return np.sin(scale * x[..., 0]) * np.sin(scale * x[..., 1])

    def gradient(x):
        sx, sy = np.sin(scale * x[..., 0]), np.sin(scale * x[..., 1])
        cx, cy = np.cos(scale * x[..., 0]), np.cos(scale * x[..., 1])
        return scale * np.stack([cx * sy, sx * cy], axis=-1)

    def laplacian(x):
        return -2.0 * scale**2 * value(x)

    return AnalyticField(value, gradient, laplacian)


def _source_integrand(space, source):
    if isinstance(source, DiscreteFunction):
        if source.space.mesh is not space.mesh:
            raise ValueError("discrete source lives on a different mesh")

        def integrand(geo, v):
            vals = np.einsum(
                "cqn,cn->cq", source.space.tabulate(0, v.ref_pts, geo.cells),
                source.coeffs[source.space.dof_map[geo.cells]],
            )
            return vals[:, :, None] * v.val

    else:
        def integrand(geo, v):
            return source(geo.points)[:, :, None] * v.val

    return integrand


class Projector:
    """Reusable L2 projector onto one space (mass matrix factorized once)."""

    def __init__(self, space: FunctionSpace):
        self.space = space
        self.mass = mass_matrix(space)
        self._lu = factorize(self.mass)

    def load_vector(self, source) -> np.ndarray:
        return assemble_vector(self.space, _source_integrand(self.space, source), SOURCE_EXACTNESS)

    def __call__(self, source) -> DiscreteFunction:
        return DiscreteFunction(self.space, self._lu.solve(self.load_vector(source)))

    def solve_mass(self, b) -> np.ndarray:
        return self._lu.solve(b)


def project(space: FunctionSpace, source) -> DiscreteFunction:
    """Return ``phi_h`` in ``space`` with ``<phi_h, psi> = <source, psi>`` for every basis function ``psi``."""
    return Projector(space)(source)
