"""Weak Laplacian: the plain Galerkin comparison method."""

from __future__ import annotations

from .fem import DiscreteFunction, assemble, mass, normal_flux, stiffness
from .fem.solve import factorize


def weak_laplacian(phi_h: DiscreteFunction) -> DiscreteFunction:
    """Find ``f_h`` in the space of ``phi_h`` with

        <f_h, psi> = -<grad phi_h, grad psi> + int_{boundary} (nu . grad phi_h) psi dS

    for every test function ``psi``. The boundary flux is taken from the
    owning cell of each boundary edge.
    """
    V = phi_h.space
    if V.degree not in (1, 2):
        raise ValueError(f"weak Laplacian supports P1 and P2 input, got P{V.degree}")
    e = 2 * V.degree
    M = assemble(V, V, mass, e)
    K = assemble(V, V, stiffness, e)
    B = assemble(V, V, normal_flux, e, boundary=True)
    rhs = -(K @ phi_h.coeffs) + B @ phi_h.coeffs
    return DiscreteFunction(V, factorize(M).solve(rhs))
