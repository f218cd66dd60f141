"""Continuous Lagrange spaces, discrete functions and point evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..mesh import Mesh
from .element import lagrange

_PUSH = {
    0: None,
    1: "cai,qna->cqni",
    2: "cai,cbj,qnab->cqnij",
    3: "cai,cbj,cdk,qnabd->cqnijk",
}
# same contractions with one cell per point
_PUSH_POINTWISE = {
    1: "pai,pna->pni",
    2: "pai,pbj,pnab->pnij",
    3: "pai,pbj,pdk,pnabd->pnijk",
}


def push_forward(ref_tab, ginv, order):
    """Map reference derivative tensors ``(nq, nb, 2...)`` to physical ones ``(nc, nq, nb, 2...)``.

    ``ginv[c, a, i] = d xi_a / d x_i`` is the inverse Jacobian of each cell.
    """
    if order == 0:
        return np.broadcast_to(ref_tab, (len(ginv),) + ref_tab.shape)
    return np.einsum(_PUSH[order], *([ginv] * order), ref_tab, optimize=True)


class FunctionSpace:
    """Continuous nodal P_m space on a mesh.

    Global dofs: vertices first, then ``m - 1`` nodes per edge (ordered from
    the lower to the higher global vertex index), then cell interiors.
    """

    def __init__(self, mesh: Mesh, degree: int):
        self.mesh = mesh
        self.element = lagrange(degree)
        self.degree = degree
        self.dof_map = self._build_dof_map()
        self.dof_map.setflags(write=False)
        self.n_dofs = int(self.dof_map.max()) + 1

    def _build_dof_map(self):
        mesh, m = self.mesh, self.degree
        nv, ne = mesh.n_vertices, len(mesh.edges)
        cols = [mesh.cells]
        if m == 2:
            cols.append(nv + mesh.cell_edges)
        elif m == 3:
            for i in range(3):
                start = mesh.cells[:, (i + 1) % 3]
                end = mesh.cells[:, (i + 2) % 3]
                base = nv + 2 * mesh.cell_edges[:, i]
                forward = (start < end).astype(np.int64)
                # local node at t=1/3 sits next to `start`
                cols.append(np.column_stack([base + 1 - forward, base + forward]))
            cols.append((nv + 2 * ne + np.arange(mesh.n_cells))[:, None])
        return np.column_stack(cols).astype(np.int64)

    def __repr__(self):
        return f"FunctionSpace(P{self.degree}, n_dofs={self.n_dofs})"

    @cached_property
    def inverse_jacobians(self) -> np.ndarray:
        return np.linalg.inv(self.mesh.jacobians)

    @cached_property
    def node_coords(self) -> np.ndarray:
        mesh = self.mesh
        x0 = mesh.vertices[mesh.cells[:, 0]]
        local = x0[:, None, :] + np.einsum("cia,na->cni", mesh.jacobians, self.element.nodes)
        coords = np.empty((self.n_dofs, 2))
        coords[self.dof_map.ravel()] = local.reshape(-1, 2)
        coords.setflags(write=False)
        return coords

    def tabulate(self, order, ref_pts, cells=None) -> np.ndarray:
        """Physical derivatives of the local basis at reference points.

        Returns ``(ncells, npts, nbasis) + (2,) * order``.
        """
        ginv = self.inverse_jacobians if cells is None else self.inverse_jacobians[cells]
        return push_forward(self.element.tabulate(order, ref_pts), ginv, order)

    def submesh(self) -> Mesh:
        """P1 triangulation whose vertices are this space's nodes (degree 1 or 2)."""
        if self.degree == 1:
            return self.mesh
        if self.degree != 2:
            raise ValueError("submesh only defined for degree 1 and 2")
        d = self.dof_map
        # local nodes: v0 v1 v2, e0 (v1-v2), e1 (v2-v0), e2 (v0-v1)
        sub = np.concatenate(
            [d[:, [0, 5, 4]], d[:, [5, 1, 3]], d[:, [4, 3, 2]], d[:, [3, 4, 5]]]
        )
        return Mesh.from_cells(self.node_coords, sub, self.mesh.pattern)


def make_space(mesh: Mesh, degree: int) -> FunctionSpace:
    return FunctionSpace(mesh, degree)


@dataclass
class DiscreteFunction:
    space: FunctionSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_dofs,):
            raise ValueError(
                f"coefficient vector of shape {self.coeffs.shape} does not match {self.space.n_dofs} dofs"
            )

    def __call__(self, points):
        return evaluate(self, points)

    def __neg__(self):
        return DiscreteFunction(self.space, -self.coeffs)

    def cell_values(self, order, ref_pts, cells=None):
        """Derivatives of the function at reference points in every (or the given) cell."""
        tab = self.space.tabulate(order, ref_pts, cells)
        dm = self.space.dof_map if cells is None else self.space.dof_map[cells]
        return np.einsum("cqn...,cn->cq...", tab, self.coeffs[dm])


def interpolate(space: FunctionSpace, f) -> DiscreteFunction:
    """Nodal interpolant of a callable taking an ``(n, 2)`` array."""
    return DiscreteFunction(space, np.asarray(f(space.node_coords), dtype=float))


def eval_basis(space: FunctionSpace, cell: int, bary, order: int = 0) -> np.ndarray:
    """Physical derivatives of order ``order`` of all local basis functions of ``cell``.

    ``bary`` are barycentric coordinates of the evaluation point.
    """
    if not 0 <= cell < space.mesh.n_cells:
        raise IndexError(f"cell {cell} out of range")
    if order not in (0, 1, 2, 3):
        raise ValueError(f"derivative order must be 0..3, got {order!r}")
    bary = np.asarray(bary, dtype=float)
    ref = bary[1:3][None, :]
    return space.tabulate(order, ref, np.array([cell]))[0, 0]


def evaluate_in_cells(f: DiscreteFunction, cells, bary, order=0) -> np.ndarray:
    """Evaluate ``f`` (or a derivative tensor) at points given by cell and barycentric coordinates."""
    space = f.space
    cells = np.asarray(cells)
    bary = np.atleast_2d(bary)
    ref_tab = space.element.tabulate(order, bary[:, 1:3])  # (np, nb, ...)
    if order:
        ginv = space.inverse_jacobians[cells]
        ref_tab = np.einsum(_PUSH_POINTWISE[order], *([ginv] * order), ref_tab, optimize=True)
    return np.einsum("pn...,pn->p...", ref_tab, f.coeffs[space.dof_map[cells]])


def evaluate(f: DiscreteFunction, points, order: int = 0) -> np.ndarray:
    """Value (order 0), gradient (1), Hessian (2) or third-derivative tensor (3) at points."""
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    cells, bary = f.space.mesh.locate(np.atleast_2d(points))
    out = evaluate_in_cells(f, cells, bary, order)
    return out[0] if single else out
