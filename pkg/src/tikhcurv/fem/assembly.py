"""Sparse assembly of cell and boundary-edge bilinear forms.

A kernel receives the trial tabulation ``u``, the test tabulation ``v`` and
the batch geometry ``g`` and returns the integrand at every quadrature point
as an array of shape ``(ncells, nq, n_test, n_trial)``. Tabulations expose
``val``, ``grad``, ``hess`` and ``d3`` lazily, in physical coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import quad_edge, quad_triangle
from .space import FunctionSpace

CHUNK = 4096

_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class Tabulation:
    """Lazy physical derivatives of a space's basis on a batch of cells."""

    _names = {"val": 0, "grad": 1, "hess": 2, "d3": 3}

    def __init__(self, space: FunctionSpace, cells, ref_pts):
        self.space = space
        self.cells = cells
        self.ref_pts = ref_pts
        self._cache = {}

    def __getattr__(self, name):
        if name not in self._names:
            raise AttributeError(name)
        if name not in self._cache:
            self._cache[name] = self.space.tabulate(self._names[name], self.ref_pts, self.cells)
        return self._cache[name]


@dataclass
class Geometry:
    cells: np.ndarray
    weights: np.ndarray  # (nc, nq) physical quadrature weights
    normal: np.ndarray | None = None  # (nc, 2) for boundary batches
    points: np.ndarray | None = None  # (nc, nq, 2) physical quadrature points


def edge_points(local_edge: int, t) -> np.ndarray:
    a = _REF_VERTS[(local_edge + 1) % 3]
    b = _REF_VERTS[(local_edge + 2) % 3]
    return a + np.outer(t, b - a)


def _physical_points(mesh, cells, ref_pts):
    x0 = mesh.vertices[mesh.cells[cells, 0]]
    return x0[:, None, :] + np.einsum("cia,qa->cqi", mesh.jacobians[cells], ref_pts)


def cell_batches(mesh, exactness, chunk=CHUNK):
    """Yield ``(Geometry, ref_pts)`` for chunks of cells."""
    rule = quad_triangle(exactness)
    detj = 2.0 * mesh.areas
    for start in range(0, mesh.n_cells, chunk):
        cells = np.arange(start, min(start + chunk, mesh.n_cells))
        geo = Geometry(cells, detj[cells, None] * rule.weights[None, :])
        geo.points = _physical_points(mesh, cells, rule.points)
        yield geo, rule.points


def boundary_batches(mesh, exactness):
    """Yield ``(Geometry, ref_pts)`` per local-edge group of boundary facets."""
    rule = quad_edge(exactness)
    a, b = mesh.facet_vertices()
    length = np.linalg.norm(b - a, axis=1)
    for le in range(3):
        sel = np.flatnonzero(mesh.boundary_facets[:, 1] == le)
        if len(sel) == 0:
            continue
        cells = mesh.boundary_facets[sel, 0]
        ref = edge_points(le, rule.points)
        geo = Geometry(cells, length[sel, None] * rule.weights[None, :], mesh.boundary_normals[sel])
        geo.points = _physical_points(mesh, cells, ref)
        yield geo, ref


def assemble(test: FunctionSpace, trial: FunctionSpace, kernel, exactness=6, boundary=False):
    """Assemble ``A[I, J] = sum over cells (or boundary edges) of the integral of kernel(phi_J, psi_I)``."""
    if test.mesh is not trial.mesh:
        raise ValueError("test and trial spaces live on different meshes")
    mesh = test.mesh
    batches = boundary_batches(mesh, exactness) if boundary else cell_batches(mesh, exactness)
    rows, cols, vals = [], [], []
    for geo, ref in batches:
        u = Tabulation(trial, geo.cells, ref)
        v = Tabulation(test, geo.cells, ref)
        local = np.einsum("cqij,cq->cij", kernel(u, v, geo), geo.weights)
        r = test.dof_map[geo.cells]
        c = trial.dof_map[geo.cells]
        rows.append(np.broadcast_to(r[:, :, None], local.shape).ravel())
        cols.append(np.broadcast_to(c[:, None, :], local.shape).ravel())
        vals.append(local.ravel())
    shape = (test.n_dofs, trial.n_dofs)
    if not vals:
        return sp.csr_matrix(shape)
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
    ).tocsr()
    A.sum_duplicates()
    return A


def assemble_vector(test: FunctionSpace, integrand, exactness=8) -> np.ndarray:
    """Assemble ``b[I] = integral of integrand(geo, v)`` where integrand returns ``(nc, nq, n_test)``."""
    b = np.zeros(test.n_dofs)
    for geo, ref in cell_batches(test.mesh, exactness):
        v = Tabulation(test, geo.cells, ref)
        local = np.einsum("cqi,cq->ci", integrand(geo, v), geo.weights)
        np.add.at(b, test.dof_map[geo.cells].ravel(), local.ravel())
    return b


# ---------------------------------------------------------------------------
# common kernels


def mass(u, v, g):
    return v.val[:, :, :, None] * u.val[:, :, None, :]


def stiffness(u, v, g):
    return np.einsum("cqik,cqjk->cqij", v.grad, u.grad)


def normal_flux(u, v, g):
    """``(nu . grad u) v`` on boundary edges."""
    flux = np.einsum("cqjk,ck->cqj", u.grad, g.normal)
    return v.val[:, :, :, None] * flux[:, :, None, :]


def hessian_normal_dot_grad(u, v, g):
    """``nu^T H_u grad v`` on boundary edges."""
    nh = np.einsum("ck,cqjkl->cqjl", g.normal, u.hess)
    return np.einsum("cqjl,cqil->cqij", nh, v.grad)


def third_normal_colon_hessian(u, v, g):
    """``(nu^T grad H_u) : H_v`` on boundary edges, contracting the derivative direction with nu."""
    nt = np.einsum("ck,cqjklm->cqjlm", g.normal, u.d3)
    return np.einsum("cqjlm,cqilm->cqij", nt, v.hess)


def mass_matrix(space, exactness=None):
    return assemble(space, space, mass, exactness or 2 * space.degree)


def stiffness_matrix(space, exactness=None):
    return assemble(space, space, stiffness, exactness or max(2 * space.degree - 2, 0))
