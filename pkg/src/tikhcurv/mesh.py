"""Structured triangular meshes of rectangles.

Two splitting patterns are supported: ``CROSSED`` cuts each grid rectangle
into four triangles meeting at the rectangle center, ``DIAGONAL`` cuts it
into two triangles along the bottom-left to top-right diagonal.

Local edge ``i`` of a cell is the edge opposite local vertex ``i``, i.e. it
runs from vertex ``(i + 1) % 3`` to vertex ``(i + 2) % 3``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class Pattern(str, enum.Enum):
    CROSSED = "crossed"
    DIAGONAL = "diagonal"
    UNSTRUCTURED = "unstructured"


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming 2D triangulation.

    Attributes
    ----------
    vertices : (nv, 2) float array
    cells : (nc, 3) int array, counterclockwise
    boundary_facets : (nf, 2) int array of ``(cell, local_edge)``
    boundary_normals : (nf, 2) float array of outward unit normals
    pattern : Pattern
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: np.ndarray
    boundary_normals: np.ndarray
    pattern: Pattern = Pattern.UNSTRUCTURED
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("vertices", "cells", "boundary_facets", "boundary_normals"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_cells(cls, vertices, cells, pattern=Pattern.UNSTRUCTURED) -> "Mesh":
        """Build a mesh from raw arrays, fixing orientation and finding boundary facets."""
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.array(cells, dtype=np.int64)
        p = vertices[cells]
        det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
            p[:, 2, 0] - p[:, 0, 0]
        ) * (p[:, 1, 1] - p[:, 0, 1])
        if np.any(np.abs(det) <= 1e-300):
            raise ValueError("degenerate cell with zero area")
        flip = det < 0
        cells[flip] = cells[flip][:, [0, 2, 1]]

        edges, cell_edges, counts = _edge_topology(cells)
        if np.any(counts > 2):
            raise ValueError("non-manifold edge shared by more than two cells")
        bc, bl = np.nonzero(counts[cell_edges] == 1)
        order = np.lexsort((bl, bc))
        bc, bl = bc[order], bl[order]
        a = vertices[cells[bc, (bl + 1) % 3]]
        b = vertices[cells[bc, (bl + 2) % 3]]
        t = b - a
        # ccw cells: the outward normal is the tangent rotated clockwise
        n = np.column_stack([t[:, 1], -t[:, 0]])
        n /= np.linalg.norm(n, axis=1)[:, None]
        return cls(vertices, cells, np.column_stack([bc, bl]), n, Pattern(pattern))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def _topology(self):
        return _edge_topology(self.cells)

    @property
    def edges(self) -> np.ndarray:
        """(ne, 2) sorted global vertex pairs."""
        return self._topology[0]

    @property
    def cell_edges(self) -> np.ndarray:
        """(nc, 3) global edge index of each local edge."""
        return self._topology[1]

    @property
    def edge_cell_counts(self) -> np.ndarray:
        return self._topology[2]

    @cached_property
    def jacobians(self) -> np.ndarray:
        """(nc, 2, 2) affine maps ``J[i, a] = dx_i / dxi_a`` from the reference triangle."""
        p = self.vertices[self.cells]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.det(self.jacobians)

    def bounds(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    def facet_vertices(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint coordinates of each boundary facet, in ccw order."""
        c, l = self.boundary_facets.T
        a = self.vertices[self.cells[c, (l + 1) % 3]]
        b = self.vertices[self.cells[c, (l + 2) % 3]]
        return a, b

    def locate(self, points, tol=1e-10):
        """Return ``(cells, barycentric)`` for each point; raise if a point is outside."""
        from scipy.spatial import cKDTree

        points = np.atleast_2d(np.asarray(points, dtype=float))
        if "kdtree" not in self._cache:
            centroids = self.vertices[self.cells].mean(axis=1)
            self._cache["kdtree"] = cKDTree(centroids)
            self._cache["jinv"] = np.linalg.inv(self.jacobians)
        tree, jinv = self._cache["kdtree"], self._cache["jinv"]
        k = min(12, self.n_cells)
        _, cand = tree.query(points, k=k)
        cand = cand.reshape(len(points), k)
        found = np.full(len(points), -1)
        bary = np.zeros((len(points), 3))
        for j in range(k):
            todo = found < 0
            if not todo.any():
                break
            c = cand[todo, j]
            lam = self._barycentric(c, points[todo], jinv)
            ok = lam.min(axis=1) >= -tol
            idx = np.flatnonzero(todo)[ok]
            found[idx] = c[ok]
            bary[idx] = lam[ok]
        for i in np.flatnonzero(found < 0):
            lam = self._barycentric(np.arange(self.n_cells), np.repeat(points[i : i + 1], self.n_cells, 0), jinv)
            best = int(np.argmax(lam.min(axis=1)))
            if lam[best].min() < -tol:
                raise ValueError(f"point {tuple(points[i])} is outside the mesh")
            found[i] = best
            bary[i] = lam[best]
        return found, bary

    def _barycentric(self, c, pts, jinv):
        x0 = self.vertices[self.cells[c, 0]]
        xi = np.einsum("nai,ni->na", jinv[c], pts - x0)
        return np.column_stack([1.0 - xi.sum(axis=1), xi])

    def write_text(self, path) -> None:
        """Debug export: ``vertices N cells M`` then coordinates then 0-based cells."""
        with open(path, "w", newline="\n") as fh:
            fh.write(f"vertices {self.n_vertices} cells {self.n_cells}\n")
            for x, y in self.vertices:
                fh.write(f"{x!r} {y!r}\n")
            for i, j, k in self.cells:
                fh.write(f"{i} {j} {k}\n")


def _edge_topology(cells):
    local = np.stack(
        [cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1
    ).reshape(-1, 2)
    local = np.sort(local, axis=1)
    edges, inverse, counts = np.unique(local, axis=0, return_inverse=True, return_counts=True)
    return edges, inverse.reshape(-1, 3), counts


def build_rect_mesh(xmin, xmax, ymin, ymax, nx, ny, pattern=Pattern.CROSSED) -> Mesh:
    """Triangulate ``[xmin, xmax] x [ymin, ymax]`` with ``nx * ny`` rectangles.

    Grid vertices are numbered row-major; for the crossed pattern the
    rectangle centers follow, also row-major.
    """
    pattern = Pattern(pattern)
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive integers, got nx={nx}, ny={ny}")
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("degenerate bounds")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    a = j * (nx + 1) + i
    b = a + 1
    c = a + nx + 2
    d = a + nx + 1
    if pattern is Pattern.CROSSED:
        e = len(verts) + np.arange(nx * ny)
        centers = 0.5 * (verts[a] + verts[c])
        verts = np.vstack([verts, centers])
        cells = np.stack(
            [np.column_stack(t) for t in ((a, b, e), (b, c, e), (c, d, e), (d, a, e))], axis=1
        ).reshape(-1, 3)
    elif pattern is Pattern.DIAGONAL:
        cells = np.stack([np.column_stack((a, b, c)), np.column_stack((a, c, d))], axis=1).reshape(-1, 3)
    else:
        raise ValueError(f"unsupported pattern {pattern}")
    return Mesh.from_cells(verts, cells, pattern)


def h_max(mesh: Mesh) -> float:
    """Largest cell diameter, i.e. the longest edge of the triangulation."""
    e = mesh.edges
    return float(np.max(np.linalg.norm(mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]], axis=1)))


def scale_mesh(mesh: Mesh, r: float) -> Mesh:
    """Return the mesh with all coordinates multiplied by ``r > 0``."""
    if not r > 0:
        raise ValueError(f"scale factor must be positive, got {r}")
    return Mesh(
        mesh.vertices * r,
        mesh.cells.copy(),
        mesh.boundary_facets.copy(),
        mesh.boundary_normals.copy(),
        mesh.pattern,
    )
