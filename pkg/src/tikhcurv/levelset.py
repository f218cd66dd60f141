"""Level-set inputs and the discrete interface.

Three ways to get a P1 level set for a circular interface: project the
exact distance field, compute exact distances to the discrete interface at
every node (brute force), or compute them only next to the interface and
march outward with the fast marching method.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fem import DiscreteFunction, FunctionSpace
from .mesh import Mesh
from .projection import AnalyticField

ZERO_SNAP = 1e-12


class EmptyInterfaceError(ValueError):
    pass


class UnreachableVertexError(RuntimeError):
    pass


@dataclass(frozen=True)
class InterfacePolyline:
    """Zero-level segments of a P1 field, one per cut cell."""

    a: np.ndarray  # (ns, 2) start points
    b: np.ndarray  # (ns, 2) end points
    cells: np.ndarray  # (ns,) owning cell

    def __len__(self):
        return len(self.cells)

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.b - self.a, axis=1)

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def segments(self):
        return list(zip(map(tuple, self.a), map(tuple, self.b), self.cells.tolist()))


SignConvention = Callable[[np.ndarray], np.ndarray]


def circle_levelset(center=(0.0, 0.0), R=0.5) -> AnalyticField:
    """``R - |x - c|``: positive inside, Laplacian ``-1/|x - c|``, curvature ``1/R`` on the circle."""
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    c = np.asarray(center, dtype=float)

    def value(x):
        return R - np.linalg.norm(np.asarray(x) - c, axis=-1)

    def gradient(x):
        d = np.asarray(x) - c
        return -d / np.linalg.norm(d, axis=-1)[..., None]

    def laplacian(x):
        return -1.0 / np.linalg.norm(np.asarray(x) - c, axis=-1)

    return AnalyticField(value, gradient, laplacian, singular_points=(tuple(c),))


def inside_circle(center=(0.0, 0.0), R=0.5) -> SignConvention:
    c = np.asarray(center, dtype=float)

    def sign(x):
        return np.where(np.linalg.norm(np.asarray(x) - c, axis=-1) <= R, 1.0, -1.0)

    return sign


def _snap(values):
    scale = np.max(np.abs(values)) if len(values) else 0.0
    v = np.array(values, dtype=float)
    small = np.abs(v) < ZERO_SNAP * scale
    v[small] = ZERO_SNAP * scale
    return v


def _contour_segments(mesh: Mesh, values: np.ndarray, level: float):
    """Marching triangles on vertex values; returns ``(a, b, cells)``."""
    v = _snap(values - level)
    tri = v[mesh.cells]
    pos = tri > 0
    npos = pos.sum(axis=1)
    cut = np.flatnonzero((npos == 1) | (npos == 2))
    pts = mesh.vertices[mesh.cells[cut]]
    t = tri[cut]
    # the odd vertex lies alone on its side; the two cut edges touch it
    odd = np.where(npos[cut] == 1, np.argmax(pos[cut], axis=1), np.argmin(pos[cut], axis=1))
    i0 = odd
    i1 = (odd + 1) % 3
    i2 = (odd + 2) % 3
    r = np.arange(len(cut))
    s1 = t[r, i0] / (t[r, i0] - t[r, i1])
    s2 = t[r, i0] / (t[r, i0] - t[r, i2])
    pa = pts[r, i0] + s1[:, None] * (pts[r, i1] - pts[r, i0])
    pb = pts[r, i0] + s2[:, None] * (pts[r, i2] - pts[r, i0])
    return pa, pb, cut


def extract_interface(phi: DiscreteFunction) -> InterfacePolyline:
    """Zero level of a P1 field, one straight segment per cut cell.

    Nodal values within ``1e-12 * max|phi|`` of zero count as positive.
    """
    if phi.space.degree != 1:
        raise ValueError(f"interface extraction needs a P1 field, got P{phi.space.degree}")
    a, b, cells = _contour_segments(phi.space.mesh, phi.coeffs, 0.0)
    return InterfacePolyline(a, b, cells)


def point_segment_distance(points, a, b, chunk=2048) -> np.ndarray:
    """Minimum Euclidean distance from each point to a set of segments."""
    points = np.atleast_2d(points)
    d = b - a
    len2 = np.einsum("si,si->s", d, d)
    len2 = np.where(len2 > 0, len2, 1.0)
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        p = points[s : s + chunk]
        w = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("psi,si->ps", w, d) / len2, 0.0, 1.0)
        diff = w - t[:, :, None] * d[None, :, :]
        out[s : s + chunk] = np.sqrt(np.einsum("psi,psi->ps", diff, diff).min(axis=1))
    return out


def _target_space(mesh, space):
    if space is None:
        return FunctionSpace(mesh, 1)
    if space.mesh is not mesh:
        raise ValueError("space lives on a different mesh")
    return space


def brute_force_signed_distance(mesh: Mesh, gamma: InterfacePolyline, sign: SignConvention,
                                space: FunctionSpace | None = None) -> DiscreteFunction:
    """Signed distance to the discrete interface at every node of ``space`` (P1 by default)."""
    if len(gamma) == 0:
        raise EmptyInterfaceError("interface is empty; no distance to compute")
    V = _target_space(mesh, space)
    x = V.node_coords
    return DiscreteFunction(V, sign(x) * point_segment_distance(x, gamma.a, gamma.b))


def narrow_band(space: FunctionSpace, gamma: InterfacePolyline) -> np.ndarray:
    """Nodes of the cells that own interface segments."""
    return np.unique(space.dof_map[gamma.cells])


def fmm_signed_distance(mesh: Mesh, gamma: InterfacePolyline, sign: SignConvention,
                        space: FunctionSpace | None = None, return_order=False):
    """Exact distances on the narrow band, first-order fast marching elsewhere.

    For P2 targets the march runs on the triangulation of the P2 nodes.
    With ``return_order`` the node acceptance order is returned as well.
    """
    if len(gamma) == 0:
        raise EmptyInterfaceError("interface is empty; no distance to compute")
    V = _target_space(mesh, space)
    band = narrow_band(V, gamma)
    x = V.node_coords
    d0 = point_segment_distance(x[band], gamma.a, gamma.b)
    dist, order = fast_marching(V.submesh(), band, d0)
    phi = DiscreteFunction(V, sign(x) * dist)
    return (phi, order) if return_order else phi


def _vertex_cells(mesh: Mesh):
    nv = mesh.n_vertices
    flat = mesh.cells.ravel()
    order = np.argsort(flat, kind="stable")
    starts = np.searchsorted(flat[order], np.arange(nv + 1))
    return order // 3, starts


def _triangle_update(xc, xa, da, xb, db):
    """Eikonal value at ``xc`` from values at ``xa`` and ``xb`` (linear interpolation along ab)."""
    e = xb - xa
    L = np.hypot(*e)
    w = xc - xa
    edge_a = da + np.hypot(*w)
    edge_b = db + np.hypot(*(xc - xb))
    best = min(edge_a, edge_b)
    k = (db - da) / L
    if abs(k) >= 1.0:
        return best
    p = (w[0] * e[0] + w[1] * e[1]) / L
    q = abs(w[0] * e[1] - w[1] * e[0]) / L
    root = np.sqrt(1.0 - k * k)
    sigma = p - k * q / root
    if 0.0 <= sigma <= L:
        return min(best, da + k * p + q * root)
    return best


def fast_marching(mesh: Mesh, seeds, seed_values):
    """Unsigned eikonal distances on a triangulation from fixed seed values.

    Returns ``(distance, acceptance_order)``. Obtuse angles at the updated
    vertex use edge updates only.
    """
    nv = mesh.n_vertices
    X = mesh.vertices
    cells = mesh.cells
    vc, starts = _vertex_cells(mesh)
    dist = np.full(nv, np.inf)
    fixed = np.zeros(nv, dtype=bool)
    accepted = np.zeros(nv, dtype=bool)
    seeds = np.asarray(seeds)
    dist[seeds] = seed_values
    fixed[seeds] = True
    heap = [(float(dist[s]), int(s)) for s in seeds]
    heapq.heapify(heap)
    order = []

    # interior angle at each corner of each cell, for the obtuse check
    p = X[cells]
    cos = np.empty((len(cells), 3))
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        v = p[:, (i + 2) % 3] - p[:, i]
        cos[:, i] = np.einsum("ci,ci->c", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
    obtuse = cos < -1e-12

    while heap:
        d, v = heapq.heappop(heap)
        if accepted[v] or d > dist[v]:
            continue
        accepted[v] = True
        order.append(v)
        for c in vc[starts[v] : starts[v + 1]]:
            tri = cells[c]
            for li in range(3):
                w = tri[li]
                if accepted[w] or fixed[w]:
                    continue
                a, b = tri[(li + 1) % 3], tri[(li + 2) % 3]
                if accepted[a] and accepted[b] and not obtuse[c, li]:
                    new = _triangle_update(X[w], X[a], dist[a], X[b], dist[b])
                else:
                    new = min(
                        dist[u] + np.hypot(*(X[w] - X[u])) for u in (a, b) if accepted[u]
                    )
                if new < dist[w]:
                    dist[w] = new
                    heapq.heappush(heap, (new, int(w)))
    if not accepted.all():
        missing = np.flatnonzero(~accepted)
        raise UnreachableVertexError(
            f"{len(missing)} vertices unreachable from the interface (first: {missing[0]})"
        )
    return dist, np.array(order)


def export_isolines(phi: DiscreteFunction, levels, path, stroke=None) -> None:
    """Write the given level lines of a P1 field as an SVG drawing."""
    if phi.space.degree != 1:
        raise ValueError("isoline export needs a P1 field")
    mesh = phi.space.mesh
    xmin, xmax, ymin, ymax = mesh.bounds()
    width, height = xmax - xmin, ymax - ymin
    sw = 0.0025 * width
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{xmin!r} {ymin!r} {width!r} {height!r}">',
        # flip y so that the picture is in math orientation
        f'<g transform="translate(0 {ymin + ymax!r}) scale(1 -1)">',
        f'<rect x="{xmin!r}" y="{ymin!r}" width="{width!r}" height="{height!r}" fill="none" '
        f'stroke="black" stroke-width="{sw!r}"/>',
    ]
    for i, level in enumerate(levels):
        a, b, _ = _contour_segments(mesh, phi.coeffs, float(level))
        d = " ".join(f"M{p[0]:.9g} {p[1]:.9g}L{q[0]:.9g} {q[1]:.9g}" for p, q in zip(a, b))
        color = stroke or colors[i % len(colors)]
        lines.append(
            f'<path data-level="{float(level)!r}" d="{d}" fill="none" stroke="{color}" stroke-width="{sw!r}"/>'
        )
    lines += ["</g>", "</svg>", ""]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))


def read_isolines(path) -> dict[float, np.ndarray]:
    """Parse an SVG written by :func:`export_isolines` into ``{level: (ns, 2, 2) segments}``."""
    import re
    import xml.etree.ElementTree as ET

    out = {}
    for el in ET.parse(path).getroot().iter("{http://www.w3.org/2000/svg}path"):
        nums = [float(t) for t in re.findall(r"[-+0-9.eE]+", el.get("d"))]
        out[float(el.get("data-level"))] = np.array(nums).reshape(-1, 2, 2)
    return out
