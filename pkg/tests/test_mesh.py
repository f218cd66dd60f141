import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tikhcurv.mesh import Mesh, Pattern, build_rect_mesh, h_max, scale_mesh

patterns = st.sampled_from([Pattern.CROSSED, Pattern.DIAGONAL])


@st.composite
def rect_meshes(draw):
    x0 = draw(st.floats(-5, 5))
    y0 = draw(st.floats(-5, 5))
    w = draw(st.floats(0.1, 10))
    h = draw(st.floats(0.1, 10))
    nx = draw(st.integers(1, 7))
    ny = draw(st.integers(1, 7))
    return build_rect_mesh(x0, x0 + w, y0, y0 + h, nx, ny, draw(patterns)), w * h


def test_single_square_counts():
    m = build_rect_mesh(0, 1, 0, 1, 1, 1, Pattern.CROSSED)
    assert (m.n_vertices, m.n_cells) == (5, 4)
    m = build_rect_mesh(0, 1, 0, 1, 1, 1, Pattern.DIAGONAL)
    assert (m.n_vertices, m.n_cells) == (4, 2)


def test_crossed_16_area():
    m = build_rect_mesh(-1, 1, -1, 1, 16, 16, Pattern.CROSSED)
    assert m.n_cells == 1024
    assert abs(m.areas.sum() - 4.0) < 1e-12


def test_vertex_numbering_row_major_then_centers():
    m = build_rect_mesh(0, 2, 0, 1, 2, 1, Pattern.CROSSED)
    np.testing.assert_allclose(m.vertices[:6], [[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1]])
    np.testing.assert_allclose(m.vertices[6:], [[0.5, 0.5], [1.5, 0.5]])


def test_diagonal_runs_bottom_left_to_top_right():
    m = build_rect_mesh(0, 1, 0, 1, 1, 1, Pattern.DIAGONAL)
    edges = {tuple(sorted(map(tuple, m.vertices[e]))) for e in m.edges}
    assert ((0.0, 0.0), (1.0, 1.0)) in edges
    assert ((0.0, 1.0), (1.0, 0.0)) not in edges


@pytest.mark.parametrize("args", [(0, 1, 0, 1, 0, 1), (0, 1, 0, 1, 1, -2), (1, 1, 0, 1, 1, 1), (0, 1, 2, 1, 1, 1)])
def test_rejects_bad_input(args):
    with pytest.raises(ValueError):
        build_rect_mesh(*args)


@settings(max_examples=40, deadline=None)
@given(rect_meshes())
def test_mesh_invariants(mesh_area):
    m, area = mesh_area
    assert np.all(m.areas > 0)
    assert math.isclose(m.areas.sum(), area, rel_tol=1e-10)
    nu = m.boundary_normals
    np.testing.assert_allclose(np.linalg.norm(nu, axis=1), 1.0, atol=1e-12)
    a, b = m.facet_vertices()
    centroid = m.vertices[m.cells[m.boundary_facets[:, 0]]].mean(axis=1)
    assert np.all(np.einsum("fi,fi->f", nu, 0.5 * (a + b) - centroid) > 0)
    # axis aligned
    assert np.all(np.isclose(np.abs(nu), 0.0, atol=1e-12).sum(axis=1) == 1)
    counts = m.edge_cell_counts
    assert set(np.unique(counts)) <= {1, 2}
    assert (counts == 1).sum() == len(m.boundary_facets)


def test_h_max_unit_square():
    assert math.isclose(h_max(build_rect_mesh(0, 1, 0, 1, 1, 1, Pattern.DIAGONAL)), math.sqrt(2), rel_tol=1e-14)
    assert math.isclose(h_max(build_rect_mesh(0, 1, 0, 1, 1, 1, Pattern.CROSSED)), 1.0, rel_tol=1e-14)


def test_h_max_matches_edge_scan():
    m = build_rect_mesh(-11, 11, -11, 11, 64, 64, Pattern.CROSSED)
    brute = max(
        np.linalg.norm(m.vertices[c[i]] - m.vertices[c[j]]) for c in m.cells for i, j in ((0, 1), (1, 2), (2, 0))
    )
    assert h_max(m) == pytest.approx(brute, rel=1e-14)
    assert h_max(m) == pytest.approx(22 / 64, rel=1e-14)


def test_scale_mesh():
    m = build_rect_mesh(0, 1, 0, 1, 3, 2, Pattern.CROSSED)
    same = scale_mesh(m, 1.0)
    np.testing.assert_array_equal(same.vertices, m.vertices)
    assert math.isclose(h_max(scale_mesh(m, 2.0)), 2 * h_max(m), rel_tol=1e-14)
    unit = scale_mesh(m, 1.0 / h_max(m))
    assert abs(h_max(unit) - 1.0) < 1e-12
    np.testing.assert_array_equal(unit.cells, m.cells)
    np.testing.assert_array_equal(unit.boundary_normals, m.boundary_normals)
    assert unit.pattern == m.pattern
    for r in (0.0, -1.0):
        with pytest.raises(ValueError):
            scale_mesh(m, r)


@settings(max_examples=30, deadline=None)
@given(rect_meshes(), st.floats(1e-3, 1e3))
def test_scale_roundtrip(mesh_area, r):
    m, _ = mesh_area
    back = scale_mesh(scale_mesh(m, r), 1.0 / r)
    np.testing.assert_allclose(back.vertices, m.vertices, atol=1e-12 * max(1.0, np.abs(m.vertices).max()))


def test_from_cells_fixes_orientation():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    m = Mesh.from_cells(verts, np.array([[0, 2, 1]]))
    assert m.areas[0] == pytest.approx(0.5)


def test_locate_and_outside():
    m = build_rect_mesh(0, 1, 0, 1, 4, 4, Pattern.CROSSED)
    cells, bary = m.locate(np.array([[0.3, 0.7], [1.0, 1.0]]))
    np.testing.assert_allclose(bary.sum(axis=1), 1.0)
    x = np.einsum("pk,pki->pi", bary, m.vertices[m.cells[cells]])
    np.testing.assert_allclose(x, [[0.3, 0.7], [1.0, 1.0]], atol=1e-14)
    with pytest.raises(ValueError, match="1.5"):
        m.locate(np.array([[1.5, 0.2]]))


def test_write_text(tmp_path):
    m = build_rect_mesh(0, 1, 0, 1, 1, 1, Pattern.DIAGONAL)
    p = tmp_path / "m.txt"
    m.write_text(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "vertices 4 cells 2"
    assert len(lines) == 1 + 4 + 2
    assert [int(t) for t in lines[5].split()] == list(m.cells[0])
