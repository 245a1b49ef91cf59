import numpy as np
import pytest

from hdgwg.mesh import (
    Mesh,
    build_structured_mesh,
    dump_mesh,
    edge_normal,
    uniform_refine,
)


def test_unit_counts():
    m = build_structured_mesh(1)
    assert m.num_vertices == 4
    assert m.num_cells == 2
    assert m.num_edges == 5
    assert len(m.boundary_edges) == 4
    assert len(m.interior_edges) == 1


def test_n2_counts_euler():
    m = build_structured_mesh(2)
    assert (m.num_vertices, m.num_cells, m.num_edges) == (9, 8, 16)
    assert m.num_vertices - m.num_edges + m.num_cells == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_euler_and_area(n):
    m = build_structured_mesh(n)
    assert m.num_vertices - m.num_edges + m.num_cells == 1
    assert abs(m.cell_area.sum() - 1.0) < 1e-13


def test_cell_diam_structured():
    m = build_structured_mesh(4)
    assert m.num_cells == 32
    assert np.allclose(m.cell_diam, np.sqrt(2.0) / 4.0)
    assert np.allclose(m.cell_size, 1.0 / 4.0)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        build_structured_mesh(0)
    with pytest.raises(ValueError):
        # clockwise cell
        Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
             np.array([[0, 2, 1]]))


def test_edge_normals_unit_and_boundary_outward():
    m = build_structured_mesh(1)
    for ei in range(m.num_edges):
        n = edge_normal(m, ei)
        assert abs(np.linalg.norm(n) - 1.0) < 1e-14
    # bottom boundary edge (0,0)-(1,0)
    for ei in m.boundary_edges:
        e = m.edges[ei]
        pa, pb = m.vertices[e.vertices[0]], m.vertices[e.vertices[1]]
        if np.allclose([pa[1], pb[1]], 0.0):
            assert np.allclose(e.normal, [0.0, -1.0])
    with pytest.raises(IndexError):
        edge_normal(m, m.num_edges)


def test_normal_is_first_cell_outward():
    m = build_structured_mesh(3)
    for ei in m.interior_edges:
        e = m.edges[ei]
        assert len(e.cells) == 2
        ci = e.cells[0]
        li = e.local_index[0]
        assert m.cell_edge_sign(ci, li) == 1.0
        assert m.cell_edge_sign(e.cells[1], e.local_index[1]) == -1.0
    for ei in m.boundary_edges:
        assert len(m.edges[ei].cells) == 1


def test_outward_normal_geometry():
    # the stored normal points away from the owning cell's centroid
    m = build_structured_mesh(2)
    for ei, e in enumerate(m.edges):
        ci = e.cells[0]
        centroid = m.vertices[m.cells[ci]].mean(axis=0)
        midpoint = 0.5 * (m.vertices[e.vertices[0]] + m.vertices[e.vertices[1]])
        assert (midpoint - centroid) @ e.normal > 0.0


def test_edge_length_bound():
    m = build_structured_mesh(3)
    for e in m.edges:
        hmax = max(m.cell_diam[c] for c in e.cells)
        assert e.length <= hmax + 1e-14


def test_shape_regularity():
    m = build_structured_mesh(2)
    for ci in range(m.num_cells):
        pts = m.vertices[m.cells[ci]]
        a = np.linalg.norm(pts[1] - pts[2])
        b = np.linalg.norm(pts[2] - pts[0])
        c = np.linalg.norm(pts[0] - pts[1])
        inradius = 2.0 * m.cell_area[ci] / (a + b + c)
        assert m.cell_diam[ci] / inradius <= 2.0 * (1.0 + np.sqrt(2.0)) + 1e-12


def test_uniform_refine_matches_build():
    r = uniform_refine(build_structured_mesh(1))
    b = build_structured_mesh(2)
    assert (r.num_cells, r.num_edges, r.num_vertices) == (8, 16, 9)
    assert abs(r.h_max - build_structured_mesh(1).h_max / 2.0) < 1e-14
    assert r.num_vertices - r.num_edges + r.num_cells == 1
    # same vertex sets up to renumbering
    rv = set(map(tuple, np.round(r.vertices, 12)))
    bv = set(map(tuple, np.round(b.vertices, 12)))
    assert rv == bv


def test_dump_mesh_format():
    m = build_structured_mesh(1)
    text = dump_mesh(m)
    lines = text.strip().split("\n")
    assert sum(1 for ln in lines if ln.startswith("v ")) == 4
    assert sum(1 for ln in lines if ln.startswith("c ")) == 2
    assert sum(1 for ln in lines if ln.startswith("e ")) == 5


def test_mesh_is_immutable():
    m = build_structured_mesh(2)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 7.0
    with pytest.raises(ValueError):
        m.cells[0, 0] = 5
