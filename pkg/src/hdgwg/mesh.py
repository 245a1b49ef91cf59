"""Structured triangulations of the unit square with full edge connectivity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Edge:
    """Oriented mesh edge.

    The normal is fixed once at construction: for interior edges it is the
    outward normal of the first (lower-indexed) incident cell, for boundary
    edges the domain-outward normal.
    """

    vertices: tuple[int, int]
    normal: np.ndarray
    length: float
    boundary: bool
    cells: tuple[int, ...]
    local_index: tuple[int, ...]


class Mesh:
    """Immutable triangulation of the unit square.

    Cells are counterclockwise vertex triples.  Local edge ``i`` of a cell is
    the edge opposite local vertex ``i``.
    """

    def __init__(self, vertices, cells):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        self.vertices.setflags(write=False)
        self.cells.setflags(write=False)

        a = self.vertices[self.cells[:, 0]]
        b = self.vertices[self.cells[:, 1]]
        c = self.vertices[self.cells[:, 2]]
        u, v = b - a, c - a
        self.cell_area = 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        if np.any(self.cell_area <= 0.0):
            raise ValueError("cells must be counterclockwise with positive area")
        # scale-equivalent cell size used by the stabilization weights
        self.cell_size = np.sqrt(2.0 * self.cell_area)
        self.cell_diam = np.maximum.reduce(
            [
                np.linalg.norm(b - c, axis=1),
                np.linalg.norm(c - a, axis=1),
                np.linalg.norm(a - b, axis=1),
            ]
        )
        self.edges, self.cell_edges = _build_edges(self.vertices, self.cells)
        self.cell_edges.setflags(write=False)
        self.interior_edges = [
            i for i, e in enumerate(self.edges) if not e.boundary
        ]
        self.boundary_edges = [i for i, e in enumerate(self.edges) if e.boundary]

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_cells(self):
        return self.cells.shape[0]

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def h_max(self):
        return float(self.cell_diam.max())

    def cell_edge_sign(self, ci, li):
        """+1 if the cell-outward normal on local edge equals the edge normal."""
        edge = self.edges[self.cell_edges[ci, li]]
        return 1.0 if edge.cells[0] == ci else -1.0

    def __repr__(self):
        return "Mesh(vertices={}, cells={}, edges={})".format(
            self.num_vertices, self.num_cells, self.num_edges
        )


def _build_edges(vertices, cells):
    """Derive edge records from cell connectivity.

    Edges are discovered in cell order, so the owner (first incident cell)
    of an interior edge is always the lower-indexed one.
    """
    index = {}
    edges = []
    cell_edges = np.empty((cells.shape[0], 3), dtype=np.int64)
    records = []
    for ci, cell in enumerate(cells):
        for li in range(3):
            va, vb = int(cell[(li + 1) % 3]), int(cell[(li + 2) % 3])
            key = (va, vb) if va < vb else (vb, va)
            if key in index:
                ei = index[key]
                records[ei][0].append(ci)
                records[ei][1].append(li)
                cell_edges[ci, li] = ei
            else:
                ei = len(records)
                index[key] = ei
                records.append(([ci], [li], key, (va, vb)))
                cell_edges[ci, li] = ei
    for owners, locals_, key, oriented in records:
        pa, pb = vertices[oriented[0]], vertices[oriented[1]]
        tangent = pb - pa
        length = float(np.linalg.norm(tangent))
        # Traversed in cell order the edge keeps the owner on its left, so the
        # right-hand rotation of the tangent is the owner-outward normal.
        normal = np.array([tangent[1], -tangent[0]]) / length
        normal.setflags(write=False)
        edges.append(
            Edge(
                vertices=key,
                normal=normal,
                length=length,
                boundary=len(owners) == 1,
                cells=tuple(owners),
                local_index=tuple(locals_),
            )
        )
    return edges, cell_edges


def build_structured_mesh(n):
    """Triangulate the unit square into ``2 n^2`` right triangles.

    Each of the ``n x n`` subsquares is split by the diagonal running from
    its lower-left to its upper-right corner.
    """
    if n < 1:
        raise ValueError("n must be a positive integer, got {}".format(n))
    xs = np.arange(n + 1) / n
    xv, yv = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([xv.ravel(), yv.ravel()])
    cells = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b = a + 1
            c = b + (n + 1)
            d = a + (n + 1)
            cells.append((a, b, c))
            cells.append((a, c, d))
    return Mesh(vertices, np.array(cells, dtype=np.int64))


def uniform_refine(mesh):
    """Split every triangle into 4 congruent children via edge midpoints."""
    vertices = [mesh.vertices]
    midpoint = np.empty(mesh.num_edges, dtype=np.int64)
    next_id = mesh.num_vertices
    mids = []
    for ei, edge in enumerate(mesh.edges):
        pa, pb = mesh.vertices[edge.vertices[0]], mesh.vertices[edge.vertices[1]]
        mids.append(0.5 * (pa + pb))
        midpoint[ei] = next_id
        next_id += 1
    vertices.append(np.array(mids))
    cells = []
    for ci, cell in enumerate(mesh.cells):
        v0, v1, v2 = (int(v) for v in cell)
        m0 = midpoint[mesh.cell_edges[ci, 0]]
        m1 = midpoint[mesh.cell_edges[ci, 1]]
        m2 = midpoint[mesh.cell_edges[ci, 2]]
        cells.extend([(v0, m2, m1), (v1, m0, m2), (v2, m1, m0), (m0, m1, m2)])
    return Mesh(np.vstack(vertices), np.array(cells, dtype=np.int64))


def edge_normal(mesh, e):
    """Fixed unit normal of edge ``e`` (outward for boundary edges)."""
    if not 0 <= e < mesh.num_edges:
        raise IndexError("edge index {} out of range".format(e))
    return mesh.edges[e].normal


def dump_mesh(mesh):
    """Plain-text mesh dump: ``v x y`` / ``c i j k`` / ``e i j`` lines."""
    lines = []
    for x, y in mesh.vertices:
        lines.append("v {:.17g} {:.17g}".format(x, y))
    for i, j, k in mesh.cells:
        lines.append("c {} {} {}".format(i, j, k))
    for edge in mesh.edges:
        lines.append("e {} {}".format(*edge.vertices))
    return "\n".join(lines) + "\n"
