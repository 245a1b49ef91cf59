"""Assembly of the HDG/WG systems, their conforming limits, and norm Grams.

All matrices are accumulated symmetrically from per-cell dense blocks in
deterministic cell-then-local-index order, so A == A.T exactly and repeated
runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import basis
from .mesh import Mesh
from .spaces import SpaceCase, DofMap


@dataclass(frozen=True)
class CoefficientField:
    """Scalar diffusion coefficient alpha(x, y) > 0 and its inverse c."""

    alpha: Callable

    @staticmethod
    def unit():
        return CoefficientField(alpha=lambda xy: np.ones(len(xy)))

    def c_at(self, xy):
        a = np.asarray(self.alpha(xy), dtype=float)
        if np.any(a <= 0.0):
            raise ValueError("coefficient alpha must be strictly positive")
        return 1.0 / a


@dataclass
class LinearSystem:
    """Symmetric sparse system with labeled field blocks."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    blocks: dict


class ElementTables:
    """Per-mesh cache of mapped basis values at quadrature points.

    Volume quadrature points are shared by all cells; edge quadrature points
    are parametrized along the global edge (lower to higher vertex index) so
    the two sides of an interior edge see identical physical points.
    """

    def __init__(self, mesh: Mesh, case: SpaceCase, quad_degree=None):
        self.mesh = mesh
        self.case = case
        qd = quad_degree if quad_degree is not None else 2 * case.k + 2
        self.vol = basis.tri_quadrature(qd)
        self.edge = basis.edge_quadrature(qd)

        xy = self.vol.xy
        self.sval, self.sgrad_ref = basis.eval_scalar_basis(case.scalar_degree, xy)
        if case.flux_family == "rt":
            self.rtval_ref, self.rtdiv_ref = basis.eval_rt_basis(case.flux_degree, xy)
        else:
            fval, fgrad = basis.eval_scalar_basis(case.flux_degree, xy)
            self.fval_ref, self.fgrad_ref = fval, fgrad
            nq, nbs = fval.shape
            vec = np.zeros((nq, 2 * nbs, 2))
            vec[:, :nbs, 0] = fval
            vec[:, nbs:, 1] = fval
            self.vec_values = vec

        # reference coordinates of the edge quadrature points, one set per
        # (local edge, flipped) pair
        self._edge_ref = {}
        for li in range(3):
            a, b, _, _ = basis.REF_EDGES[li]
            for flip in (False, True):
                s = 1.0 - self.edge.points if flip else self.edge.points
                pts = a[None, :] + s[:, None] * (b - a)[None, :]
                sv, _ = basis.eval_scalar_basis(case.scalar_degree, pts)
                if case.flux_family == "rt":
                    fv, _ = basis.eval_rt_basis(case.flux_degree, pts)
                else:
                    fsv, _ = basis.eval_scalar_basis(case.flux_degree, pts)
                    nq, nbs = fsv.shape
                    fv = np.zeros((nq, 2 * nbs, 2))
                    fv[:, :nbs, 0] = fsv
                    fv[:, nbs:, 1] = fsv
                self._edge_ref[(li, flip)] = (sv, fv)
        self.trace_values = basis.eval_edge_basis(case.trace_deg, self.edge.points)

        self._geom = {}
        self._cell_cache = {}

    def geometry(self, ci):
        g = self._geom.get(ci)
        if g is None:
            p = self.mesh.vertices[self.mesh.cells[ci]]
            A = np.column_stack([p[1] - p[0], p[2] - p[0]])
            det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
            g = (A, p[0], det, np.linalg.inv(A))
            self._geom[ci] = g
        return g

    def cell(self, ci):
        """Volume tables: weights, points, scalar/flux values and derivatives."""
        t = self._cell_cache.get(ci)
        if t is not None:
            return t
        A, b0, det, invA = self.geometry(ci)
        w = self.vol.weights * det
        xy = self.vol.xy @ A.T + b0
        sgrad = self.sgrad_ref @ invA
        if self.case.flux_family == "rt":
            fval = self.rtval_ref @ (A.T / det)
            fdiv = self.rtdiv_ref / det
        else:
            fval = self.vec_values
            fg = self.fgrad_ref @ invA
            nbs = fg.shape[1]
            fdiv = np.concatenate([fg[:, :, 0], fg[:, :, 1]], axis=1)
            assert fdiv.shape[1] == 2 * nbs
        t = {"w": w, "xy": xy, "sval": self.sval, "sgrad": sgrad,
             "fval": fval, "fdiv": fdiv}
        self._cell_cache[ci] = t
        return t

    def cell_edge(self, ci, li):
        """Edge tables on the cell side: traces against the outward normal."""
        key = (ci, "e", li)
        t = self._cell_cache.get(key)
        if t is not None:
            return t
        mesh = self.mesh
        ei = mesh.cell_edges[ci, li]
        edge = mesh.edges[ei]
        local_start = int(mesh.cells[ci][(li + 1) % 3])
        flip = local_start != edge.vertices[0]
        sign = mesh.cell_edge_sign(ci, li)
        n_K = sign * edge.normal
        sv, fv = self._edge_ref[(li, flip)]
        A, b0, det, _ = self.geometry(ci)
        if self.case.flux_family == "rt":
            fphys = fv @ (A.T / det)
        else:
            fphys = fv
        fn = fphys @ n_K
        pa = mesh.vertices[edge.vertices[0]]
        pb = mesh.vertices[edge.vertices[1]]
        xy = pa[None, :] + self.edge.points[:, None] * (pb - pa)[None, :]
        t = {
            "edge": ei,
            "w": self.edge.weights * edge.length,
            "w_param": self.edge.weights,
            "xy": xy,
            "sval": sv,
            "flux_n": fn,
            "sign": sign,
            "trace": self.trace_values,
            "h_e": edge.length,
        }
        self._cell_cache[key] = t
        return t


class _Accumulator:
    """COO triplet accumulator with exact symmetric insertion."""

    def __init__(self, n):
        self.n = n
        self.rows = []
        self.cols = []
        self.vals = []

    def add(self, rdofs, cdofs, block, mirror=False, sym=False):
        block = np.asarray(block, dtype=float)
        if sym:
            # quadrature blocks are symmetric up to rounding; make it exact
            block = 0.5 * (block + block.T)
        r = np.repeat(rdofs, len(cdofs))
        c = np.tile(cdofs, len(rdofs))
        v = block.ravel()
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(v)
        if mirror:
            self.rows.append(c)
            self.cols.append(r)
            self.vals.append(v)

    def tocsr(self):
        if not self.rows:
            return sp.csr_matrix((self.n, self.n))
        r = np.concatenate(self.rows)
        c = np.concatenate(self.cols)
        v = np.concatenate(self.vals)
        # sum duplicates ourselves with a stable sort: mirrored triplets then
        # reduce in the same order on both sides of the diagonal, keeping the
        # assembled matrix bit-exactly symmetric
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        first = np.empty(len(r), dtype=bool)
        first[0] = True
        first[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
        starts = np.flatnonzero(first)
        sums = np.add.reduceat(v, starts)
        mat = sp.coo_matrix(
            (sums, (r[starts], c[starts])), shape=(self.n, self.n)
        )
        return mat.tocsr()


def _check(mesh, dofs, case):
    if dofs.case != case:
        raise ValueError("DofMap was built for a different SpaceCase")
    if dofs.num_cells != mesh.num_cells:
        raise ValueError("DofMap does not match the mesh")


def assemble_hdg(mesh, dofs, case, coeff, f, tables=None):
    """HDG saddle system for unknowns (flux p, scalar u, trace u-hat)."""
    if case.method != "hdg":
        raise ValueError("case.method must be 'hdg'")
    _check(mesh, dofs, case)
    et = tables or ElementTables(mesh, case)
    acc = _Accumulator(dofs.total)
    rhs = np.zeros(dofs.total)
    for ci in range(mesh.num_cells):
        t = et.cell(ci)
        w, xy = t["w"], t["xy"]
        cvals = coeff.c_at(xy)
        pd = dofs.cell_flux_dofs(ci)
        ud = dofs.cell_scalar_dofs(ci)
        acc.add(pd, pd, np.einsum("q,qac,qbc->ab", w * cvals, t["fval"], t["fval"]),
                sym=True)
        acc.add(pd, ud, -np.einsum("q,qa,qb->ab", w, t["fdiv"], t["sval"]),
                mirror=True)
        rhs[ud] -= (w * f(xy)) @ t["sval"]
        tau = case.stabilization(mesh.cell_size[ci])
        for li in range(3):
            e = et.cell_edge(ci, li)
            we = e["w"]
            td = dofs.edge_trace_dofs(e["edge"])
            if td is not None:
                acc.add(pd, td, np.einsum("q,qa,qt->at", we, e["flux_n"], e["trace"]),
                        mirror=True)
            acc.add(ud, ud, -tau * np.einsum("q,qa,qb->ab", we, e["sval"], e["sval"]),
                    sym=True)
            if td is not None:
                acc.add(ud, td,
                        tau * np.einsum("q,qa,qt->at", we, e["sval"], e["trace"]),
                        mirror=True)
                acc.add(td, td,
                        -tau * np.einsum("q,qs,qt->st", we, e["trace"], e["trace"]),
                        sym=True)
    return LinearSystem(matrix=acc.tocsr(), rhs=rhs, blocks=dofs.blocks)


def assemble_wg(mesh, dofs, case, coeff, f, tables=None):
    """WG saddle system for unknowns (flux p, scalar u, trace p-hat)."""
    if case.method != "wg":
        raise ValueError("case.method must be 'wg'")
    _check(mesh, dofs, case)
    et = tables or ElementTables(mesh, case)
    acc = _Accumulator(dofs.total)
    rhs = np.zeros(dofs.total)
    for ci in range(mesh.num_cells):
        t = et.cell(ci)
        w, xy = t["w"], t["xy"]
        cvals = coeff.c_at(xy)
        pd = dofs.cell_flux_dofs(ci)
        ud = dofs.cell_scalar_dofs(ci)
        acc.add(pd, pd, np.einsum("q,qac,qbc->ab", w * cvals, t["fval"], t["fval"]),
                sym=True)
        # b_w volume part (q, grad v)
        acc.add(pd, ud, np.einsum("q,qac,qbc->ab", w, t["fval"], t["sgrad"]),
                mirror=True)
        rhs[ud] -= (w * f(xy)) @ t["sval"]
        eta = case.stabilization(mesh.cell_size[ci])
        for li in range(3):
            e = et.cell_edge(ci, li)
            we, sign = e["w"], e["sign"]
            td = dofs.edge_trace_dofs(e["edge"])
            # b_w edge part -<sigma q-hat, v>
            acc.add(td, ud,
                    -sign * np.einsum("q,qt,qb->tb", we, e["trace"], e["sval"]),
                    mirror=True)
            # stabilization eta <(p - p-hat n_e).n_K, (q - q-hat n_e).n_K>
            acc.add(pd, pd, eta * np.einsum("q,qa,qb->ab", we, e["flux_n"],
                                            e["flux_n"]), sym=True)
            acc.add(pd, td,
                    -eta * sign * np.einsum("q,qa,qt->at", we, e["flux_n"],
                                            e["trace"]),
                    mirror=True)
            acc.add(td, td, eta * np.einsum("q,qs,qt->st", we, e["trace"],
                                            e["trace"]), sym=True)
    return LinearSystem(matrix=acc.tocsr(), rhs=rhs, blocks=dofs.blocks)


class PrimalDofMap:
    """Broken vector P_k flux plus continuous P_{k+1} scalar with zero trace.

    Scalar local-to-global follows the lattice node ordering of the basis;
    boundary nodes are eliminated (entry -1).
    """

    def __init__(self, mesh, k):
        if k < 0:
            raise ValueError("polynomial degree k must be >= 0")
        self.k = k
        self.degree = k + 1
        self.flux_per_cell = 2 * basis.scalar_dim(k)
        self.flux_total = mesh.num_cells * self.flux_per_cell
        d = self.degree
        boundary_vertices = set()
        for ei in mesh.boundary_edges:
            boundary_vertices.update(mesh.edges[ei].vertices)
        vmap = np.full(mesh.num_vertices, -1, dtype=np.int64)
        nxt = 0
        for v in range(mesh.num_vertices):
            if v not in boundary_vertices:
                vmap[v] = nxt
                nxt += 1
        per_edge = d - 1
        emap = np.full(mesh.num_edges, -1, dtype=np.int64)
        for ei in mesh.interior_edges:
            emap[ei] = nxt
            nxt += per_edge
        per_cell_int = basis.scalar_dim(d) - 3 - 3 * per_edge
        cell_int_start = nxt
        nxt += mesh.num_cells * per_cell_int
        self.scalar_total = nxt

        nb = basis.scalar_dim(d)
        l2g = np.full((mesh.num_cells, nb), -1, dtype=np.int64)
        for ci in range(mesh.num_cells):
            cell = mesh.cells[ci]
            for lv in range(3):
                l2g[ci, lv] = vmap[cell[lv]]
            pos = 3
            for li in range(3):
                ei = mesh.cell_edges[ci, li]
                base = emap[ei]
                local_start = int(cell[(li + 1) % 3])
                flip = local_start != mesh.edges[ei].vertices[0]
                for j in range(per_edge):
                    if base >= 0:
                        idx = (per_edge - 1 - j) if flip else j
                        l2g[ci, pos] = base + idx
                    pos += 1
            for j in range(per_cell_int):
                l2g[ci, pos] = cell_int_start + ci * per_cell_int + j
                pos += 1
        self.scalar_l2g = l2g
        self.total = self.flux_total + self.scalar_total
        self.blocks = {
            "flux": slice(0, self.flux_total),
            "scalar": slice(self.flux_total, self.total),
        }

    def cell_flux_dofs(self, ci):
        start = ci * self.flux_per_cell
        return np.arange(start, start + self.flux_per_cell)


def assemble_primal_conforming(mesh, k, coeff, f):
    """Primal conforming method: (c p, q) + (grad u, q) = 0, -(p, grad v) = (f, v)."""
    dofs = PrimalDofMap(mesh, k)
    d = dofs.degree
    quad = basis.tri_quadrature(2 * d + 1)
    sval, sgrad_ref = basis.eval_scalar_basis(d, quad.xy)
    fval_ref, _ = basis.eval_scalar_basis(k, quad.xy)
    nbs = fval_ref.shape[1]
    acc = _Accumulator(dofs.total)
    rhs = np.zeros(dofs.total)
    for ci in range(mesh.num_cells):
        p = mesh.vertices[mesh.cells[ci]]
        A = np.column_stack([p[1] - p[0], p[2] - p[0]])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        invA = np.linalg.inv(A)
        w = quad.weights * det
        xy = quad.xy @ A.T + p[0]
        cvals = coeff.c_at(xy)
        sgrad = sgrad_ref @ invA
        pd = dofs.cell_flux_dofs(ci)
        # flux mass: component-major vector P_k basis
        mass = np.einsum("q,qa,qb->ab", w * cvals, fval_ref, fval_ref)
        for comp in range(2):
            acc.add(pd[comp * nbs:(comp + 1) * nbs],
                    pd[comp * nbs:(comp + 1) * nbs], mass, sym=True)
        g = dofs.scalar_l2g[ci]
        keep = g >= 0
        gd = dofs.flux_total + g[keep]
        for comp in range(2):
            block = np.einsum("q,qa,qb->ab", w, fval_ref, sgrad[:, :, comp])
            acc.add(pd[comp * nbs:(comp + 1) * nbs], gd, block[:, keep],
                    mirror=True)
        rhs[gd] -= (w * f(xy)) @ sval[:, keep]
    return LinearSystem(matrix=acc.tocsr(), rhs=rhs, blocks=dofs.blocks), dofs


class MixedDofMap:
    """H(div)-conforming RT_k flux (shared edge moments) plus broken P_k scalar."""

    def __init__(self, mesh, k):
        if k not in (0, 1):
            raise ValueError("mixed conforming method supports k in {0, 1}")
        self.k = k
        self.per_edge = k + 1
        self.per_cell_int = k * (k + 1)
        self.flux_edge_total = mesh.num_edges * self.per_edge
        self.flux_total = self.flux_edge_total + mesh.num_cells * self.per_cell_int
        self.scalar_per_cell = basis.scalar_dim(k)
        self.total = self.flux_total + mesh.num_cells * self.scalar_per_cell
        self.blocks = {
            "flux": slice(0, self.flux_total),
            "scalar": slice(self.flux_total, self.total),
        }

    def cell_flux_map(self, mesh, ci):
        """Global flux DOFs and orientation signs for the local RT basis."""
        idx = np.empty(3 * self.per_edge + self.per_cell_int, dtype=np.int64)
        sgn = np.empty_like(idx, dtype=float)
        pos = 0
        cell = mesh.cells[ci]
        for li in range(3):
            ei = mesh.cell_edges[ci, li]
            edge = mesh.edges[ei]
            sigma = mesh.cell_edge_sign(ci, li)
            local_start = int(cell[(li + 1) % 3])
            flip = local_start != edge.vertices[0]
            for m in range(self.per_edge):
                idx[pos] = ei * self.per_edge + m
                sgn[pos] = sigma * ((-1.0) ** m if flip else 1.0)
                pos += 1
        base = self.flux_edge_total + ci * self.per_cell_int
        for j in range(self.per_cell_int):
            idx[pos] = base + j
            sgn[pos] = 1.0
            pos += 1
        return idx, sgn

    def cell_scalar_dofs(self, ci):
        start = self.flux_total + ci * self.scalar_per_cell
        return np.arange(start, start + self.scalar_per_cell)


def assemble_mixed_conforming(mesh, k, coeff, f):
    """Mixed conforming method: (c p, q) - (u, div q) = 0, (div p, v) = (f, v)."""
    dofs = MixedDofMap(mesh, k)
    quad = basis.tri_quadrature(2 * k + 2)
    rtval_ref, rtdiv_ref = basis.eval_rt_basis(k, quad.xy)
    sval, _ = basis.eval_scalar_basis(k, quad.xy)
    acc = _Accumulator(dofs.total)
    rhs = np.zeros(dofs.total)
    for ci in range(mesh.num_cells):
        p = mesh.vertices[mesh.cells[ci]]
        A = np.column_stack([p[1] - p[0], p[2] - p[0]])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        w = quad.weights * det
        xy = quad.xy @ A.T + p[0]
        cvals = coeff.c_at(xy)
        fval = rtval_ref @ (A.T / det)
        fdiv = rtdiv_ref / det
        idx, sgn = dofs.cell_flux_map(mesh, ci)
        mass = np.einsum("q,qac,qbc->ab", w * cvals, fval, fval)
        acc.add(idx, idx, sgn[:, None] * mass * sgn[None, :], sym=True)
        div_block = np.einsum("q,qa,qb->ab", w, fdiv, sval)
        ud = dofs.cell_scalar_dofs(ci)
        acc.add(idx, ud, -sgn[:, None] * div_block, mirror=True)
        rhs[ud] -= (w * f(xy)) @ sval
    return LinearSystem(matrix=acc.tocsr(), rhs=rhs, blocks=dofs.blocks), dofs


_KIND_FOR_CASE = {
    ("hdg", "rho_h"): "hdg_div",
    ("hdg", "inv"): "hdg_grad",
    ("wg", "rho_h"): "wg_grad",
    ("wg", "inv"): "wg_div",
}


def norm_kind_for_case(case):
    return _KIND_FOR_CASE[(case.method, case.regime)]


def assemble_norm_gram(mesh, dofs, norm_kind, rho, coeff=None, tables=None):
    """Gram matrix N of the parameter-dependent norm pair: x'Nx = |x|^2."""
    case = dofs.case
    if norm_kind != norm_kind_for_case(case):
        raise ValueError(
            "norm kind {!r} does not match the {}/{} space triple".format(
                norm_kind, case.method, case.regime
            )
        )
    coeff = coeff or CoefficientField.unit()
    et = tables or ElementTables(mesh, case)
    acc = _Accumulator(dofs.total)
    nq_edge = len(et.edge.points)
    ntr = case.trace_deg + 1

    for ci in range(mesh.num_cells):
        t = et.cell(ci)
        w, xy = t["w"], t["xy"]
        cvals = coeff.c_at(xy)
        pd = dofs.cell_flux_dofs(ci)
        ud = dofs.cell_scalar_dofs(ci)
        h_K = mesh.cell_size[ci]
        acc.add(pd, pd, np.einsum("q,qac,qbc->ab", w * cvals, t["fval"], t["fval"]),
                sym=True)
        if norm_kind in ("hdg_div", "wg_div"):
            acc.add(pd, pd, np.einsum("q,qa,qb->ab", w, t["fdiv"], t["fdiv"]),
                    sym=True)
        if norm_kind in ("hdg_div", "wg_div"):
            acc.add(ud, ud, np.einsum("q,qa,qb->ab", w, t["sval"], t["sval"]),
                    sym=True)
        else:
            acc.add(ud, ud,
                    np.einsum("q,qac,qbc->ab", w, t["sgrad"], t["sgrad"]),
                    sym=True)
        if norm_kind == "hdg_grad":
            coef = 1.0 / (rho * h_K)
            for li in range(3):
                e = et.cell_edge(ci, li)
                we = e["w"]
                td = dofs.edge_trace_dofs(e["edge"])
                acc.add(ud, ud,
                        coef * np.einsum("q,qa,qb->ab", we, e["sval"], e["sval"]),
                        sym=True)
                if td is not None:
                    acc.add(ud, td,
                            -coef * np.einsum("q,qa,qt->at", we, e["sval"],
                                              e["trace"]),
                            mirror=True)
                    acc.add(td, td,
                            coef * np.einsum("q,qs,qt->st", we, e["trace"],
                                             e["trace"]), sym=True)
        if norm_kind in ("wg_grad", "wg_div"):
            coef = rho * h_K if norm_kind == "wg_grad" else 1.0 / (rho * h_K)
            for li in range(3):
                e = et.cell_edge(ci, li)
                we, sign = e["w"], e["sign"]
                td = dofs.edge_trace_dofs(e["edge"])
                acc.add(pd, pd,
                        coef * np.einsum("q,qa,qb->ab", we, e["flux_n"],
                                         e["flux_n"]), sym=True)
                acc.add(pd, td,
                        -coef * sign * np.einsum("q,qa,qt->at", we, e["flux_n"],
                                                 e["trace"]),
                        mirror=True)
                acc.add(td, td,
                        coef * np.einsum("q,qs,qt->st", we, e["trace"],
                                         e["trace"]), sym=True)

    if norm_kind == "hdg_div":
        # scalar trace term rho h_e <v-hat, v-hat>_e = rho h_e^2 (coefficients)
        for ei in dofs.trace_edges:
            td = dofs.edge_trace_dofs(ei)
            h_e = mesh.edges[ei].length
            acc.add(td, td, rho * h_e * h_e * np.eye(ntr))
        # projected normal-jump term rho^{-1} h_e^{-1} <P[q], P[q]>
        _add_flux_jump_gram(acc, mesh, dofs, et, 1.0 / rho)
    if norm_kind == "wg_grad":
        _add_scalar_jump_gram(acc, mesh, dofs, et, 1.0 / rho)
    return acc.tocsr()


def _edge_sides(mesh, ei):
    edge = mesh.edges[ei]
    return list(zip(edge.cells, edge.local_index))


def _add_flux_jump_gram(acc, mesh, dofs, et, coef):
    """Accumulate coef * sum_m mu_m^2 with mu_m the parametric moments of [q].

    Equals coef * h_e^{-1} <P_e[q], P_e[q]>_e for the L^2(e) projection onto
    the trace space.
    """
    for ei in mesh.interior_edges:
        rows = []
        dof_list = []
        for ci, li in _edge_sides(mesh, ei):
            e = et.cell_edge(ci, li)
            # moments of q.n_K against the orthonormal trace basis
            rows.append(np.einsum("q,qt,qa->ta", e["w_param"], e["trace"],
                                  e["flux_n"]))
            dof_list.append(dofs.cell_flux_dofs(ci))
        J = np.concatenate(rows, axis=1)
        gd = np.concatenate(dof_list)
        acc.add(gd, gd, coef * (J.T @ J), sym=True)


def _add_scalar_jump_gram(acc, mesh, dofs, et, coef):
    """Same moment construction for the scalar jump [v] (all edges)."""
    for ei in range(mesh.num_edges):
        rows = []
        dof_list = []
        for side, (ci, li) in enumerate(_edge_sides(mesh, ei)):
            e = et.cell_edge(ci, li)
            jump_sign = 1.0 if side == 0 else -1.0
            rows.append(jump_sign * np.einsum("q,qt,qa->ta", e["w_param"],
                                              e["trace"], e["sval"]))
            dof_list.append(dofs.cell_scalar_dofs(ci))
        J = np.concatenate(rows, axis=1)
        gd = np.concatenate(dof_list)
        acc.add(gd, gd, coef * (J.T @ J), sym=True)
