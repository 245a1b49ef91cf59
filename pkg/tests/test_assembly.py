import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from hdgwg import basis, norms
from hdgwg.assembly import (
    CoefficientField,
    assemble_hdg,
    assemble_mixed_conforming,
    assemble_norm_gram,
    assemble_primal_conforming,
    assemble_wg,
    norm_kind_for_case,
    MixedDofMap,
    PrimalDofMap,
)
from hdgwg.linalg import solve_symmetric_indefinite
from hdgwg.mesh import build_structured_mesh
from hdgwg.spaces import SpaceCase, build_space_triple

ZERO = lambda xy: np.zeros(len(xy))
ONE = lambda xy: np.ones(len(xy))


def _edge_data(mesh, ci, li, s):
    ei = mesh.cell_edges[ci, li]
    edge = mesh.edges[ei]
    pts = norms._edge_ref_points(li, norms._side_flip(mesh, ci, li), s)
    sign = mesh.cell_edge_sign(ci, li)
    return ei, edge, pts, sign


def hdg_form_oracle(mesh, dofs, case, coeff, xa, xb):
    """Pairwise evaluation of the HDG bilinear form by fresh quadrature.

    The rule degree matches the assembler's default so non-polynomial
    coefficients integrate to the identical quadrature sum.
    """
    tri = basis.tri_quadrature(2 * case.k + 2)
    eq = basis.edge_quadrature(2 * case.k + 2)
    total = 0.0
    for ci in range(mesh.num_cells):
        A, b0, det, _ = norms._geometry(mesh, ci)
        w = tri.weights * det
        xy = tri.xy @ A.T + b0
        pa, dpa = norms._flux_on_cell(mesh, dofs, xa, ci, tri.xy)
        pb, dpb = norms._flux_on_cell(mesh, dofs, xb, ci, tri.xy)
        ua, _ = norms._scalar_on_cell(mesh, dofs, xa, ci, tri.xy)
        ub, _ = norms._scalar_on_cell(mesh, dofs, xb, ci, tri.xy)
        c = coeff.c_at(xy)
        total += np.einsum("q,qc,qc->", w * c, pa, pb)
        total -= w @ (ua * dpb) + w @ (ub * dpa)
        tau = case.stabilization(mesh.cell_size[ci])
        for li in range(3):
            ei, edge, pts, sign = _edge_data(mesh, ci, li, eq.points)
            n_K = sign * edge.normal
            qa, _ = norms._flux_on_cell(mesh, dofs, xa, ci, pts)
            qb, _ = norms._flux_on_cell(mesh, dofs, xb, ci, pts)
            va, _ = norms._scalar_on_cell(mesh, dofs, xa, ci, pts)
            vb, _ = norms._scalar_on_cell(mesh, dofs, xb, ci, pts)
            td = dofs.edge_trace_dofs(ei)
            tv = basis.eval_edge_basis(case.trace_deg, eq.points)
            hata = tv @ xa[td] if td is not None else np.zeros(len(eq.points))
            hatb = tv @ xb[td] if td is not None else np.zeros(len(eq.points))
            we = eq.weights * edge.length
            total += we @ (hata * (qb @ n_K)) + we @ (hatb * (qa @ n_K))
            total -= tau * (we @ ((va - hata) * (vb - hatb)))
    return total


def wg_form_oracle(mesh, dofs, case, coeff, xa, xb):
    """Pairwise evaluation of the WG bilinear form by fresh quadrature."""
    tri = basis.tri_quadrature(2 * case.k + 2)
    eq = basis.edge_quadrature(2 * case.k + 2)
    total = 0.0
    for ci in range(mesh.num_cells):
        A, b0, det, _ = norms._geometry(mesh, ci)
        w = tri.weights * det
        xy = tri.xy @ A.T + b0
        pa, _ = norms._flux_on_cell(mesh, dofs, xa, ci, tri.xy)
        pb, _ = norms._flux_on_cell(mesh, dofs, xb, ci, tri.xy)
        _, gua = norms._scalar_on_cell(mesh, dofs, xa, ci, tri.xy)
        _, gub = norms._scalar_on_cell(mesh, dofs, xb, ci, tri.xy)
        c = coeff.c_at(xy)
        total += np.einsum("q,qc,qc->", w * c, pa, pb)
        total += np.einsum("q,qc,qc->", w, pa, gub)
        total += np.einsum("q,qc,qc->", w, pb, gua)
        eta = case.stabilization(mesh.cell_size[ci])
        for li in range(3):
            ei, edge, pts, sign = _edge_data(mesh, ci, li, eq.points)
            n_K = sign * edge.normal
            qa, _ = norms._flux_on_cell(mesh, dofs, xa, ci, pts)
            qb, _ = norms._flux_on_cell(mesh, dofs, xb, ci, pts)
            va, _ = norms._scalar_on_cell(mesh, dofs, xa, ci, pts)
            vb, _ = norms._scalar_on_cell(mesh, dofs, xb, ci, pts)
            tv = basis.eval_edge_basis(case.trace_deg, eq.points)
            hata = tv @ xa[dofs.edge_trace_dofs(ei)]
            hatb = tv @ xb[dofs.edge_trace_dofs(ei)]
            we = eq.weights * edge.length
            total -= sign * (we @ (hata * vb) + we @ (hatb * va))
            da = qa @ n_K - sign * hata
            db = qb @ n_K - sign * hatb
            total += eta * (we @ (da * db))
    return total


def rhs_oracle(mesh, dofs, f, x, quad_degree=8):
    tri = basis.tri_quadrature(quad_degree)
    total = 0.0
    for ci in range(mesh.num_cells):
        A, b0, det, _ = norms._geometry(mesh, ci)
        xy = tri.xy @ A.T + b0
        v, _ = norms._scalar_on_cell(mesh, dofs, x, ci, tri.xy)
        total -= (tri.weights * det) @ (f(xy) * v)
    return total


@pytest.mark.parametrize("method,regime", [("hdg", "rho_h"), ("hdg", "inv")])
def test_hdg_matrix_against_oracle(method, regime):
    mesh = build_structured_mesh(1)
    case = SpaceCase(method, regime, 0, 0.7)
    dofs = build_space_triple(mesh, case)
    coeff = CoefficientField(alpha=lambda xy: 1.0 + 0.5 * xy[:, 0])
    f = lambda xy: xy[:, 0] + 2.0 * xy[:, 1]
    sys = assemble_hdg(mesh, dofs, case, coeff, f)
    dense = sys.matrix.toarray()
    eye = np.eye(dofs.total)
    for i in range(dofs.total):
        assert abs(rhs_oracle(mesh, dofs, f, eye[i]) - sys.rhs[i]) < 1e-12
        for j in range(i, dofs.total):
            ref = hdg_form_oracle(mesh, dofs, case, coeff, eye[i], eye[j])
            assert abs(dense[i, j] - ref) < 1e-12


@pytest.mark.parametrize("method,regime", [("wg", "rho_h"), ("wg", "inv")])
def test_wg_matrix_against_oracle(method, regime):
    mesh = build_structured_mesh(1)
    case = SpaceCase(method, regime, 0, 0.4)
    dofs = build_space_triple(mesh, case)
    coeff = CoefficientField(alpha=lambda xy: 1.0 + xy[:, 1])
    f = lambda xy: np.sin(xy[:, 0])
    sys = assemble_wg(mesh, dofs, case, coeff, f)
    dense = sys.matrix.toarray()
    eye = np.eye(dofs.total)
    for i in range(dofs.total):
        for j in range(i, dofs.total):
            ref = wg_form_oracle(mesh, dofs, case, coeff, eye[i], eye[j])
            assert abs(dense[i, j] - ref) < 1e-10


def test_wg_rhs_against_oracle():
    mesh = build_structured_mesh(2)
    case = SpaceCase("wg", "rho_h", 1, 1.0)
    dofs = build_space_triple(mesh, case)
    f = lambda xy: xy[:, 0] ** 2 - xy[:, 1]
    sys = assemble_wg(mesh, dofs, case, CoefficientField.unit(), f)
    eye = np.eye(dofs.total)
    for j in range(dofs.total):
        assert abs(rhs_oracle(mesh, dofs, f, eye[j]) - sys.rhs[j]) < 1e-12


def test_assembled_matrices_exactly_symmetric():
    mesh = build_structured_mesh(3)
    for method, regime in [("hdg", "rho_h"), ("hdg", "inv"),
                           ("wg", "rho_h"), ("wg", "inv")]:
        case = SpaceCase(method, regime, 1, 0.2)
        dofs = build_space_triple(mesh, case)
        asm = assemble_hdg if method == "hdg" else assemble_wg
        sys = asm(mesh, dofs, case, CoefficientField.unit(), ONE)
        assert (sys.matrix - sys.matrix.T).nnz == 0


def test_zero_load_gives_zero_solution():
    mesh = build_structured_mesh(2)
    case = SpaceCase("hdg", "rho_h", 1, 0.5)
    dofs = build_space_triple(mesh, case)
    sys = assemble_hdg(mesh, dofs, case, CoefficientField.unit(), ZERO)
    x = solve_symmetric_indefinite(sys.matrix, sys.rhs)
    assert np.max(np.abs(x)) < 1e-12


def test_assembly_case_mismatch():
    mesh = build_structured_mesh(1)
    case = SpaceCase("hdg", "rho_h", 0, 1.0)
    dofs = build_space_triple(mesh, case)
    with pytest.raises(ValueError):
        assemble_wg(mesh, dofs, case, CoefficientField.unit(), ZERO)
    other = build_space_triple(build_structured_mesh(2), case)
    with pytest.raises(ValueError):
        assemble_hdg(mesh, other, case, CoefficientField.unit(), ZERO)
    wrong = build_space_triple(mesh, SpaceCase("hdg", "inv", 0, 1.0))
    with pytest.raises(ValueError):
        assemble_hdg(mesh, wrong, case, CoefficientField.unit(), ZERO)


def test_coefficient_must_be_positive():
    field = CoefficientField(alpha=lambda xy: xy[:, 0] - 0.5)
    with pytest.raises(ValueError):
        field.c_at(np.array([[0.25, 0.5]]))
    assert np.allclose(CoefficientField.unit().c_at(np.zeros((3, 2))), 1.0)


def test_primal_conforming_against_oracle():
    mesh = build_structured_mesh(2)
    coeff = CoefficientField(alpha=lambda xy: 1.0 + xy[:, 0] * xy[:, 1])
    f = lambda xy: xy[:, 1]
    sys, dofs = assemble_primal_conforming(mesh, 0, coeff, f)
    dense = sys.matrix.toarray()
    # same rule degree as the assembler (2 * degree + 1)
    tri = basis.tri_quadrature(2 * dofs.degree + 1)
    eye = np.eye(dofs.total)

    def form(xa, xb):
        total = 0.0
        for ci in range(mesh.num_cells):
            A, b0, det, _ = norms._geometry(mesh, ci)
            w = tri.weights * det
            xy = tri.xy @ A.T + b0
            pa, _ = norms._flux_on_cell(mesh, dofs, xa, ci, tri.xy)
            pb, _ = norms._flux_on_cell(mesh, dofs, xb, ci, tri.xy)
            _, ga = norms._scalar_on_cell(mesh, dofs, xa, ci, tri.xy)
            _, gb = norms._scalar_on_cell(mesh, dofs, xb, ci, tri.xy)
            c = coeff.c_at(xy)
            total += np.einsum("q,qc,qc->", w * c, pa, pb)
            total += np.einsum("q,qc,qc->", w, pa, gb)
            total += np.einsum("q,qc,qc->", w, pb, ga)
        return total

    for i in range(dofs.total):
        assert abs(rhs_oracle(mesh, dofs, f, eye[i]) - sys.rhs[i]) < 1e-13
        for j in range(i, dofs.total):
            assert abs(dense[i, j] - form(eye[i], eye[j])) < 1e-12
    assert (sys.matrix - sys.matrix.T).nnz == 0


def test_mixed_conforming_against_oracle():
    mesh = build_structured_mesh(2)
    coeff = CoefficientField(alpha=lambda xy: 2.0 + xy[:, 1])
    f = lambda xy: np.cos(xy[:, 1])
    sys, dofs = assemble_mixed_conforming(mesh, 0, coeff, f)
    dense = sys.matrix.toarray()
    # same rule degree as the assembler (2 k + 2)
    tri = basis.tri_quadrature(2 * dofs.k + 2)
    eye = np.eye(dofs.total)

    def form(xa, xb):
        total = 0.0
        for ci in range(mesh.num_cells):
            A, b0, det, _ = norms._geometry(mesh, ci)
            w = tri.weights * det
            xy = tri.xy @ A.T + b0
            pa, dpa = norms._flux_on_cell(mesh, dofs, xa, ci, tri.xy)
            pb, dpb = norms._flux_on_cell(mesh, dofs, xb, ci, tri.xy)
            ua, _ = norms._scalar_on_cell(mesh, dofs, xa, ci, tri.xy)
            ub, _ = norms._scalar_on_cell(mesh, dofs, xb, ci, tri.xy)
            c = coeff.c_at(xy)
            total += np.einsum("q,qc,qc->", w * c, pa, pb)
            total -= w @ (ua * dpb) + w @ (ub * dpa)
        return total

    for i in range(dofs.total):
        for j in range(i, dofs.total):
            assert abs(dense[i, j] - form(eye[i], eye[j])) < 1e-11


def test_mixed_conforming_divergence_identity():
    # with RT0 the broken divergence is cellwise constant, so div p = f
    # holds exactly for f = 1
    mesh = build_structured_mesh(3)
    sys, dofs = assemble_mixed_conforming(mesh, 0, CoefficientField.unit(), ONE)
    x = solve_symmetric_indefinite(sys.matrix, sys.rhs)
    tri = basis.tri_quadrature(2)
    for ci in range(mesh.num_cells):
        _, divs = norms._flux_on_cell(mesh, dofs, x, ci, tri.xy)
        assert np.max(np.abs(divs - 1.0)) < 1e-9


def test_mixed_normal_trace_is_single_valued():
    # a random conforming coefficient vector has continuous normal trace
    rng = np.random.default_rng(5)
    mesh = build_structured_mesh(2)
    dofs = MixedDofMap(mesh, 1)
    x = rng.standard_normal(dofs.total)
    s = np.linspace(0.1, 0.9, 5)
    for ei in mesh.interior_edges:
        edge = mesh.edges[ei]
        traces = []
        for ci, li in zip(edge.cells, edge.local_index):
            pts = norms._edge_ref_points(li, norms._side_flip(mesh, ci, li), s)
            vals, _ = norms._flux_on_cell(mesh, dofs, x, ci, pts)
            traces.append(vals @ edge.normal)
        assert np.max(np.abs(traces[0] - traces[1])) < 1e-11


def test_primal_scalar_is_continuous_and_zero_on_boundary():
    rng = np.random.default_rng(9)
    mesh = build_structured_mesh(2)
    dofs = PrimalDofMap(mesh, 1)
    x = rng.standard_normal(dofs.total)
    s = np.linspace(0.0, 1.0, 7)
    for ei in range(mesh.num_edges):
        edge = mesh.edges[ei]
        vals = []
        for ci, li in zip(edge.cells, edge.local_index):
            pts = norms._edge_ref_points(li, norms._side_flip(mesh, ci, li), s)
            v, _ = norms._scalar_on_cell(mesh, dofs, x, ci, pts)
            vals.append(v)
        if edge.boundary:
            assert np.max(np.abs(vals[0])) < 1e-12
        else:
            assert np.max(np.abs(vals[0] - vals[1])) < 1e-12


@pytest.mark.parametrize("method,regime", [("hdg", "rho_h"), ("hdg", "inv"),
                                           ("wg", "rho_h"), ("wg", "inv")])
def test_norm_gram_spd(method, regime):
    mesh = build_structured_mesh(2)
    case = SpaceCase(method, regime, 0, 0.3)
    dofs = build_space_triple(mesh, case)
    N = assemble_norm_gram(mesh, dofs, norm_kind_for_case(case), case.rho)
    dense = N.toarray()
    assert np.max(np.abs(dense - dense.T)) == 0.0
    assert np.min(scipy.linalg.eigvalsh(dense)) > 0.0


def test_norm_gram_quadratic_scaling():
    rng = np.random.default_rng(31)
    mesh = build_structured_mesh(2)
    case = SpaceCase("wg", "rho_h", 1, 0.5)
    dofs = build_space_triple(mesh, case)
    N = assemble_norm_gram(mesh, dofs, "wg_grad", case.rho)
    x = rng.standard_normal(dofs.total)
    assert abs((2 * x) @ (N @ (2 * x)) - 4 * (x @ (N @ x))) < 1e-10
    assert np.zeros(dofs.total) @ (N @ np.zeros(dofs.total)) == 0.0


def test_norm_gram_kind_mismatch():
    mesh = build_structured_mesh(1)
    dofs = build_space_triple(mesh, SpaceCase("hdg", "rho_h", 0, 1.0))
    with pytest.raises(ValueError):
        assemble_norm_gram(mesh, dofs, "wg_grad", 1.0)


def test_conforming_flux_has_no_projected_jump():
    # the rho-weighted flux-jump part of the hdg_div norm vanishes for a
    # normal-continuous flux; compare Grams at two rho values on a vector
    # with only flux entries set
    rng = np.random.default_rng(41)
    mesh = build_structured_mesh(2)
    case = SpaceCase("hdg", "rho_h", 0, 1.0)
    dofs = build_space_triple(mesh, case)
    mixed = MixedDofMap(mesh, 0)
    xc = rng.standard_normal(mixed.flux_total)
    x = np.zeros(dofs.total)
    for ci in range(mesh.num_cells):
        idx, sgn = mixed.cell_flux_map(mesh, ci)
        x[dofs.cell_flux_dofs(ci)] = sgn * xc[idx]
    n1 = x @ (assemble_norm_gram(mesh, dofs, "hdg_div", 1.0) @ x)
    n2 = x @ (assemble_norm_gram(mesh, dofs, "hdg_div", 1e-3) @ x)
    # rho only multiplies the (zero) jump and (zero) trace contributions
    assert abs(n1 - n2) < 1e-9 * max(n1, 1.0)
    # breaking conformity reactivates the jump penalty
    x[dofs.cell_flux_dofs(0)] += rng.standard_normal(dofs.flux_per_cell)
    j1 = x @ (assemble_norm_gram(mesh, dofs, "hdg_div", 1e-3) @ x)
    j0 = x @ (assemble_norm_gram(mesh, dofs, "hdg_div", 1.0) @ x)
    assert j1 > 10.0 * j0


def test_assembly_is_deterministic():
    mesh = build_structured_mesh(2)
    case = SpaceCase("wg", "inv", 1, 0.1)
    dofs = build_space_triple(mesh, case)
    a = assemble_wg(mesh, dofs, case, CoefficientField.unit(), ONE)
    b = assemble_wg(mesh, dofs, case, CoefficientField.unit(), ONE)
    assert (a.matrix != b.matrix).nnz == 0
    assert np.array_equal(a.rhs, b.rhs)
