import math

import numpy as np
import pytest

from hdgwg import basis


def exact_monomial_integral(a, b):
    # int_T x^a y^b over the reference triangle
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(0, basis.MAX_QUADRATURE_DEGREE + 1))
def test_tri_quadrature_exactness(degree):
    rule = basis.tri_quadrature(degree)
    x, y = rule.xy[:, 0], rule.xy[:, 1]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            approx = rule.weights @ (x**a * y**b)
            assert abs(approx - exact_monomial_integral(a, b)) < 1e-14


def test_tri_quadrature_known_values():
    rule = basis.tri_quadrature(4)
    x, y = rule.xy[:, 0], rule.xy[:, 1]
    assert abs(rule.weights.sum() - 0.5) < 1e-15
    assert abs(rule.weights @ x - 1.0 / 6.0) < 1e-15
    assert abs(rule.weights @ (x**2 * y**2) - 1.0 / 180.0) < 1e-15


def test_tri_quadrature_properties():
    rule = basis.tri_quadrature(6)
    assert np.all(rule.weights > 0)
    assert np.all(rule.points >= 0)
    assert np.allclose(rule.points.sum(axis=1), 1.0)
    with pytest.raises(ValueError):
        basis.tri_quadrature(11)
    with pytest.raises(ValueError):
        basis.tri_quadrature(-1)


@pytest.mark.parametrize("degree", [0, 1, 5, 9, 20])
def test_edge_quadrature_exactness(degree):
    rule = basis.edge_quadrature(degree)
    for p in range(degree + 1):
        assert abs(rule.weights @ rule.points**p - 1.0 / (p + 1)) < 1e-14


def test_edge_quadrature_range():
    with pytest.raises(ValueError):
        basis.edge_quadrature(2 * basis.MAX_QUADRATURE_DEGREE + 1)


def test_dims():
    assert [basis.scalar_dim(k) for k in range(4)] == [1, 3, 6, 10]
    assert basis.rt_dim(0) == 3
    assert basis.rt_dim(1) == 8


def test_scalar_basis_lagrange_property():
    for k in range(4):
        nodes = basis.lattice_nodes(k)
        vals, _ = basis.eval_scalar_basis(k, nodes)
        assert np.allclose(vals, np.eye(len(nodes)), atol=1e-12)


def test_scalar_basis_partition_of_unity():
    rng = np.random.default_rng(7)
    pts = rng.random((20, 2)) * 0.5
    for k in range(4):
        vals, grads = basis.eval_scalar_basis(k, pts)
        assert np.allclose(vals.sum(axis=1), 1.0, atol=1e-12)
        assert np.allclose(grads.sum(axis=1), 0.0, atol=1e-11)


def test_p2_vertex_function_vanishes_at_opposite_midpoint():
    vals, _ = basis.eval_scalar_basis(2, np.array([[0.5, 0.5]]))
    assert abs(vals[0, 0]) < 1e-13


def test_scalar_gradients_finite_difference():
    rng = np.random.default_rng(11)
    pts = rng.random((10, 2)) * 0.4 + 0.1
    eps = 1e-6
    for k in (1, 2, 3):
        _, grads = basis.eval_scalar_basis(k, pts)
        for d in range(2):
            shift = np.zeros(2)
            shift[d] = eps
            vp, _ = basis.eval_scalar_basis(k, pts + shift)
            vm, _ = basis.eval_scalar_basis(k, pts - shift)
            fd = (vp - vm) / (2 * eps)
            assert np.max(np.abs(fd - grads[:, :, d])) < 1e-6


def test_rt0_reference_properties():
    rule = basis.tri_quadrature(2)
    vals, divs = basis.eval_rt_basis(0, rule.xy)
    assert vals.shape[1] == 3
    # div of each RT0 function is the constant 1/|T_ref| = 2
    assert np.allclose(divs, 2.0, atol=1e-12)


@pytest.mark.parametrize("k", [0, 1])
def test_rt_edge_moment_duality(k):
    quad = basis.edge_quadrature(2 * k + 2)
    leg = basis.eval_edge_basis(k, quad.points)
    nb = basis.rt_dim(k)
    moments = np.zeros((3 * (k + 1), nb))
    row = 0
    for a, b, normal, length in basis.REF_EDGES:
        pts = a[None, :] + quad.points[:, None] * (b - a)[None, :]
        vals, _ = basis.eval_rt_basis(k, pts)
        ntrace = vals @ normal
        for m in range(k + 1):
            moments[row] = length * (quad.weights * leg[:, m]) @ ntrace
            row += 1
    expect = np.zeros((3 * (k + 1), nb))
    expect[:, : 3 * (k + 1)] = np.eye(3 * (k + 1))
    assert np.allclose(moments, expect, atol=1e-12)


def test_rt1_interior_moment_duality():
    tri = basis.tri_quadrature(2)
    vals, _ = basis.eval_rt_basis(1, tri.xy)
    for comp in range(2):
        col = tri.weights @ vals[:, :, comp]
        expect = np.zeros(8)
        expect[6 + comp] = 1.0
        assert np.allclose(col, expect, atol=1e-12)


def test_rt_divergence_finite_difference():
    rng = np.random.default_rng(23)
    pts = rng.random((8, 2)) * 0.4 + 0.1
    eps = 1e-6
    for k in (0, 1):
        _, divs = basis.eval_rt_basis(k, pts)
        vx_p, _ = basis.eval_rt_basis(k, pts + [eps, 0.0])
        vx_m, _ = basis.eval_rt_basis(k, pts - [eps, 0.0])
        vy_p, _ = basis.eval_rt_basis(k, pts + [0.0, eps])
        vy_m, _ = basis.eval_rt_basis(k, pts - [0.0, eps])
        fd = (vx_p[:, :, 0] - vx_m[:, :, 0] + vy_p[:, :, 1] - vy_m[:, :, 1]) / (
            2 * eps
        )
        assert np.max(np.abs(fd - divs)) < 1e-6


def test_rt_unsupported_degree():
    with pytest.raises(ValueError):
        basis.eval_rt_basis(2, np.array([[0.25, 0.25]]))


def test_edge_basis_orthonormal():
    quad = basis.edge_quadrature(10)
    for k in range(5):
        vals = basis.eval_edge_basis(k, quad.points)
        gram = vals.T @ (quad.weights[:, None] * vals)
        assert np.allclose(gram, np.eye(k + 1), atol=1e-13)
    # degree 0 is the constant 1
    assert np.allclose(basis.eval_edge_basis(0, np.array([0.3, 0.9])), 1.0)
    with pytest.raises(ValueError):
        basis.eval_edge_basis(5, np.array([0.5]))


def test_lattice_nodes_counts():
    for k in range(1, 4):
        assert basis.lattice_nodes(k).shape == (basis.scalar_dim(k), 2)
    assert np.allclose(basis.lattice_nodes(0), [[1.0 / 3.0, 1.0 / 3.0]])
