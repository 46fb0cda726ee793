import numpy as np
import pytest

from conftest import square_mesh
from polynomial_fields import Polynomial2D
from constants.options import DofKind
from constants.types import DERIVATIVE_ORDERS
from services.business.assembly_service import (
    evaluate_on_elements,
    solution_from_coefficients,
)
from services.business.element_service import (
    build_element_basis,
    eval_derivatives,
    interpolate,
    map_edge_rule,
    map_triangle_rule,
)
from services.business.mesh_service import build_mesh, refine_marked
from utils.errors import DerivativeOrderError
from utils.quadrature import edge_quadrature, triangle_quadrature


@pytest.fixture
def graded_mesh(grid_mesh):
    """二分割で大きさの異なる要素が混在するメッシュ"""
    return refine_marked(refine_marked(grid_mesh, {0, 5}), {1})


def test_basis_is_dual_to_vertex_functionals(grid_mesh):
    basis = build_element_basis(grid_mesh)
    ids = np.arange(grid_mesh.n_triangles)
    p = grid_mesh.vertices[grid_mesh.triangles]
    bundle = eval_derivatives(basis, ids, p[..., 0], p[..., 1], max_order=2)
    for i in range(3):
        block = bundle.data[:6, :, i, 6 * i : 6 * i + 6]  # (成分, T, 6)
        identity = np.broadcast_to(np.eye(6)[:, None, :], block.shape)
        np.testing.assert_allclose(block, identity, atol=1e-9)
        others = np.delete(bundle.data[:6, :, i, :], np.s_[6 * i : 6 * i + 6], axis=2)
        np.testing.assert_allclose(others, 0.0, atol=1e-9)


def test_basis_is_dual_to_edge_functionals(grid_mesh):
    basis = build_element_basis(grid_mesh)
    ids = np.arange(grid_mesh.n_triangles)
    edge_ids = grid_mesh.triangle_edges
    mids = grid_mesh.edge_midpoints[edge_ids]  # (T, 3, 2)
    bundle = eval_derivatives(basis, ids, mids[..., 0], mids[..., 1], max_order=1)
    normals = grid_mesh.edge_normals[edge_ids]
    slopes = np.einsum("ctqk,tqc->tqk", bundle.gradient, normals)
    expected = np.zeros((grid_mesh.n_triangles, 3, 21))
    for i in range(3):
        expected[:, i, 18 + i] = 1.0
    np.testing.assert_allclose(slopes, expected, atol=1e-9)


def test_quintic_is_reproduced_with_all_derivatives(graded_mesh, rng):
    poly = Polynomial2D.random(5, rng)
    solution = solution_from_coefficients(graded_mesh, interpolate(poly.jet, graded_mesh))
    ids = np.arange(graded_mesh.n_triangles)
    x, y, _ = map_triangle_rule(graded_mesh, ids, triangle_quadrature())
    bundle = evaluate_on_elements(solution, ids, x, y, max_order=4)
    expected = poly.evaluate(x, y, DERIVATIVE_ORDERS)
    np.testing.assert_allclose(bundle.data, expected, rtol=1e-8, atol=1e-7)


def test_random_field_is_c1_across_interior_edges(graded_mesh, rng):
    solution = solution_from_coefficients(
        graded_mesh, rng.standard_normal(graded_mesh.n_dofs)
    )
    edges = graded_mesh.interior_edges
    x, y, _ = map_edge_rule(graded_mesh, edges, edge_quadrature())
    owners = graded_mesh.edge_triangles[edges]
    left = evaluate_on_elements(solution, owners[:, 0], x, y, max_order=1)
    right = evaluate_on_elements(solution, owners[:, 1], x, y, max_order=1)
    np.testing.assert_allclose(left.value, right.value, atol=1e-9)
    np.testing.assert_allclose(left.gradient, right.gradient, atol=1e-8)


def test_condition_numbers_stay_moderate(graded_mesh):
    basis = build_element_basis(graded_mesh)
    assert basis.n_elements == graded_mesh.n_triangles
    assert 1.0 <= basis.max_condition < 1e12


def test_basis_is_invariant_under_scaling():
    """局所座標のスケーリングで条件数は要素の大きさに依らない"""
    mesh = square_mesh(2)
    tiny = build_mesh(
        mesh.vertices * 1e-3,
        mesh.triangles,
        [(s.path, s.kind) for s in mesh.boundary_segments],
    )
    np.testing.assert_allclose(
        build_element_basis(mesh).conditions, build_element_basis(tiny).conditions, rtol=1e-6
    )


def test_dof_keys(grid_mesh):
    basis = build_element_basis(grid_mesh)
    keys = basis.dof_keys(0)
    assert len(keys) == 21
    assert [k.kind for k in keys[:6]] == [
        DofKind.VERTEX_VALUE,
        DofKind.VERTEX_DX,
        DofKind.VERTEX_DY,
        DofKind.VERTEX_DXX,
        DofKind.VERTEX_DXY,
        DofKind.VERTEX_DYY,
    ]
    assert all(k.kind is DofKind.EDGE_NORMAL for k in keys[18:])
    assert [k.anchor for k in keys[18:]] == grid_mesh.triangle_edges[0].tolist()


def test_derivative_order_out_of_range(grid_mesh):
    basis = build_element_basis(grid_mesh)
    ids, x, y = np.array([0]), np.array([[0.2]]), np.array([[0.1]])
    with pytest.raises(DerivativeOrderError):
        eval_derivatives(basis, ids, x, y, max_order=5)
    bundle = eval_derivatives(basis, ids, x, y, max_order=1)
    with pytest.raises(DerivativeOrderError):
        bundle.hessian
