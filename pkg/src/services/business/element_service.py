"""Argyris basis construction, evaluation and interpolation."""

from __future__ import annotations

import logging

import numpy as np

from constants.types import (
    COMPONENTS_UP_TO_ORDER,
    DERIVATIVE_ORDERS,
    FloatArray,
    IntArray,
    JetField,
)
from models.domains.element import N_LOCAL_DOFS, DerivativeBundle, ElementBasis, QuadratureRule
from models.domains.mesh import Mesh
from services.platform.worker_pool import get_pool
from utils.errors import DegenerateElementError, DerivativeOrderError
from utils.polynomials import monomial_derivatives

logger = logging.getLogger(__name__)

# 頂点汎関数の導関数の並び (値, dx, dy, dxx, dxy, dyy)
_VERTEX_ORDERS = DERIVATIVE_ORDERS[:6]
# 局所自由度ごとの微分階数（行スケーリング h^order 用）
_DOF_ORDERS = np.array([0, 1, 1, 2, 2, 2] * 3 + [1, 1, 1])
MAX_CONDITION = 1e12


def _functional_matrices(
    vertices: FloatArray, centroids: FloatArray, scales: FloatArray, normals: FloatArray
) -> FloatArray:
    """
    スケール済み汎関数行列 (T, 21, 21)

    行 i は局所自由度 i の汎関数に h^order を掛けたもの、列は局所単項式。
    """
    n = len(vertices)
    local_v = (vertices - centroids[:, None, :]) / scales[:, None, None]  # (T, 3, 2)
    vertex_rows = monomial_derivatives(local_v[..., 0], local_v[..., 1], _VERTEX_ORDERS)
    vertex_rows = vertex_rows.transpose(1, 2, 0, 3).reshape(n, 18, N_LOCAL_DOFS)

    local_m = 0.5 * (local_v + np.roll(local_v, -1, axis=1))  # 局所辺 i の中点
    grad = monomial_derivatives(local_m[..., 0], local_m[..., 1], ((1, 0), (0, 1)))
    edge_rows = normals[..., 0, None] * grad[0] + normals[..., 1, None] * grad[1]
    return np.concatenate([vertex_rows, edge_rows], axis=1)


def build_element_basis(mesh: Mesh) -> ElementBasis:
    """
    要素ごとに 21×21 汎関数行列を逆行列化して Argyris 基底を作る

    辺の法線自由度はメッシュの正準法線を使うので、隣接要素で同じ汎関数になる。

    Raises:
        DegenerateElementError: 汎関数行列が特異（退化した要素）
    """
    ids = np.arange(mesh.n_triangles)
    vertex_ids = mesh.triangles[ids]
    edge_ids = mesh.triangle_edges[ids]
    centroids = mesh.centroids[ids]
    scales = mesh.element_diameters[ids]
    normals = mesh.edge_normals[edge_ids]  # (T, 3, 2)
    vertices = mesh.vertices[vertex_ids]

    def build(block: range) -> tuple[FloatArray, FloatArray]:
        sl = slice(block.start, block.stop)
        matrices = _functional_matrices(vertices[sl], centroids[sl], scales[sl], normals[sl])
        conditions = np.linalg.cond(matrices)
        bad = ~np.isfinite(conditions) | (conditions > MAX_CONDITION)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise DegenerateElementError(int(ids[block.start + k]), float(conditions[k]))
        inverse = np.linalg.inv(matrices)
        # 非スケールの汎関数に対する双対性: C = A_s^{-1} diag(h^order)
        row_scale = scales[sl, None] ** _DOF_ORDERS[None, :]
        return inverse * row_scale[:, None, :], conditions

    parts = get_pool().map_chunks(build, len(ids))
    coefficients = np.concatenate([c for c, _ in parts]) if parts else np.zeros((0, 21, 21))
    conditions = np.concatenate([k for _, k in parts]) if parts else np.zeros(0)

    basis = ElementBasis(
        triangle_ids=ids,
        vertex_ids=vertex_ids,
        edge_ids=edge_ids,
        centroids=centroids,
        scales=scales,
        coefficients=coefficients,
        conditions=conditions,
    )
    logger.debug(
        "built argyris basis elements=%d max_condition=%.3e",
        basis.n_elements,
        basis.max_condition,
    )
    return basis


def _orders(max_order: int) -> tuple[tuple[int, int], ...]:
    if not 0 <= max_order <= 4:
        raise DerivativeOrderError(f"max_order must be in 0..4, got {max_order}")
    return DERIVATIVE_ORDERS[: COMPONENTS_UP_TO_ORDER[max_order]]


def _derivative_scales(basis: ElementBasis, element_ids: IntArray, max_order: int) -> FloatArray:
    """(C, n) の 1 / h^{p+q}"""
    h = basis.scales[element_ids]
    total = np.array([p + q for p, q in _orders(max_order)])
    return h[None, :] ** (-total[:, None])


def eval_derivatives(
    basis: ElementBasis,
    element_ids: IntArray,
    x: FloatArray,
    y: FloatArray,
    max_order: int = 2,
) -> DerivativeBundle:
    """
    基底関数の導関数

    Args:
        element_ids: (n,) 要素 ID
        x, y: (n, Q) 各要素上の評価点

    Returns:
        data の形状が (成分, n, Q, 21) の DerivativeBundle
    """
    element_ids = np.asarray(element_ids)
    x = np.asarray(x, dtype=float).reshape(len(element_ids), -1)
    y = np.asarray(y, dtype=float).reshape(len(element_ids), -1)
    xi, eta = basis.local_coordinates(element_ids[:, None], x, y)
    monomials = monomial_derivatives(xi, eta, _orders(max_order))
    values = np.einsum("cnqj,njk->cnqk", monomials, basis.coefficients[element_ids])
    values *= _derivative_scales(basis, element_ids, max_order)[:, :, None, None]
    return DerivativeBundle(data=values, max_order=max_order)


def local_polynomials(basis: ElementBasis, local_coefficients: FloatArray) -> FloatArray:
    """要素局所順の係数 (T, 21) から局所単項式の係数 (T, 21) を得る"""
    return np.einsum("tjk,tk->tj", basis.coefficients, local_coefficients)


def eval_field(
    basis: ElementBasis,
    polynomials: FloatArray,
    element_ids: IntArray,
    x: FloatArray,
    y: FloatArray,
    max_order: int = 2,
) -> DerivativeBundle:
    """
    区分多項式場の導関数

    Args:
        polynomials: (T, 21) local_polynomials の結果（全要素分）
        element_ids: (n,) 要素 ID
        x, y: (n, Q) 評価点

    Returns:
        data の形状が (成分, n, Q) の DerivativeBundle
    """
    element_ids = np.asarray(element_ids)
    x = np.asarray(x, dtype=float).reshape(len(element_ids), -1)
    y = np.asarray(y, dtype=float).reshape(len(element_ids), -1)
    xi, eta = basis.local_coordinates(element_ids[:, None], x, y)
    monomials = monomial_derivatives(xi, eta, _orders(max_order))
    values = np.einsum("cnqj,nj->cnq", monomials, polynomials[element_ids])
    values *= _derivative_scales(basis, element_ids, max_order)[:, :, None]
    return DerivativeBundle(data=values, max_order=max_order)


def interpolate(field: JetField, mesh: Mesh) -> FloatArray:
    """
    Argyris 補間の大域係数ベクトル

    field(x, y) は [u, u_x, u_y, u_xx, u_xy, u_yy]（形状 (6, n)）を返す。
    頂点自由度は頂点での値、辺自由度は中点での正準法線方向微分。
    """
    jets = np.asarray(field(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)
    mids = mesh.edge_midpoints
    grads = np.asarray(field(mids[:, 0], mids[:, 1]), dtype=float)[1:3]
    normal_slopes = np.einsum("ie,ei->e", grads, mesh.edge_normals)
    return np.concatenate([jets.T.reshape(-1), normal_slopes])


def map_triangle_rule(
    mesh: Mesh, element_ids: IntArray, rule: QuadratureRule
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """参照三角形の積分則を要素へ写す。戻り値 x, y, 重み（いずれも (n, Q)）"""
    p = mesh.vertices[mesh.triangles[element_ids]]  # (n, 3, 2)
    lam = rule.barycentric  # (Q, 3)
    xy = np.einsum("qk,nkd->nqd", lam, p)
    weights = 2.0 * mesh.areas[element_ids][:, None] * rule.weights[None, :]
    return xy[..., 0], xy[..., 1], weights


def map_edge_rule(
    mesh: Mesh, edge_ids: IntArray, rule: QuadratureRule
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """[0, 1] の積分則を辺（正準向き）へ写す。戻り値 x, y, 重み（いずれも (n, Q)）"""
    a = mesh.vertices[mesh.edges[edge_ids, 0]]
    d = mesh.edge_vectors[edge_ids]
    t = rule.points[None, :, None]
    xy = a[:, None, :] + t * d[:, None, :]
    weights = mesh.edge_lengths[edge_ids][:, None] * rule.weights[None, :]
    return xy[..., 0], xy[..., 1], weights
