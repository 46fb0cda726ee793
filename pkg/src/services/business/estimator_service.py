"""Residual a posteriori estimator: element residuals, edge jumps, oscillation, localization."""

from __future__ import annotations

import logging

import numpy as np

from constants.options import EDGE_TAG_CODES, EdgeTag, IndicatorTerm
from constants.types import Density, FloatArray, IntArray
from models.domains.assembly import Solution
from models.domains.mesh import Mesh
from models.domains.plate import PlateProblem
from models.dto.estimator import EdgeJumpData, EstimatorReport, IndicatorBreakdown
from services.business.assembly_service import evaluate_on_elements, solution_polynomials
from services.business.element_service import map_edge_rule, map_triangle_rule
from services.business.mechanics_service import plate_operator, pointwise_mechanics
from services.platform.worker_pool import get_pool
from utils.errors import PlateError
from utils.quadrature import edge_quadrature, triangle_quadrature

logger = logging.getLogger(__name__)


def _check_mesh(solution: Solution, problem: PlateProblem) -> None:
    if solution.mesh.n_triangles != problem.mesh.n_triangles or not np.array_equal(
        solution.mesh.triangles, problem.mesh.triangles
    ):
        raise PlateError("Solution and problem are defined on different meshes")


def _l2(values: FloatArray, weights: FloatArray) -> FloatArray:
    """各行の L2 ノルム（values, weights は (n, Q)）"""
    return np.sqrt(np.einsum("nq,nq->n", weights, values**2))


# =====================================================================
# element residual
# =====================================================================
def _element_residuals(
    solution: Solution, problem: PlateProblem, element_ids: IntArray, polys: FloatArray
) -> FloatArray:
    """h_K² ‖A(u_h) - f‖_{0,K}"""
    mesh = problem.mesh
    rule = triangle_quadrature()
    f_elem = problem.element_load()

    def block_residual(block: range) -> FloatArray:
        ids = element_ids[block.start : block.stop]
        x, y, w = map_triangle_rule(mesh, ids, rule)
        bundle = evaluate_on_elements(solution, ids, x, y, max_order=4, polynomials=polys)
        residual = plate_operator(bundle, problem.material) - f_elem[ids][:, None]
        return mesh.residual_sizes[ids] ** 2 * _l2(residual, w)

    parts = get_pool().map_chunks(block_residual, len(element_ids))
    return np.concatenate(parts) if parts else np.zeros(0)


def element_residual(solution: Solution, problem: PlateProblem, element_id: int) -> float:
    _check_mesh(solution, problem)
    ids = np.array([element_id])
    return float(_element_residuals(solution, problem, ids, solution_polynomials(solution))[0])


# =====================================================================
# edge terms
# =====================================================================
def _edge_jumps(
    solution: Solution, problem: PlateProblem, edge_ids: IntArray, polys: FloatArray
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    辺の積分点での ⟦M_nn⟧ と ⟦V_n⟧ - g（境界辺では片側の M_nn, V_n）

    Returns:
        moment, shear, 重み（いずれも (n, Q)）
    """
    mesh = problem.mesh
    material = problem.material
    x, y, w = map_edge_rule(mesh, edge_ids, edge_quadrature())
    normal = mesh.edge_normals[edge_ids].T[:, :, None]
    tangent = mesh.edge_tangents[edge_ids].T[:, :, None]

    k0 = mesh.edge_triangles[edge_ids, 0]
    sigma = mesh.outward_sign(k0, edge_ids)[:, None]
    side0 = pointwise_mechanics(
        evaluate_on_elements(solution, k0, x, y, max_order=3, polynomials=polys),
        material,
        normal,
        tangent,
    )
    moment = side0.m_nn.copy()
    shear = sigma * side0.v_n

    inner = np.flatnonzero(mesh.edge_triangles[edge_ids, 1] >= 0)
    if len(inner):
        k1 = mesh.edge_triangles[edge_ids[inner], 1]
        side1 = pointwise_mechanics(
            evaluate_on_elements(
                solution, k1, x[inner], y[inner], max_order=3, polynomials=polys
            ),
            material,
            normal[:, inner],
            tangent[:, inner],
        )
        # M_nn は法線の向きに対して偶、V_n は奇
        moment[inner] -= side1.m_nn
        shear[inner] -= sigma[inner] * side1.v_n

    on_line = mesh.edge_on_line_load[edge_ids][:, None]
    shear = shear - np.where(on_line, problem.loads.line_density(x, y), 0.0)
    return moment, shear, w


def _edge_terms(
    solution: Solution, problem: PlateProblem, edge_ids: IntArray, polys: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """
    辺ごとの (h_E^{1/2}‖M 項‖, h_E^{3/2}‖V 項‖)

    内部辺は両方、単純支持辺は M のみ、自由辺は両方、固定辺は寄与なし。
    """
    mesh = problem.mesh
    tags = mesh.edge_tags[edge_ids]
    has_moment = tags != EDGE_TAG_CODES[EdgeTag.CLAMPED]
    has_shear = (tags == EDGE_TAG_CODES[EdgeTag.INTERIOR]) | (
        tags == EDGE_TAG_CODES[EdgeTag.FREE]
    )

    def block_terms(block: range) -> tuple[FloatArray, FloatArray]:
        ids = edge_ids[block.start : block.stop]
        moment, shear, w = _edge_jumps(solution, problem, ids, polys)
        h = mesh.edge_lengths[ids]
        return np.sqrt(h) * _l2(moment, w), h**1.5 * _l2(shear, w)

    parts = get_pool().map_chunks(block_terms, len(edge_ids))
    if not parts:
        return np.zeros(0), np.zeros(0)
    moment_term = np.concatenate([m for m, _ in parts])
    shear_term = np.concatenate([s for _, s in parts])
    return np.where(has_moment, moment_term, 0.0), np.where(has_shear, shear_term, 0.0)


def edge_indicator(solution: Solution, problem: PlateProblem, edge_id: int) -> tuple[float, float]:
    """辺 E の (モーメント項, せん断力項)。辺の種類に該当しない項は 0"""
    _check_mesh(solution, problem)
    moment, shear = _edge_terms(
        solution, problem, np.array([edge_id]), solution_polynomials(solution)
    )
    return float(moment[0]), float(shear[0])


def edge_jump_data(solution: Solution, problem: PlateProblem, edge_id: int) -> EdgeJumpData:
    _check_mesh(solution, problem)
    moment, shear, _ = _edge_jumps(
        solution, problem, np.array([edge_id]), solution_polynomials(solution)
    )
    return EdgeJumpData(
        edge_id=edge_id,
        is_boundary=bool(problem.mesh.is_boundary_edge[edge_id]),
        moment=moment[0],
        shear=shear[0],
    )


# =====================================================================
# oscillation
# =====================================================================
def element_oscillation(mesh: Mesh, density: Density) -> FloatArray:
    """osc_K(f) = h_K² ‖f - f̄_K‖_{0,K}（f̄_K は要素平均）"""
    ids = np.arange(mesh.n_triangles)
    x, y, w = map_triangle_rule(mesh, ids, triangle_quadrature())
    f = np.asarray(density(x, y), dtype=float)
    mean = np.einsum("nq,nq->n", w, f) / w.sum(axis=1)
    return mesh.residual_sizes**2 * _l2(f - mean[:, None], w)


def edge_oscillation(mesh: Mesh, edge_ids: IntArray, density: Density) -> FloatArray:
    """osc_E(g) = h_E^{3/2} ‖g - ḡ_E‖_{0,E}"""
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    if len(edge_ids) == 0:
        return np.zeros(0)
    x, y, w = map_edge_rule(mesh, edge_ids, edge_quadrature())
    g = np.asarray(density(x, y), dtype=float)
    mean = np.einsum("nq,nq->n", w, g) / w.sum(axis=1)
    return mesh.edge_lengths[edge_ids] ** 1.5 * _l2(g - mean[:, None], w)


def oscillation(problem: PlateProblem, mesh: Mesh | None = None) -> tuple[float, float]:
    """(osc(f), osc(g))。局所値の二乗和の平方根"""
    mesh = mesh or problem.mesh
    osc_f = element_oscillation(mesh, problem.loads.density)
    osc_g = edge_oscillation(mesh, mesh.line_load_edges, problem.loads.line_density)
    return float(np.sqrt(np.sum(osc_f**2))), float(np.sqrt(np.sum(osc_g**2)))


# =====================================================================
# global estimate
# =====================================================================
def global_estimate(solution: Solution, problem: PlateProblem) -> EstimatorReport:
    """
    η² = Σ_K r_K² + Σ_E (辺項)²

    局所化: 内部辺の項は両隣の要素に半分ずつ、境界辺の項は隣接要素に全部割り当てる。
    """
    _check_mesh(solution, problem)
    mesh = problem.mesh
    polys = solution_polynomials(solution)
    n_tri = mesh.n_triangles

    residual = _element_residuals(solution, problem, np.arange(n_tri), polys)
    edges = np.arange(mesh.n_edges)
    moment, shear = _edge_terms(solution, problem, edges, polys)

    interior = ~mesh.is_boundary_edge
    on_line = mesh.edge_on_line_load
    k0 = mesh.edge_triangles[:, 0]
    k1 = mesh.edge_triangles[:, 1]

    def localize(values: FloatArray, mask: np.ndarray) -> FloatArray:
        """辺ごとの 2 乗値を要素へ割り振る"""
        out = np.zeros(n_tri)
        share = np.where(interior, 0.5, 1.0) * values * mask
        np.add.at(out, k0, share)
        np.add.at(out, k1[interior], share[interior])
        return out

    breakdown = IndicatorBreakdown(
        interior_residual=residual**2,
        moment_jump=localize(moment**2, interior),
        shear_jump=localize(shear**2, interior & ~on_line),
        boundary_moment=localize(moment**2, ~interior),
        boundary_shear=localize(shear**2, ~interior),
        line_load=localize(shear**2, on_line),
    )
    eta_k = np.sqrt(breakdown.total())
    totals = {
        IndicatorTerm.INTERIOR_RESIDUAL: float(np.sum(residual**2)),
        IndicatorTerm.MOMENT_JUMP: float(np.sum(moment[interior] ** 2)),
        IndicatorTerm.SHEAR_JUMP: float(np.sum(shear[interior & ~on_line] ** 2)),
        IndicatorTerm.BOUNDARY_MOMENT: float(np.sum(moment[~interior] ** 2)),
        IndicatorTerm.BOUNDARY_SHEAR: float(np.sum(shear[~interior] ** 2)),
        IndicatorTerm.LINE_LOAD: float(np.sum(shear[on_line] ** 2)),
    }
    osc_f, osc_g = oscillation(problem)
    eta = float(np.sqrt(np.sum(eta_k**2)))
    logger.debug(
        "estimate ndofs=%d eta=%.6e osc_f=%.3e osc_g=%.3e",
        solution.dofmap.n_dofs,
        eta,
        osc_f,
        osc_g,
    )
    return EstimatorReport(
        eta_K=eta_k,
        eta=eta,
        osc_f=osc_f,
        osc_g=osc_g,
        totals=totals,
        breakdown=breakdown,
    )
