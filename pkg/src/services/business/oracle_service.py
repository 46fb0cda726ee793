"""Navier series for the simply supported unit square and energy-norm error identities."""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import zeta

from constants.options import EDGE_TAG_CODES, EdgeTag, OracleCase
from constants.types import FloatArray
from models.domains.assembly import Solution
from models.domains.plate import Material, PlateProblem
from models.dto.oracle import NavierCase, SeriesValue
from services.business.assembly_service import (
    evaluate_on_elements,
    evaluate_solution,
    solution_polynomials,
)
from services.business.element_service import map_edge_rule, map_triangle_rule
from services.business.mechanics_service import bending_matrix
from services.business.mesh_service import edges_on_segment, locate_points
from utils.config import settings
from utils.errors import EnergyRadicandError, OracleError
from utils.quadrature import edge_quadrature, triangle_quadrature

logger = logging.getLogger(__name__)

CENTER = (0.5, 0.5)
RADICAND_TOL = 1e-12
_POINT_CHUNK = 512


def _sin_half(m: np.ndarray) -> np.ndarray:
    """sin(mπ/2) の厳密値（偶数で 0、奇数で ±1）"""
    return np.where(m % 2 == 0, 0.0, np.where(m % 4 == 1, 1.0, -1.0))


def _prefactor(case: NavierCase) -> float:
    D = case.material.D
    if case.kind is OracleCase.SQUARE:
        return 16.0 * case.value / (D * np.pi**6)
    if case.kind is OracleCase.LINE:
        return 8.0 * case.value / (D * np.pi**5)
    if case.kind is OracleCase.POINT:
        return 4.0 * case.value / (D * np.pi**4)
    raise OracleError(f"Case {case.kind.value} has no double series")


def _coefficients(case: NavierCase, terms: int) -> FloatArray:
    """a_mn (M×M)。u = Σ a_mn sin(mπx) sin(nπy)"""
    k = np.arange(1, terms + 1)
    m, n = k[:, None], k[None, :]
    weight = _sin_half(m) * _sin_half(n) / (m**2 + n**2) ** 2
    if case.kind is OracleCase.SQUARE:
        weight = weight * np.sin(m * np.pi * case.c) * np.sin(n * np.pi * case.d) / (m * n)
    elif case.kind is OracleCase.LINE:
        weight = weight * np.sin(n * np.pi * case.d) / n
    return _prefactor(case) * weight


def series_tail_bound(case: NavierCase, terms: int) -> float:
    """Σ_{max(m,n) > M} 1 / (m² + n²)² ≤ π / (4 M²) による打ち切り誤差の上界"""
    return abs(_prefactor(case)) * np.pi / (4.0 * terms**2)


def navier_deflection_many(
    case: NavierCase, x: FloatArray, y: FloatArray, terms: int | None = None
) -> FloatArray:
    """多数点での級数値（sin を変数分離して評価する）"""
    terms = terms or settings.PLATE_SERIES_TERMS
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    xs = np.broadcast_to(x, shape).ravel()
    ys = np.broadcast_to(y, shape).ravel()
    a = _coefficients(case, terms)
    k = np.arange(1, terms + 1) * np.pi
    out = np.empty(len(xs))
    for start in range(0, len(xs), _POINT_CHUNK):
        sl = slice(start, start + _POINT_CHUNK)
        sx = np.sin(np.outer(xs[sl], k))
        sy = np.sin(np.outer(ys[sl], k))
        out[sl] = np.einsum("pn,pn->p", sx @ a, sy)
    return out.reshape(shape)


def navier_deflection(
    case: NavierCase, x: float, y: float, terms: int | None = None
) -> SeriesValue:
    """
    Navier 二重級数 u(x, y) の部分和（1 ≤ m, n ≤ M）

    境界上の点 (x = 0 など) では sin が 0 なので厳密に 0。
    """
    terms = terms or settings.PLATE_SERIES_TERMS
    if terms < 1:
        raise OracleError("Number of series terms must be at least 1")
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise OracleError(f"Point ({x}, {y}) lies outside the unit square")
    k = np.arange(1, terms + 1)
    sx = np.where(x in (0.0, 1.0), 0.0, np.sin(k * np.pi * x))
    sy = np.where(y in (0.0, 1.0), 0.0, np.sin(k * np.pi * y))
    value = float(sx @ _coefficients(case, terms) @ sy)
    return SeriesValue(value=value, terms=terms, tail_bound=series_tail_bound(case, terms))


def _hyperbolic_factor(m: FloatArray) -> FloatArray:
    """(sinh mπ - mπ) / (1 + cosh mπ) = tanh(x/2) - 2x e^{-x} / (1 + e^{-x})²（x = mπ）"""
    x = m * np.pi
    e = np.exp(-x)
    return np.tanh(0.5 * x) - 2.0 * x * e / (1.0 + e) ** 2


def max_deflection_point_load(
    F0: float, material: Material, terms: int | None = None
) -> SeriesValue:
    """
    中央点荷重の中央たわみ u(1/2, 1/2) の単級数

    F0 / (2Dπ³) Σ_{奇数 m} f(m) / m³。M を超える項は f(m) → 1 として
    Σ_{奇数 m > M} 1/m³ = ζ(3, m0/2) / 8 を閉じた形で足す。
    """
    terms = terms or settings.PLATE_MAX_SERIES_TERMS
    if terms < 1:
        raise OracleError("Number of series terms must be at least 1")
    factor = F0 / (2.0 * material.D * np.pi**3)
    m = np.arange(1, terms + 1, 2, dtype=float)
    partial = float(np.sum(_hyperbolic_factor(m) / m**3))
    m0 = terms + 1 if terms % 2 == 0 else terms + 2
    remainder = float(zeta(3.0, m0 / 2.0)) / 8.0
    # |f(m) - 1| ≤ (2 + 2x) e^{-x}、隣接項の比は 3 e^{-2π} 以下
    x0 = m0 * np.pi
    ratio = 1.0 - 3.0 * np.exp(-2.0 * np.pi)
    tail = abs(factor) * (2.0 + 2.0 * x0) * np.exp(-x0) / (m0**3 * ratio)
    return SeriesValue(value=factor * (partial + remainder), terms=terms, tail_bound=tail)


def _radicand_root(radicand: float, truncation: float = 0.0) -> float:
    """
    sqrt(radicand)。

    truncation は級数の打ち切りが radicand に与えうる誤差の上界で、その範囲の負値は 0 とみなす。
    """
    if radicand < 0.0:
        if radicand < -(RADICAND_TOL + truncation):
            raise EnergyRadicandError(
                f"Energy error radicand {radicand:.3e} is negative; "
                "the solution does not belong to this load case"
            )
        return 0.0
    return float(np.sqrt(radicand))


def energy_error_point_load(
    solution: Solution, F0: float, material: Material, terms: int | None = None
) -> float:
    """|||u - u_h||| = sqrt(F0 (u(1/2, 1/2) - u_h(1/2, 1/2)))"""
    exact = max_deflection_point_load(F0, material, terms)
    approx = float(evaluate_solution(solution, np.array([CENTER])).value[0])
    logger.debug("center deflection exact=%.9f approx=%.9f", exact.value, approx)
    return _radicand_root(F0 * (exact.value - approx), abs(F0) * exact.tail_bound)


def energy_error_general(
    solution: Solution, case: NavierCase, terms: int | None = None
) -> float:
    """
    |||u - u_h||| = sqrt(l(u - u_h))

    分布荷重は荷重領域内の要素の積分点、線荷重は S 上の辺の積分点で級数を評価する
    （計算量は M² × 積分点数）。
    """
    if case.kind is OracleCase.POINT:
        return energy_error_point_load(solution, case.value, case.material)

    mesh = solution.mesh
    polys = solution_polynomials(solution)
    if case.kind is OracleCase.SQUARE:
        c = mesh.centroids
        inside = np.flatnonzero(
            (np.abs(c[:, 0] - 0.5) < case.c) & (np.abs(c[:, 1] - 0.5) < case.d)
        )
        x, y, w = map_triangle_rule(mesh, inside, triangle_quadrature())
        u_h = evaluate_on_elements(solution, inside, x, y, max_order=0, polynomials=polys).value
    else:
        start = np.array([0.5, 0.5 - case.d])
        end = np.array([0.5, 0.5 + case.d])
        edges = edges_on_segment(mesh.vertices, mesh.edges, start, end)
        if not len(edges):
            raise OracleError("No mesh edges lie on the line load")
        owners = mesh.edge_triangles[edges, 0]
        x, y, w = map_edge_rule(mesh, edges, edge_quadrature())
        u_h = evaluate_on_elements(solution, owners, x, y, max_order=0, polynomials=polys).value

    terms = terms or settings.PLATE_SERIES_TERMS
    u = navier_deflection_many(case, x, y, terms)
    radicand = case.value * float(np.sum(w * (u - u_h)))
    # 各点の級数誤差は tail_bound 以下なので、積分では重みの総和倍まで
    truncation = abs(case.value) * series_tail_bound(case, terms) * float(np.sum(w))
    return _radicand_root(radicand, truncation)


def energy_norm_difference(coarse: Solution, fine: Solution, material: Material) -> float:
    """
    |||u_coarse - u_fine|||（fine は coarse の細分メッシュ上の解）

    細かい要素はそれぞれ粗い要素 1 つに含まれるので、細かい要素の積分点で両方を評価する。
    """
    fine_mesh = fine.mesh
    ids = np.arange(fine_mesh.n_triangles)
    x, y, w = map_triangle_rule(fine_mesh, ids, triangle_quadrature())
    fine_h = evaluate_on_elements(fine, ids, x, y, max_order=2).hessian

    owners = locate_points(coarse.mesh, fine_mesh.centroids)
    coarse_h = evaluate_on_elements(coarse, owners, x, y, max_order=2).hessian

    d_xx, d_xy, d_yy = (fine_h[i] - coarse_h[i] for i in range(3))
    curvature = np.stack([d_xx, d_yy, d_xy])
    energy = np.einsum("anq,ab,bnq,nq->", curvature, bending_matrix(material), curvature, w)
    return float(np.sqrt(max(energy, 0.0)))


def point_load_case(problem: PlateProblem) -> NavierCase | None:
    """単純支持単位正方形の中央点荷重なら対応する NavierCase"""
    mesh = problem.mesh
    loads = problem.loads
    if loads.distributed or loads.line is not None or len(loads.points) != 1:
        return None
    if not np.allclose(loads.points[0].location, CENTER):
        return None
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    if not (np.allclose(lo, 0.0) and np.allclose(hi, 1.0)):
        return None
    if abs(float(mesh.areas.sum()) - 1.0) > 1e-12:
        return None
    boundary = mesh.edge_tags[mesh.is_boundary_edge]
    if not np.all(boundary == EDGE_TAG_CODES[EdgeTag.SIMPLY_SUPPORTED]):
        return None
    return NavierCase(
        kind=OracleCase.POINT, value=loads.points[0].magnitude, material=problem.material
    )
