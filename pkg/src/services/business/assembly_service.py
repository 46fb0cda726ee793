"""Global DOF numbering, stiffness/load assembly, constraint elimination and the solve."""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from constants.options import EDGE_TAG_CODES, EdgeTag
from constants.types import FloatArray, IntArray
from models.domains.assembly import (
    ConstraintSet,
    DofMap,
    LinearSystem,
    Solution,
    SolverDiagnostics,
)
from models.domains.element import DerivativeBundle, ElementBasis
from models.domains.mesh import Mesh
from models.domains.plate import PlateProblem
from services.business.element_service import (
    build_element_basis,
    eval_derivatives,
    eval_field,
    local_polynomials,
    map_edge_rule,
    map_triangle_rule,
)
from services.business.mechanics_service import bending_matrix
from services.business.mesh_service import locate_points
from services.platform.worker_pool import get_pool
from utils.errors import SingularSystemError
from utils.quadrature import edge_quadrature, triangle_quadrature

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10
CG_RTOL = 1e-12
MIN_PIVOT = 1e-14


# =====================================================================
# DOF map
# =====================================================================
def build_dof_map(mesh: Mesh) -> DofMap:
    n_v = mesh.n_vertices
    vertex_part = (6 * mesh.triangles[:, :, None] + np.arange(6)[None, None, :]).reshape(-1, 18)
    edge_part = 6 * n_v + mesh.triangle_edges
    return DofMap(
        n_vertices=n_v,
        n_edges=mesh.n_edges,
        element_dofs=np.concatenate([vertex_part, edge_part], axis=1),
    )


# =====================================================================
# assembly
# =====================================================================
def assemble_stiffness(
    problem: PlateProblem, dofmap: DofMap, basis: ElementBasis | None = None
) -> sp.csr_matrix:
    """
    剛性行列 a(φ_i, φ_j) = ∫ D [w_xx v_xx + w_yy v_yy + ν(w_xx v_yy + w_yy v_xx) + 2(1-ν) w_xy v_xy]

    要素行列は要素 ID 順に連結して COO から合算するので、ワーカー数によらず同じ結果になる。
    """
    mesh = problem.mesh
    basis = basis or build_element_basis(mesh)
    rule = triangle_quadrature()
    dmat = bending_matrix(problem.material)

    def element_matrices(block: range) -> FloatArray:
        ids = np.arange(block.start, block.stop)
        x, y, w = map_triangle_rule(mesh, ids, rule)
        u_xx, u_xy, u_yy = eval_derivatives(basis, ids, x, y, max_order=2).hessian
        curvature = np.stack([u_xx, u_yy, u_xy])  # (3, n, Q, 21)
        stressed = np.einsum("ab,bnqj->anqj", dmat, curvature)
        ke = np.einsum("anqi,anqj,nq->nij", curvature, stressed, w)
        return 0.5 * (ke + ke.transpose(0, 2, 1))

    blocks = get_pool().map_chunks(element_matrices, mesh.n_triangles)
    data = np.concatenate(blocks).ravel()
    dofs = dofmap.element_dofs
    rows = np.broadcast_to(dofs[:, :, None], (len(dofs), 21, 21)).ravel()
    cols = np.broadcast_to(dofs[:, None, :], (len(dofs), 21, 21)).ravel()
    n = dofmap.n_dofs
    stiffness = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    logger.debug("assembled stiffness ndofs=%d nnz=%d", n, stiffness.nnz)
    return stiffness


def assemble_load(
    problem: PlateProblem, dofmap: DofMap, basis: ElementBasis | None = None
) -> FloatArray:
    """
    荷重ベクトル l(φ_i) = (f, φ_i) + <g, φ_i>_S + Σ F φ_i(x0)

    点荷重は双対性により頂点値自由度にそのまま F を加える。
    """
    mesh = problem.mesh
    basis = basis or build_element_basis(mesh)
    n = dofmap.n_dofs
    rows: list[IntArray] = []
    values: list[FloatArray] = []

    f_elem = problem.element_load()
    loaded = np.flatnonzero(f_elem != 0.0)
    if len(loaded):
        x, y, w = map_triangle_rule(mesh, loaded, triangle_quadrature())
        phi = eval_derivatives(basis, loaded, x, y, max_order=0).value  # (n, Q, 21)
        local = np.einsum("nqk,nq->nk", phi, w) * f_elem[loaded][:, None]
        rows.append(dofmap.element_dofs[loaded].ravel())
        values.append(local.ravel())

    if problem.loads.line is not None and len(mesh.line_load_edges):
        edges = mesh.line_load_edges
        owners = mesh.edge_triangles[edges, 0]
        x, y, w = map_edge_rule(mesh, edges, edge_quadrature())
        phi = eval_derivatives(basis, owners, x, y, max_order=0).value
        g = problem.loads.line_density(x, y)
        local = np.einsum("nqk,nq->nk", phi, w * g)
        rows.append(dofmap.element_dofs[owners].ravel())
        values.append(local.ravel())

    for vertex, magnitude in problem.point_load_vertices():
        rows.append(np.array([6 * vertex]))
        values.append(np.array([magnitude]))

    if not rows:
        return np.zeros(n)
    return np.bincount(np.concatenate(rows), weights=np.concatenate(values), minlength=n)


# =====================================================================
# constraints
# =====================================================================
def _unit(v: FloatArray) -> FloatArray:
    return v / np.linalg.norm(v)


def _vertex_relations(kind: int, s: FloatArray, n: FloatArray) -> list[FloatArray]:
    """境界辺の端点での関係式（頂点 6 自由度 (値, dx, dy, dxx, dxy, dyy) の係数）"""
    sx, sy = s
    nx, ny = n
    rows = [np.array([1.0, 0, 0, 0, 0, 0])]
    d_ss = np.array([0, 0, 0, sx * sx, 2 * sx * sy, sy * sy])
    if kind == EDGE_TAG_CODES[EdgeTag.CLAMPED]:
        rows += [
            np.array([0, 1.0, 0, 0, 0, 0]),
            np.array([0, 0, 1.0, 0, 0, 0]),
            d_ss,
            np.array([0, 0, 0, sx * nx, sx * ny + sy * nx, sy * ny]),
        ]
    else:
        rows += [np.array([0, sx, sy, 0, 0, 0]), d_ss]
    return [_unit(r) for r in rows]


def _reduce_vertex(relations: FloatArray) -> tuple[IntArray, IntArray, FloatArray, FloatArray]:
    """
    ピボット付き QR による階数落とし

    Returns:
        従属な局所自由度, 自由な局所自由度, 従属 = coupling @ 自由 の係数, 独立な関係式の行
    """
    r_mat, perm = la.qr(relations, mode="r", pivoting=True)
    diag = np.abs(np.diag(r_mat))
    rank = int(np.sum(diag > RANK_TOL * max(1.0, diag[0])))
    dependent, free = perm[:rank], perm[rank:]
    r11 = r_mat[:rank, :rank]
    r12 = r_mat[:rank, rank:]
    coupling = -la.solve_triangular(r11, r12) if len(free) else np.zeros((rank, 0))
    rows = np.zeros((rank, 6))
    rows[:, perm] = r_mat[:rank]
    return dependent, free, coupling, rows


def build_constraints(problem: PlateProblem, dofmap: DofMap) -> ConstraintSet:
    """
    固定・単純支持辺の本質境界条件を頂点ごとに集め、階数落としして消去用の基底を作る

    固定辺: 両端で u = ∇u = ∂ss u = ∂sn u = 0、辺の法線自由度 = 0
    単純支持辺: 両端で u = ∂s u = ∂ss u = 0
    """
    mesh = problem.mesh
    n = dofmap.n_dofs
    clamped = EDGE_TAG_CODES[EdgeTag.CLAMPED]
    supported = EDGE_TAG_CODES[EdgeTag.SIMPLY_SUPPORTED]

    per_vertex: dict[int, list[FloatArray]] = {}
    fixed_edges: list[int] = []
    for e in np.flatnonzero(np.isin(mesh.edge_tags, [clamped, supported])):
        kind = int(mesh.edge_tags[e])
        rows = _vertex_relations(kind, mesh.edge_tangents[e], mesh.edge_normals[e])
        for v in mesh.edges[e]:
            per_vertex.setdefault(int(v), []).extend(rows)
        if kind == clamped:
            fixed_edges.append(int(e))

    if not per_vertex and problem.allow_singular:
        # 剛体変位を止めるため最小 ID 頂点の値と勾配を固定
        per_vertex[0] = [np.eye(6)[k] for k in range(3)]
        logger.info("pure free boundary: pinning vertex 0 value and gradient")

    dependent_dofs: list[int] = []
    coupling_entries: list[tuple[int, int, float]] = []  # (従属, 自由, 係数)
    relation_rows: list[tuple[int, int, float]] = []
    n_rel = 0
    for v in sorted(per_vertex):
        dep, free, coupling, rows = _reduce_vertex(np.array(per_vertex[v]))
        base = 6 * v
        dependent_dofs.extend(base + dep)
        for i, d in enumerate(dep):
            for j, f in enumerate(free):
                if coupling[i, j] != 0.0:
                    coupling_entries.append((base + d, base + f, coupling[i, j]))
        for row in rows:
            for k in np.flatnonzero(row):
                relation_rows.append((n_rel, base + k, row[k]))
            n_rel += 1
    for e in fixed_edges:
        dof = dofmap.edge_dof(e)
        dependent_dofs.append(dof)
        relation_rows.append((n_rel, dof, 1.0))
        n_rel += 1

    dependent = np.array(sorted(dependent_dofs), dtype=np.int64)
    is_free = np.ones(n, dtype=bool)
    is_free[dependent] = False
    free_dofs = np.flatnonzero(is_free)
    column = np.full(n, -1, dtype=np.int64)
    column[free_dofs] = np.arange(len(free_dofs))

    t_rows = list(free_dofs) + [d for d, _, _ in coupling_entries]
    t_cols = list(column[free_dofs]) + [column[f] for _, f, _ in coupling_entries]
    t_vals = [1.0] * len(free_dofs) + [c for _, _, c in coupling_entries]
    transform = sp.coo_matrix((t_vals, (t_rows, t_cols)), shape=(n, len(free_dofs))).tocsr()

    if relation_rows:
        r, c, val = zip(*relation_rows)
        relations = sp.coo_matrix((val, (r, c)), shape=(n_rel, n)).tocsr()
    else:
        relations = sp.csr_matrix((0, n))

    constraints = ConstraintSet(
        relations=relations,
        transform=transform,
        free_dofs=free_dofs,
        dependent_dofs=dependent,
    )
    logger.debug(
        "constraints relations=%d constrained=%d free=%d",
        constraints.n_relations,
        constraints.n_constrained,
        constraints.n_free,
    )
    return constraints


def reduce_system(
    stiffness: sp.csr_matrix, load: FloatArray, constraints: ConstraintSet
) -> LinearSystem:
    t = constraints.transform
    matrix = (t.T @ stiffness @ t).tocsr()
    matrix = (0.5 * (matrix + matrix.T)).tocsr()
    return LinearSystem(matrix=matrix, rhs=t.T @ load)


# =====================================================================
# solve
# =====================================================================
def _relative_residual(matrix: sp.csr_matrix, x: FloatArray, rhs: FloatArray) -> float:
    norm = float(np.linalg.norm(rhs))
    res = float(np.linalg.norm(matrix @ x - rhs))
    return res / norm if norm > 0 else res


def _solve_reduced(system: LinearSystem) -> tuple[FloatArray, SolverDiagnostics]:
    matrix, rhs = system.matrix, system.rhs
    n = system.size
    if n == 0:
        return np.zeros(0), SolverDiagnostics(method="empty", n_free=0, residual=0.0)
    if not np.any(rhs):
        return np.zeros(n), SolverDiagnostics(method="empty", n_free=n, residual=0.0)

    diag = matrix.diagonal()
    if (diag <= 0).any():
        raise SingularSystemError(
            f"Reduced stiffness has {int((diag <= 0).sum())} non-positive diagonal entries; "
            "the constraints do not remove all rigid motions"
        )
    scale = 1.0 / np.sqrt(diag)
    scaling = sp.diags(scale)
    scaled = (scaling @ matrix @ scaling).tocsc()
    b = scale * rhs

    try:
        lu = spla.splu(
            scaled,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
        pivots = lu.U.diagonal()
        min_pivot = float(pivots.min())
        if min_pivot <= MIN_PIVOT:
            raise RuntimeError(f"non-positive pivot {min_pivot:.3e}")
        y = lu.solve(b)
        y = y + lu.solve(b - scaled @ y)  # 反復改良 1 回
        x = scale * y
        return x, SolverDiagnostics(
            method="splu",
            n_free=n,
            residual=_relative_residual(matrix, x, rhs),
            min_pivot=min_pivot,
            refined=True,
        )
    except RuntimeError as exc:
        logger.warning("direct factorization failed, falling back to cg reason=%s", exc)

    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    y, info = spla.cg(scaled, b, rtol=CG_RTOL, maxiter=10 * n, callback=count)
    x = scale * y
    residual = _relative_residual(matrix, x, rhs)
    if info != 0 or not np.isfinite(residual) or residual > 1e-8:
        raise SingularSystemError(
            f"Reduced system is singular or indefinite (cg info={info}, residual={residual:.3e}); "
            "check that the boundary constrains the plate"
        )
    return x, SolverDiagnostics(method="cg", n_free=n, residual=residual, iterations=iterations)


def solve(
    stiffness: sp.csr_matrix,
    load: FloatArray,
    constraints: ConstraintSet,
    *,
    mesh: Mesh,
    dofmap: DofMap,
    basis: ElementBasis,
) -> Solution:
    """
    拘束を消去した対称正定値系を解き、全自由度の係数を返す

    Raises:
        SingularSystemError: 縮約系が特異または不定
    """
    system = reduce_system(stiffness, load, constraints)
    reduced, diagnostics = _solve_reduced(system)
    coefficients = constraints.expand(reduced)
    logger.debug(
        "solved ndofs=%d free=%d method=%s residual=%.3e",
        dofmap.n_dofs,
        diagnostics.n_free,
        diagnostics.method,
        diagnostics.residual,
    )
    return Solution(
        mesh=mesh,
        dofmap=dofmap,
        basis=basis,
        coefficients=coefficients,
        diagnostics=diagnostics,
    )


def solve_problem(problem: PlateProblem) -> Solution:
    """組み立てから求解までをまとめて行う"""
    mesh = problem.mesh
    dofmap = build_dof_map(mesh)
    basis = build_element_basis(mesh)
    stiffness = assemble_stiffness(problem, dofmap, basis)
    load = assemble_load(problem, dofmap, basis)
    constraints = build_constraints(problem, dofmap)
    return solve(stiffness, load, constraints, mesh=mesh, dofmap=dofmap, basis=basis)


def solution_from_coefficients(mesh: Mesh, coefficients: FloatArray) -> Solution:
    """補間などで得た係数ベクトルを Solution として扱う"""
    return Solution(
        mesh=mesh,
        dofmap=build_dof_map(mesh),
        basis=build_element_basis(mesh),
        coefficients=coefficients,
    )


# =====================================================================
# evaluation
# =====================================================================
def solution_polynomials(solution: Solution) -> FloatArray:
    """(T, 21) 要素ごとの局所単項式係数"""
    return local_polynomials(solution.basis, solution.element_coefficients())


def evaluate_on_elements(
    solution: Solution,
    element_ids: IntArray,
    x: FloatArray,
    y: FloatArray,
    max_order: int = 2,
    polynomials: FloatArray | None = None,
) -> DerivativeBundle:
    """要素ごとの点集合 (n, Q) での導関数。data は (成分, n, Q)"""
    polys = solution_polynomials(solution) if polynomials is None else polynomials
    return eval_field(solution.basis, polys, element_ids, x, y, max_order)


def evaluate_solution(
    solution: Solution, points: FloatArray, max_order: int = 0
) -> DerivativeBundle:
    """
    任意の点での導関数。data は (成分, 点数)

    Raises:
        PointLocationError: 領域外の点がある
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    owners = locate_points(solution.mesh, pts)
    bundle = evaluate_on_elements(
        solution, owners, pts[:, 0:1], pts[:, 1:2], max_order=max_order
    )
    return DerivativeBundle(data=bundle.data[:, :, 0], max_order=max_order)
