import numpy as np
import pytest

from conftest import UNIT_SQUARE, square_mesh
from polynomial_fields import Polynomial2D
from constants.options import BcKind, BuiltinCase
from models.domains.plate import (
    DistributedLoad,
    LineLoad,
    LoadSpec,
    PlateProblem,
    PointLoad,
    Rectangle,
)
from services.business import assembly_service
from services.business.assembly_service import (
    assemble_load,
    assemble_stiffness,
    build_constraints,
    build_dof_map,
    evaluate_solution,
    solve_problem,
)
from services.business.case_service import build_problem, builtin_config
from services.business.element_service import interpolate
from services.business.mesh_service import (
    build_mesh,
    path_along,
    rectangle_grid,
    refine_uniform_red,
)
from services.platform.worker_pool import WorkerPool
from utils.errors import LoadPlacementError, SingularProblemError

EXACT_CENTER_DEFLECTION = 0.12668


def interpolated(mesh, coefficients):
    return interpolate(Polynomial2D(coefficients).jet, mesh)


@pytest.fixture
def ss_problem(grid_mesh, material):
    return PlateProblem(mesh=grid_mesh, material=material)


def test_dof_map_layout(grid_mesh):
    dofmap = build_dof_map(grid_mesh)
    assert dofmap.n_dofs == 70
    assert dofmap.element_dofs.shape == (8, 21)
    v0 = grid_mesh.triangles[0, 0]
    assert dofmap.element_dofs[0, :6].tolist() == dofmap.vertex_dofs(v0).tolist()
    assert dofmap.vertex_dofs(v0).tolist() == list(range(6 * v0, 6 * v0 + 6))
    e0 = int(grid_mesh.triangle_edges[0, 0])
    assert dofmap.element_dofs[0, 18] == dofmap.edge_dof(e0) == 54 + e0


def test_stiffness_is_symmetric_and_kills_affine_functions(ss_problem):
    dofmap = build_dof_map(ss_problem.mesh)
    K = assemble_stiffness(ss_problem, dofmap)
    assert abs(K - K.T).max() < 1e-12 * abs(K).max()
    affine = interpolated(ss_problem.mesh, {(0, 0): 0.3, (1, 0): -1.2, (0, 1): 0.7})
    assert np.abs(K @ affine).max() < 1e-10 * abs(K).max()


def test_stiffness_energy_of_quadratics(ss_problem, material):
    K = assemble_stiffness(ss_problem, build_dof_map(ss_problem.mesh))
    D = material.D
    xx = interpolated(ss_problem.mesh, {(2, 0): 1.0})
    assert xx @ K @ xx == pytest.approx(4.0 * D, rel=1e-10)
    xy = interpolated(ss_problem.mesh, {(1, 1): 1.0})
    assert xy @ K @ xy == pytest.approx(2.0 * (1.0 - material.nu) * D, rel=1e-10)


def test_assembly_does_not_depend_on_worker_count(ss_problem, monkeypatch):
    dofmap = build_dof_map(ss_problem.mesh)
    serial = assemble_stiffness(ss_problem, dofmap)
    monkeypatch.setattr(
        assembly_service, "get_pool", lambda: WorkerPool(max_workers=4, chunk_size=3)
    )
    threaded = assemble_stiffness(ss_problem, dofmap)
    assert (serial != threaded).nnz == 0


@pytest.mark.parametrize(
    ("kind", "constrained"), [(BcKind.CLAMPED, 52), (BcKind.SIMPLY_SUPPORTED, 32)]
)
def test_constraint_counts(kind, constrained, material):
    mesh = square_mesh(2, kind)
    problem = PlateProblem(mesh=mesh, material=material)
    constraints = build_constraints(problem, build_dof_map(mesh))
    assert constraints.n_constrained == constrained
    assert constraints.n_relations == constrained
    assert constraints.n_free == 70 - constrained
    product = (constraints.relations @ constraints.transform).toarray()
    np.testing.assert_allclose(product, 0.0, atol=1e-12)


def test_constraint_space_contains_admissible_functions(material):
    """x(1-x)y(1-y) は単純支持の拘束を満たす"""
    mesh = square_mesh(2)
    problem = PlateProblem(mesh=mesh, material=material)
    constraints = build_constraints(problem, build_dof_map(mesh))
    bubble = interpolated(mesh, {(1, 1): 1.0, (2, 1): -1.0, (1, 2): -1.0, (2, 2): 1.0})
    np.testing.assert_allclose(constraints.relations @ bubble, 0.0, atol=1e-12)


def test_load_totals(material):
    mesh = square_mesh(6, line=((0.5, 1 / 6), (0.5, 5 / 6)))
    ones = interpolated(mesh, {(0, 0): 1.0})
    region = Rectangle(x_min=1 / 6, x_max=5 / 6, y_min=1 / 6, y_max=5 / 6)
    cases = [
        (LoadSpec(distributed=(DistributedLoad(value=2.0),)), 2.0),
        (LoadSpec(distributed=(DistributedLoad(value=1.0, region=region),)), 4 / 9),
        (LoadSpec(line=LineLoad(polyline=((0.5, 1 / 6), (0.5, 5 / 6)), value=3.0)), 2.0),
        (LoadSpec(points=(PointLoad(location=(0.5, 0.5), magnitude=5.0),)), 5.0),
    ]
    for loads, total in cases:
        problem = PlateProblem(mesh=mesh, material=material, loads=loads)
        load = assemble_load(problem, build_dof_map(mesh))
        assert load @ ones == pytest.approx(total, rel=1e-12)


def test_point_load_goes_to_the_vertex_value(point_problem):
    load = assemble_load(point_problem, build_dof_map(point_problem.mesh))
    center = point_problem.mesh.vertex_at((0.5, 0.5))
    assert load[6 * center] == 1.0
    assert np.count_nonzero(load) == 1


def test_point_load_off_vertex_is_rejected(grid_mesh, material):
    with pytest.raises(LoadPlacementError):
        PlateProblem(
            mesh=grid_mesh,
            material=material,
            loads=LoadSpec(points=(PointLoad(location=(0.3, 0.3), magnitude=1.0),)),
        )


def test_point_load_solution_stays_below_series_value(point_problem):
    solution = solve_problem(point_problem)
    assert solution.diagnostics.method == "splu"
    assert solution.diagnostics.residual < 1e-10
    center = evaluate_solution(solution, np.array([[0.5, 0.5]])).value[0]
    assert 0.1 < center < EXACT_CENTER_DEFLECTION
    # 境界では 0
    edge = evaluate_solution(solution, np.array([[0.0, 0.3], [0.7, 1.0]])).value
    np.testing.assert_allclose(edge, 0.0, atol=1e-12)


def test_solution_is_symmetric(point_problem):
    solution = solve_problem(point_problem)
    pts = np.array([[0.2, 0.3], [0.3, 0.2], [0.8, 0.7], [0.7, 0.8]])
    values = evaluate_solution(solution, pts).value
    assert values[0] == pytest.approx(values[1], rel=1e-9)
    assert values[0] == pytest.approx(values[2], rel=1e-9)
    assert values[2] == pytest.approx(values[3], rel=1e-9)


def test_zero_load_is_solved_without_factorization(ss_problem):
    solution = solve_problem(ss_problem)
    assert solution.diagnostics.method == "empty"
    assert not solution.coefficients.any()


def test_free_plate_requires_pinning(material):
    vertices, triangles = rectangle_grid(2, 2)
    boundary = [(path_along(vertices, UNIT_SQUARE), BcKind.FREE)]
    mesh = build_mesh(vertices, triangles, boundary)
    loads = LoadSpec(distributed=(DistributedLoad(value=1.0),))
    with pytest.raises(SingularProblemError):
        PlateProblem(mesh=mesh, material=material, loads=loads)

    problem = PlateProblem(mesh=mesh, material=material, loads=loads, allow_singular=True)
    solution = solve_problem(problem)
    assert np.isfinite(solution.coefficients).all()
    np.testing.assert_array_equal(solution.coefficients[:3], 0.0)


@pytest.mark.parametrize("case", list(BuiltinCase))
def test_builtin_cases_solve(case):
    problem = build_problem(builtin_config(case))
    solution = solve_problem(problem)
    assert solution.diagnostics.residual < 1e-8
    assert solution.coefficients[solution.dofmap.value_dofs].max() > 0.0


@pytest.fixture
def mixed_problem(material):
    """単純支持、分布・線・点荷重をすべて含む"""
    line = ((0.5, 1 / 6), (0.5, 5 / 6))
    region = Rectangle(x_min=1 / 6, x_max=5 / 6, y_min=1 / 6, y_max=5 / 6)
    loads = LoadSpec(
        distributed=(DistributedLoad(value=1.0, region=region),),
        line=LineLoad(polyline=line, value=0.5),
        points=(PointLoad(location=(0.5, 0.5), magnitude=2.0),),
    )
    return PlateProblem(mesh=square_mesh(6, line=line), material=material, loads=loads)


def test_galerkin_residual_vanishes_on_admissible_functions(mixed_problem, rng):
    dofmap = build_dof_map(mixed_problem.mesh)
    K = assemble_stiffness(mixed_problem, dofmap)
    load = assemble_load(mixed_problem, dofmap)
    constraints = build_constraints(mixed_problem, dofmap)
    u = solve_problem(mixed_problem).coefficients

    admissible = constraints.expand(rng.standard_normal((constraints.n_free, 20)))
    np.testing.assert_allclose(constraints.relations @ admissible, 0.0, atol=1e-10)
    # a(u_h, v_h) = l(v_h)
    work = admissible.T @ load
    np.testing.assert_allclose(admissible.T @ (K @ u), work, atol=1e-8 * np.abs(work).max())


def test_solution_is_linear_in_the_load(point_problem):
    single = solve_problem(point_problem).coefficients
    doubled = PlateProblem(
        mesh=point_problem.mesh,
        material=point_problem.material,
        loads=point_problem.loads.scaled(2.0),
    )
    np.testing.assert_allclose(
        solve_problem(doubled).coefficients, 2.0 * single, atol=1e-12 * np.abs(single).max()
    )


def test_point_load_solution_is_mirror_symmetric(point_problem):
    fine = point_problem.with_mesh(refine_uniform_red(point_problem.mesh))
    solution = solve_problem(fine)
    left = np.array([[0.2, 0.3], [0.1, 0.65], [0.35, 0.9]])
    right = left.copy()
    right[:, 0] = 1.0 - right[:, 0]
    a = evaluate_solution(solution, left, max_order=1)
    b = evaluate_solution(solution, right, max_order=1)
    np.testing.assert_allclose(a.value, b.value, rtol=1e-8)
    np.testing.assert_allclose(a.gradient[0], -b.gradient[0], rtol=1e-7, atol=1e-12)
    np.testing.assert_allclose(a.gradient[1], b.gradient[1], rtol=1e-7, atol=1e-12)
