import numpy as np
import pytest

from conftest import UNIT_SQUARE, square_mesh
from polynomial_fields import Polynomial2D
from constants.options import BcKind, BuiltinCase, EdgeTag, IndicatorTerm
from models.domains.plate import DistributedLoad, LoadSpec, Material, PlateProblem
from services.business.assembly_service import solution_from_coefficients, solve_problem
from services.business.case_service import build_problem, builtin_config
from services.business.element_service import interpolate
from services.business.estimator_service import (
    edge_indicator,
    edge_jump_data,
    element_oscillation,
    element_residual,
    global_estimate,
    oscillation,
)
from services.business.mesh_service import (
    build_mesh,
    path_along,
    rectangle_grid,
    refine_marked,
    refine_uniform_red,
)
from utils.errors import PlateError


@pytest.fixture
def manufactured(material, rng):
    """固定境界の板と、Δ² が定数になる 4 次多項式の補間"""
    mesh = refine_marked(square_mesh(2, BcKind.CLAMPED), {0, 3})
    poly = Polynomial2D.random(4, rng)
    f = material.D * poly.biharmonic()(0.0, 0.0)
    problem = PlateProblem(
        mesh=mesh,
        material=material,
        loads=LoadSpec(distributed=(DistributedLoad(value=float(f)),)),
    )
    return problem, solution_from_coefficients(mesh, interpolate(poly.jet, mesh))


def test_exact_polynomial_has_no_residual(manufactured):
    problem, solution = manufactured
    report = global_estimate(solution, problem)
    assert report.eta <= 1e-7
    assert element_residual(solution, problem, 0) <= 1e-8
    assert report.osc_f == pytest.approx(0.0, abs=1e-14)


def test_clamped_edges_contribute_nothing(manufactured):
    problem, solution = manufactured
    for e in problem.mesh.edges_with_tag(EdgeTag.CLAMPED):
        assert edge_indicator(solution, problem, int(e)) == (0.0, 0.0)


def test_smooth_field_has_no_jumps(manufactured):
    problem, solution = manufactured
    e = int(problem.mesh.interior_edges[0])
    data = edge_jump_data(solution, problem, e)
    assert not data.is_boundary
    np.testing.assert_allclose(data.moment, 0.0, atol=1e-8)
    np.testing.assert_allclose(data.shear, 0.0, atol=1e-7)


def test_localized_indicators_add_up(point_problem):
    solution = solve_problem(point_problem)
    report = global_estimate(solution, point_problem)
    assert report.eta > 0.0
    assert report.eta_K.shape == (point_problem.mesh.n_triangles,)
    assert np.sum(report.eta_K**2) == pytest.approx(report.eta_squared, rel=1e-12)
    assert sum(report.totals.values()) == pytest.approx(report.eta_squared, rel=1e-12)
    for term in IndicatorTerm:
        expected = pytest.approx(report.totals[term], rel=1e-12, abs=1e-30)
        assert report.breakdown.term(term).sum() == expected
    assert report.totals[IndicatorTerm.LINE_LOAD] == 0.0


def test_simply_supported_edges_carry_only_the_moment(point_problem):
    solution = solve_problem(point_problem)
    e = int(point_problem.mesh.edges_with_tag(EdgeTag.SIMPLY_SUPPORTED)[0])
    moment, shear = edge_indicator(solution, point_problem, e)
    assert moment > 0.0
    assert shear == 0.0


def test_line_load_term_is_reported():
    problem = build_problem(builtin_config(BuiltinCase.LINE))
    report = global_estimate(solve_problem(problem), problem)
    assert report.totals[IndicatorTerm.LINE_LOAD] > 0.0
    assert report.osc_g == pytest.approx(0.0, abs=1e-14)


def test_mismatched_mesh_is_rejected(point_problem, grid_mesh, material):
    solution = solve_problem(point_problem)
    other = PlateProblem(mesh=refine_uniform_red(grid_mesh), material=material)
    with pytest.raises(PlateError):
        global_estimate(solution, other)


def test_oscillation_of_linear_density_scales_with_h_cubed(grid_mesh, material):
    def density(x, y):
        return x + 2.0 * y

    coarse = np.sqrt(np.sum(element_oscillation(grid_mesh, density) ** 2))
    fine_mesh = refine_uniform_red(grid_mesh)
    fine = np.sqrt(np.sum(element_oscillation(fine_mesh, density) ** 2))
    assert coarse > 0.0
    assert fine / coarse == pytest.approx(1 / 8, rel=1e-9)

    problem = PlateProblem(mesh=grid_mesh, material=material)
    assert oscillation(problem) == (0.0, 0.0)


@pytest.mark.parametrize("h", [1.0, 0.5, 0.25])
def test_shear_jump_of_piecewise_cubic(h):
    """
    左要素で x³、右要素で 0 の場: x = 0 の辺で ⟦V_n⟧ = 6D、⟦M_nn⟧ = 0

    長さ h の辺では h^{3/2} ‖6D‖_{0,E} = 6D h²。
    """
    material = Material(E=1.0, nu=0.0, thickness=12.0 ** (1 / 3))
    vertices, triangles = rectangle_grid(2, 1, (-h, h), (0.0, h))
    corners = ((-h, 0.0), (h, 0.0), (h, h), (-h, h), (-h, 0.0))
    mesh = build_mesh(vertices, triangles, [(path_along(vertices, corners), BcKind.CLAMPED)])
    problem = PlateProblem(mesh=mesh, material=material)

    def jet(x, y):
        left = np.asarray(x) < 0
        zero = np.zeros_like(np.asarray(x, dtype=float))
        cubic = [x**3, 3 * x**2, zero, 6 * x, zero, zero]
        return np.stack([np.where(left, c, 0.0) for c in cubic])

    solution = solution_from_coefficients(mesh, interpolate(jet, mesh))
    middle = np.flatnonzero(
        (np.abs(mesh.vertices[mesh.edges, 0]) < 1e-12).all(axis=1)
    )
    assert len(middle) == 1
    moment, shear = edge_indicator(solution, problem, int(middle[0]))
    assert material.D == pytest.approx(1.0)
    assert moment == pytest.approx(0.0, abs=1e-9)
    assert mesh.edge_lengths[middle[0]] == pytest.approx(h)
    assert shear == pytest.approx(6.0 * h**2, rel=1e-9)


def test_point_load_does_not_enter_the_indicators(point_problem):
    solution = solve_problem(point_problem)
    unloaded = PlateProblem(mesh=point_problem.mesh, material=point_problem.material)
    loaded = global_estimate(solution, point_problem)
    assert global_estimate(solution, unloaded).eta == pytest.approx(loaded.eta, rel=1e-12)


def test_indicators_do_not_depend_on_numbering(point_problem, rng):
    """要素の並べ替えと頂点番号の反転（全辺の向きが逆になる）で η_K は不変"""
    mesh = point_problem.mesh
    perm = rng.permutation(mesh.n_triangles)
    reverse = mesh.n_vertices - 1 - np.arange(mesh.n_vertices)
    vertices = np.empty_like(mesh.vertices)
    vertices[reverse] = mesh.vertices
    triangles = reverse[mesh.triangles[perm]]
    boundary = [(path_along(vertices, UNIT_SQUARE), BcKind.SIMPLY_SUPPORTED)]
    relabelled = build_mesh(vertices, triangles, boundary)
    problem = point_problem.with_mesh(relabelled)

    same = np.all(np.isclose(relabelled.edge_midpoints, mesh.edge_midpoints[0]), axis=1)
    np.testing.assert_allclose(relabelled.edge_normals[same][0], -mesh.edge_normals[0])

    before = global_estimate(solve_problem(point_problem), point_problem)
    after = global_estimate(solve_problem(problem), problem)
    assert after.eta == pytest.approx(before.eta, rel=1e-9)
    np.testing.assert_allclose(after.eta_K, before.eta_K[perm], rtol=1e-8)


def test_element_residual_is_weighted_by_twice_the_area(grid_mesh, material):
    """u_h = 0, f = 1: h_K² ‖f‖_{0,K} = 2|K| · |K|^{1/2}"""
    loads = LoadSpec(distributed=(DistributedLoad(value=1.0),))
    problem = PlateProblem(mesh=grid_mesh, material=material, loads=loads)
    zero = solution_from_coefficients(grid_mesh, np.zeros(grid_mesh.n_dofs))
    area = grid_mesh.areas[0]
    assert area == pytest.approx(1 / 8)
    assert element_residual(zero, problem, 0) == pytest.approx(2.0 * area**1.5, rel=1e-12)
