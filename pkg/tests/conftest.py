import numpy as np
import pytest

from constants.options import BcKind, BuiltinCase
from models.domains.plate import Material, PlateProblem
from services.business.case_service import build_problem, builtin_config
from services.business.mesh_service import build_mesh, path_along, rectangle_grid

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0))


@pytest.fixture
def material() -> Material:
    """E = 1, ν = 0.3, d = 1（D = 1 / 10.92）"""
    return Material(E=1.0, nu=0.3, thickness=1.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def square_mesh(n: int, kind: BcKind = BcKind.SIMPLY_SUPPORTED, line=None):
    vertices, triangles = rectangle_grid(n, n)
    return build_mesh(
        vertices,
        triangles,
        [(path_along(vertices, UNIT_SQUARE), kind)],
        line_load_polyline=line,
    )


@pytest.fixture
def grid_mesh():
    """3×3 頂点の単純支持単位正方形（8 要素, N = 70）"""
    return square_mesh(2)


@pytest.fixture
def point_problem() -> PlateProblem:
    return build_problem(builtin_config(BuiltinCase.POINT))

