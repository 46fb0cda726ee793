"""Built-in experiment configurations and conversion of run configurations into problems."""

from __future__ import annotations

import logging
from collections.abc import Sequence

from pydantic import ValidationError

from constants.options import BcKind, BuiltinCase
from constants.types import Point
from models.domains.plate import (
    DistributedLoad,
    LineLoad,
    LoadSpec,
    Material,
    PlateProblem,
    PointLoad,
    Rectangle,
)
from models.dto.config import (
    BoundaryConfig,
    DistributedConfig,
    GeometryConfig,
    LineConfig,
    LoadsConfig,
    PointConfig,
    RegionConfig,
    RunConfig,
    StudySection,
)
from models.dto.study import MarkingParams, StudyConfig
from services.business.mesh_service import build_mesh, path_along, rectangle_grid
from utils.errors import ConfigError, MeshError, ProblemError

logger = logging.getLogger(__name__)

UNIT_SQUARE: tuple[Point, ...] = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0))
# [0,2]² から (1,2]×(1,2] を除いた L 字（凹角は (1, 1)）
L_SHAPE: tuple[Point, ...] = (
    (0.0, 0.0),
    (2.0, 0.0),
    (2.0, 1.0),
    (1.0, 1.0),
    (1.0, 2.0),
    (0.0, 2.0),
    (0.0, 0.0),
)
# 凹角を挟む 2 辺
L_REENTRANT: tuple[Point, ...] = ((2.0, 1.0), (1.0, 1.0), (1.0, 2.0))
L_OUTER: tuple[Point, ...] = ((1.0, 2.0), (0.0, 2.0), (0.0, 0.0), (2.0, 0.0), (2.0, 1.0))

_DEFAULT_MAX_DOFS: dict[BuiltinCase, int] = {
    BuiltinCase.POINT: 3000,
    BuiltinCase.LINE: 6000,
    BuiltinCase.SQUARE: 6000,
    BuiltinCase.LSHAPE_SS: 10000,
    BuiltinCase.LSHAPE_CC: 10000,
    BuiltinCase.LSHAPE_FREE: 10000,
}


def _geometry(
    vertices, triangles, boundary: Sequence[tuple[Sequence[Point], BcKind]]
) -> GeometryConfig:
    return GeometryConfig(
        vertices=[(float(x), float(y)) for x, y in vertices],
        triangles=[tuple(int(v) for v in tri) for tri in triangles],
        boundary=[
            BoundaryConfig(path=path_along(vertices, corners), kind=kind)
            for corners, kind in boundary
        ],
    )


def _unit_square_geometry(n: int) -> GeometryConfig:
    vertices, triangles = rectangle_grid(n, n, crossed=True)
    return _geometry(vertices, triangles, [(UNIT_SQUARE, BcKind.SIMPLY_SUPPORTED)])


def _l_shape_geometry(case: BuiltinCase) -> GeometryConfig:
    vertices, triangles = rectangle_grid(
        8, 8, (0.0, 2.0), (0.0, 2.0), keep_cell=lambda i, j: not (i >= 4 and j >= 4)
    )
    if case is BuiltinCase.LSHAPE_SS:
        boundary = [(L_SHAPE, BcKind.SIMPLY_SUPPORTED)]
    elif case is BuiltinCase.LSHAPE_CC:
        boundary = [(L_SHAPE, BcKind.CLAMPED)]
    else:
        boundary = [(L_REENTRANT, BcKind.FREE), (L_OUTER, BcKind.SIMPLY_SUPPORTED)]
    return _geometry(vertices, triangles, boundary)


def builtin_config(case: BuiltinCase) -> RunConfig:
    """
    組み込みケースの実行設定（E = 1, ν = 0.3, 板厚 1）

    point: 3×3 頂点の単位正方形（対角線は中心で交差）、中央に F0 = 1
    line: 7×7 頂点、x = 1/2, y ∈ [1/6, 5/6] に g0 = 1
    square: 7×7 頂点、[1/6, 5/6]² に f0 = 1
    lshape_*: h = 1/4 の L 字に f = 1（境界条件 3 通り）
    """
    if case is BuiltinCase.POINT:
        geometry = _unit_square_geometry(2)
        loads = LoadsConfig(points=[PointConfig(location=(0.5, 0.5), magnitude=1.0)])
    elif case is BuiltinCase.LINE:
        geometry = _unit_square_geometry(6)
        loads = LoadsConfig(line=LineConfig(polyline=[(0.5, 1 / 6), (0.5, 5 / 6)], value=1.0))
    elif case is BuiltinCase.SQUARE:
        geometry = _unit_square_geometry(6)
        region = RegionConfig(x_min=1 / 6, x_max=5 / 6, y_min=1 / 6, y_max=5 / 6)
        loads = LoadsConfig(distributed=[DistributedConfig(value=1.0, region=region)])
    else:
        geometry = _l_shape_geometry(case)
        loads = LoadsConfig(distributed=[DistributedConfig(value=1.0)])

    return RunConfig(
        name=case.value,
        geometry=geometry,
        loads=loads,
        study=StudySection(max_dofs=_DEFAULT_MAX_DOFS[case]),
    )


def _load_spec(loads: LoadsConfig) -> LoadSpec:
    return LoadSpec(
        distributed=tuple(
            DistributedLoad(
                value=d.value,
                region=None if d.region is None else Rectangle(**d.region.model_dump()),
            )
            for d in loads.distributed
        ),
        line=(
            None
            if loads.line is None
            else LineLoad(polyline=tuple(loads.line.polyline), value=loads.line.value)
        ),
        points=tuple(PointLoad(location=p.location, magnitude=p.magnitude) for p in loads.points),
    )


def build_problem(config: RunConfig) -> PlateProblem:
    """
    実行設定から PlateProblem を作る

    Raises:
        ConfigError: メッシュや荷重の配置が不正
    """
    geometry = config.geometry
    try:
        mesh = build_mesh(
            geometry.vertices,
            geometry.triangles,
            [(b.path, b.kind) for b in geometry.boundary],
            line_load_polyline=None if config.loads.line is None else config.loads.line.polyline,
        )
        problem = PlateProblem(
            mesh=mesh,
            material=Material(**config.material.model_dump()),
            loads=_load_spec(config.loads),
            allow_singular=config.allow_singular,
        )
    except (MeshError, ProblemError, ValidationError) as exc:
        raise ConfigError(f"Invalid problem in config '{config.name}': {exc}") from exc
    logger.info(
        "problem=%s vertices=%d triangles=%d ndofs=%d",
        config.name,
        problem.mesh.n_vertices,
        problem.mesh.n_triangles,
        problem.mesh.n_dofs,
    )
    return problem


def study_config(config: RunConfig) -> StudyConfig:
    study = config.study
    return StudyConfig(
        strategy=study.strategy,
        max_dofs=study.max_dofs,
        max_steps=study.max_steps,
        marking=MarkingParams(theta=study.theta),
    )
