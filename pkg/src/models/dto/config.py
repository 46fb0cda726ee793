from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from constants.options import BcKind, Strategy
from constants.types import Point


class ConfigModel(BaseModel):
    """設定ファイル用の基底（未知のキーを拒否する）"""

    model_config = ConfigDict(extra="forbid", frozen=True)


class BoundaryConfig(ConfigModel):
    path: list[int] = Field(min_length=2)
    kind: BcKind


class GeometryConfig(ConfigModel):
    vertices: list[Point] = Field(min_length=3)
    triangles: list[tuple[int, int, int]] = Field(min_length=1)
    boundary: list[BoundaryConfig] = []


class MaterialConfig(ConfigModel):
    E: float = Field(default=1.0, gt=0)
    nu: float = Field(default=0.3, ge=0, le=0.5)
    thickness: float = Field(default=1.0, gt=0)


class RegionConfig(ConfigModel):
    x_min: float
    x_max: float
    y_min: float
    y_max: float


class DistributedConfig(ConfigModel):
    value: float
    region: RegionConfig | None = None


class LineConfig(ConfigModel):
    polyline: list[Point] = Field(min_length=2)
    value: float


class PointConfig(ConfigModel):
    location: Point
    magnitude: float


class LoadsConfig(ConfigModel):
    distributed: list[DistributedConfig] = []
    line: LineConfig | None = None
    points: list[PointConfig] = []


class StudySection(ConfigModel):
    strategy: Strategy = Strategy.UNIFORM
    theta: float = Field(default=0.5, gt=0.0, lt=1.0)
    max_dofs: int | None = Field(default=None, gt=0)
    max_steps: int | None = Field(default=None, gt=0)


class OutputConfig(ConfigModel):
    csv: Path | None = None
    vtk_dir: Path | None = None
    sample_grid: int | None = Field(default=None, ge=2)  # 1 辺あたりの標本点数


class RunConfig(ConfigModel):
    """1 回の実行設定（JSON 文書に対応）"""

    name: str = "custom"
    geometry: GeometryConfig
    material: MaterialConfig = MaterialConfig()
    loads: LoadsConfig = LoadsConfig()
    study: StudySection = StudySection(max_steps=1)
    output: OutputConfig = OutputConfig()
    allow_singular: bool = False
