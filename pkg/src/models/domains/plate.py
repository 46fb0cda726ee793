from __future__ import annotations

import numpy as np
from pydantic import Field, model_validator

from constants.options import EDGE_TAG_CODES, EdgeTag
from constants.types import FloatArray, Point
from models.bases._base import CoreBaseModel
from models.domains.mesh import Mesh
from utils.errors import LineLoadCoverageError, LoadPlacementError, SingularProblemError

_REGION_TOL = 1e-12


class Material(CoreBaseModel):
    """等方線形弾性材料"""

    E: float = Field(gt=0)  # ヤング率
    nu: float = Field(ge=0, le=0.5)  # ポアソン比
    thickness: float = Field(gt=0)  # 板厚 d

    @property
    def D(self) -> float:
        """曲げ剛性 E d³ / (12 (1 - ν²))"""
        return self.E * self.thickness**3 / (12.0 * (1.0 - self.nu**2))

    @property
    def moment_factor(self) -> float:
        """d³ / 12"""
        return self.thickness**3 / 12.0


class Rectangle(CoreBaseModel):
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @model_validator(mode="after")
    def _check_order(self) -> Rectangle:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("Rectangle bounds must satisfy min < max")
        return self

    def contains(self, x: FloatArray, y: FloatArray, tol: float = 0.0) -> np.ndarray:
        return (
            (x >= self.x_min - tol)
            & (x <= self.x_max + tol)
            & (y >= self.y_min - tol)
            & (y <= self.y_max + tol)
        )

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


class DistributedLoad(CoreBaseModel):
    """矩形領域（None なら全領域）上の一定分布荷重 f0"""

    value: float
    region: Rectangle | None = None

    def density(self, x: FloatArray, y: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.region is None:
            return np.full(np.broadcast(x, y).shape, self.value)
        return np.where(self.region.contains(x, y), self.value, 0.0)


class LineLoad(CoreBaseModel):
    """折れ線 S 上の一定線荷重 g0"""

    polyline: tuple[Point, ...] = Field(min_length=2)
    value: float

    @property
    def length(self) -> float:
        p = np.asarray(self.polyline, dtype=float)
        return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


class PointLoad(CoreBaseModel):
    location: Point
    magnitude: float


class LoadSpec(CoreBaseModel):
    distributed: tuple[DistributedLoad, ...] = ()
    line: LineLoad | None = None
    points: tuple[PointLoad, ...] = ()

    def density(self, x: FloatArray, y: FloatArray) -> FloatArray:
        """分布荷重 f の総和"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = np.zeros(np.broadcast(x, y).shape)
        for load in self.distributed:
            total = total + load.density(x, y)
        return total

    def line_density(self, x: FloatArray, y: FloatArray) -> FloatArray:
        """S 上の線荷重 g（S 辺上でのみ意味を持つ）"""
        value = self.line.value if self.line is not None else 0.0
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, value)

    def scaled(self, factor: float) -> LoadSpec:
        return LoadSpec(
            distributed=tuple(
                load.model_copy(update={"value": factor * load.value})
                for load in self.distributed
            ),
            line=(
                self.line.model_copy(update={"value": factor * self.line.value})
                if self.line is not None
                else None
            ),
            points=tuple(
                p.model_copy(update={"magnitude": factor * p.magnitude})
                for p in self.points
            ),
        )


class PlateProblem(CoreBaseModel):
    """
    メッシュ・材料・荷重・境界条件（メッシュの辺タグ）の組

    allow_singular=True のとき全辺自由の板を受け付け、最小 ID 頂点の値と勾配を固定する。
    """

    mesh: Mesh
    material: Material
    loads: LoadSpec = LoadSpec()
    allow_singular: bool = False

    @model_validator(mode="after")
    def _check_against_mesh(self) -> PlateProblem:
        mesh = self.mesh
        for load in self.loads.points:
            if mesh.vertex_at(load.location) is None:
                raise LoadPlacementError(
                    f"Point load at {load.location} is not located on a mesh vertex"
                )

        if self.loads.line is not None:
            if mesh.line_load_polyline is None or not len(mesh.line_load_edges):
                raise LineLoadCoverageError(
                    "Line load given but the mesh carries no line-load edges"
                )
            covered = float(mesh.edge_lengths[mesh.line_load_edges].sum())
            if not np.isclose(covered, self.loads.line.length, rtol=1e-10, atol=1e-12):
                raise LineLoadCoverageError(
                    f"Line-load edges cover length {covered:.6g}, "
                    f"polyline has length {self.loads.line.length:.6g}"
                )

        for load in self.loads.distributed:
            if load.region is None:
                continue
            p = mesh.vertices[mesh.triangles]
            inside_c = load.region.contains(mesh.centroids[:, 0], mesh.centroids[:, 1])
            inside_v = load.region.contains(p[..., 0], p[..., 1], tol=_REGION_TOL)
            crossing = inside_c & ~inside_v.all(axis=1)
            if crossing.any():
                raise LoadPlacementError(
                    f"Load region {load.region.model_dump()} crosses element "
                    f"{int(np.flatnonzero(crossing)[0])}"
                )

        constrained = np.isin(
            mesh.edge_tags,
            [EDGE_TAG_CODES[EdgeTag.CLAMPED], EDGE_TAG_CODES[EdgeTag.SIMPLY_SUPPORTED]],
        )
        if not constrained.any() and not self.allow_singular:
            raise SingularProblemError(
                "All boundary edges are free: the plate has rigid motions. "
                "Pass allow_singular=True to pin one vertex."
            )
        return self

    def element_load(self) -> FloatArray:
        """要素ごとの f（各要素上で一定）"""
        c = self.mesh.centroids
        return self.loads.density(c[:, 0], c[:, 1])

    def point_load_vertices(self) -> list[tuple[int, float]]:
        return [
            (int(self.mesh.vertex_at(p.location)), p.magnitude) for p in self.loads.points
        ]

    def with_mesh(self, mesh: Mesh) -> PlateProblem:
        """細分化後のメッシュで同じ問題を作り直す"""
        return PlateProblem(
            mesh=mesh,
            material=self.material,
            loads=self.loads,
            allow_singular=self.allow_singular,
        )


class PlateResultants(CoreBaseModel):
    """
    点ごとの断面力

    moments は (M_xx, M_xy, M_yy)、shear は (Q_x, Q_y)。
    plate_operator (D Δ² u) は 4 階導関数が与えられたときのみ。
    """

    moments: FloatArray
    shear: FloatArray
    q_n: FloatArray
    m_nn: FloatArray
    m_ns: FloatArray
    v_n: FloatArray
    plate_operator: FloatArray | None = None
