from __future__ import annotations

from functools import cached_property

import numpy as np
from pydantic import Field, field_validator

from constants.options import CODE_TO_EDGE_TAG, EDGE_TAG_CODES, BcKind, EdgeTag
from constants.types import BoolArray, FloatArray, IntArray, Point
from models.bases._base import CoreBaseModel, readonly


class Vertex(CoreBaseModel):
    id: int
    x: float
    y: float


class Triangle(CoreBaseModel):
    """三角形要素。頂点は反時計回りで、局所辺 0 (v0, v1) が二分割の対象辺"""

    id: int
    vertices: tuple[int, int, int]


class Edge(CoreBaseModel):
    id: int
    endpoints: tuple[int, int]  # 小さい ID が先（正準向き）
    adjacency: tuple[int, ...]  # 1 つ（境界）または 2 つの三角形 ID
    tag: EdgeTag
    on_line_load: bool = False

    @property
    def is_boundary(self) -> bool:
        return len(self.adjacency) == 1


class BoundarySegment(CoreBaseModel):
    """境界上の頂点列と境界条件の組"""

    path: tuple[int, ...] = Field(min_length=2)
    kind: BcKind


class MeshStatistics(CoreBaseModel):
    n_vertices: int
    n_edges: int
    n_triangles: int
    n_dofs: int  # 6V + E
    h_max: float
    min_angle: float  # 度


class Mesh(CoreBaseModel):
    """
    適合三角形メッシュ

    辺は頂点 ID の組 (lo, hi) の辞書順に番号付けされ、接線は lo -> hi、
    法線は接線を反時計回りに 90° 回したもの。
    triangle_edges[t, i] は頂点 i と i+1 を結ぶ局所辺 i の辺 ID。
    edge_triangles[e] は隣接要素（境界辺では 2 列目が -1）。
    """

    vertices: FloatArray  # (V, 2)
    triangles: IntArray  # (T, 3)
    edges: IntArray  # (E, 2)
    triangle_edges: IntArray  # (T, 3)
    edge_triangles: IntArray  # (E, 2)
    edge_tags: IntArray  # (E,) EDGE_TAG_CODES
    edge_on_line_load: BoolArray  # (E,)
    boundary_segments: tuple[BoundarySegment, ...] = ()
    line_load_polyline: tuple[Point, ...] | None = None

    @field_validator("vertices", mode="before")
    @classmethod
    def _freeze_float(cls, value):
        return readonly(value)

    @field_validator(
        "triangles", "edges", "triangle_edges", "edge_triangles", "edge_tags", mode="before"
    )
    @classmethod
    def _freeze_int(cls, value):
        return readonly(value, dtype=np.int64)

    @field_validator("edge_on_line_load", mode="before")
    @classmethod
    def _freeze_bool(cls, value):
        return readonly(value, dtype=bool)

    # ------------------------------------------------------------------ sizes
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_dofs(self) -> int:
        return 6 * self.n_vertices + self.n_edges

    # ---------------------------------------------------------------- views
    def vertex(self, vertex_id: int) -> Vertex:
        x, y = self.vertices[vertex_id]
        return Vertex(id=vertex_id, x=float(x), y=float(y))

    def triangle(self, triangle_id: int) -> Triangle:
        a, b, c = (int(v) for v in self.triangles[triangle_id])
        return Triangle(id=triangle_id, vertices=(a, b, c))

    def edge(self, edge_id: int) -> Edge:
        lo, hi = (int(v) for v in self.edges[edge_id])
        adjacency = tuple(int(t) for t in self.edge_triangles[edge_id] if t >= 0)
        return Edge(
            id=edge_id,
            endpoints=(lo, hi),
            adjacency=adjacency,
            tag=CODE_TO_EDGE_TAG[int(self.edge_tags[edge_id])],
            on_line_load=bool(self.edge_on_line_load[edge_id]),
        )

    # -------------------------------------------------------- edge classes
    @cached_property
    def is_boundary_edge(self) -> BoolArray:
        return self.edge_triangles[:, 1] < 0

    def edges_with_tag(self, tag: EdgeTag) -> IntArray:
        return np.flatnonzero(self.edge_tags == EDGE_TAG_CODES[tag])

    @cached_property
    def interior_edges(self) -> IntArray:
        return np.flatnonzero(~self.is_boundary_edge)

    @cached_property
    def line_load_edges(self) -> IntArray:
        return np.flatnonzero(self.edge_on_line_load)

    # ------------------------------------------------------------- geometry
    @cached_property
    def edge_vectors(self) -> FloatArray:
        return self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]

    @cached_property
    def edge_lengths(self) -> FloatArray:
        """h_E"""
        return np.hypot(self.edge_vectors[:, 0], self.edge_vectors[:, 1])

    @cached_property
    def edge_tangents(self) -> FloatArray:
        return self.edge_vectors / self.edge_lengths[:, None]

    @cached_property
    def edge_normals(self) -> FloatArray:
        t = self.edge_tangents
        return np.column_stack([-t[:, 1], t[:, 0]])

    @cached_property
    def edge_midpoints(self) -> FloatArray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    @cached_property
    def element_diameters(self) -> FloatArray:
        """h_K（最長辺の長さ）"""
        return self.edge_lengths[self.triangle_edges].max(axis=1)

    @cached_property
    def residual_sizes(self) -> FloatArray:
        """要素残差の重みに使う h_K = √(2|K|)（直角二等辺三角形では脚の長さ）"""
        return np.sqrt(2.0 * self.areas)

    @cached_property
    def areas(self) -> FloatArray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def centroids(self) -> FloatArray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def angles(self) -> FloatArray:
        """(T, 3) 各頂点の内角（度）"""
        p = self.vertices[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            w = p[:, (i + 2) % 3] - p[:, i]
            cos = np.einsum("ij,ij->i", u, w) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
            )
            out[:, i] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        return out

    @cached_property
    def min_angle(self) -> float:
        return float(self.angles.min()) if self.n_triangles else 0.0

    @cached_property
    def h_max(self) -> float:
        return float(self.element_diameters.max()) if self.n_triangles else 0.0

    def vertex_at(self, point: Point, tol: float = 1e-10) -> int | None:
        """座標に一致する頂点 ID（なければ None）"""
        if not self.n_vertices:
            return None
        scale = max(1.0, float(np.abs(self.vertices).max()))
        dist = np.hypot(self.vertices[:, 0] - point[0], self.vertices[:, 1] - point[1])
        i = int(np.argmin(dist))
        return i if dist[i] <= tol * scale else None

    def outward_sign(self, triangle_ids: IntArray, edge_ids: IntArray) -> FloatArray:
        """正準法線が要素の外向きなら +1、内向きなら -1"""
        offset = self.edge_midpoints[edge_ids] - self.centroids[triangle_ids]
        return np.sign(np.einsum("ij,ij->i", self.edge_normals[edge_ids], offset))

    def statistics(self) -> MeshStatistics:
        return MeshStatistics(
            n_vertices=self.n_vertices,
            n_edges=self.n_edges,
            n_triangles=self.n_triangles,
            n_dofs=self.n_dofs,
            h_max=self.h_max,
            min_angle=self.min_angle,
        )
