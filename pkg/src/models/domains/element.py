from __future__ import annotations

from functools import cached_property

import numpy as np
from pydantic import field_validator

from constants.options import VERTEX_DOF_KINDS, DofKind
from constants.types import FloatArray, IntArray
from models.bases._base import CoreBaseModel, readonly
from utils.errors import DerivativeOrderError

N_LOCAL_DOFS = 21


class DofKey(CoreBaseModel):
    """自由度を表すキー（種類 + 頂点 or 辺の番号）"""

    kind: DofKind
    anchor: int  # 頂点 ID または辺 ID


class QuadratureRule(CoreBaseModel):
    """積分則。三角形は参照三角形上の (x, y)、辺は [0, 1] 上のパラメータ"""

    points: FloatArray
    weights: FloatArray
    degree: int  # 厳密に積分できる多項式の次数

    @field_validator("points", "weights", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value)

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def barycentric(self) -> FloatArray:
        """三角形則の点の重心座標 (n, 3)"""
        x, y = self.points[:, 0], self.points[:, 1]
        return np.column_stack([1.0 - x - y, x, y])


class DerivativeBundle(CoreBaseModel):
    """
    点ごとの導関数の束

    data の先頭軸は DERIVATIVE_ORDERS の並び（値, 勾配 2, ヘッセ 3, 3 階 4, 4 階 5）で、
    混合偏導関数は異なる成分のみ保持する。
    """

    data: FloatArray
    max_order: int

    @field_validator("data", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value)

    def require(self, order: int) -> None:
        if order > self.max_order:
            raise DerivativeOrderError(
                f"Order {order} derivatives required, bundle has order {self.max_order}"
            )

    @property
    def value(self) -> FloatArray:
        return self.data[0]

    @property
    def gradient(self) -> FloatArray:
        self.require(1)
        return self.data[1:3]

    @property
    def hessian(self) -> FloatArray:
        """(u_xx, u_xy, u_yy)"""
        self.require(2)
        return self.data[3:6]

    @property
    def third(self) -> FloatArray:
        """(u_xxx, u_xxy, u_xyy, u_yyy)"""
        self.require(3)
        return self.data[6:10]

    @property
    def fourth(self) -> FloatArray:
        """(u_xxxx, u_xxxy, u_xxyy, u_xyyy, u_yyyy)"""
        self.require(4)
        return self.data[10:15]


class ElementBasis(CoreBaseModel):
    """
    全要素の Argyris 基底（要素ごとに 21 個の 5 次多項式）

    基底関数 k の要素 t 上の表現は Σ_j coefficients[t, j, k] ξ^a_j η^b_j で、
    局所座標は ξ = (x - x_c) / h_K, η = (y - y_c) / h_K （x_c は重心）。
    局所自由度の並び: 頂点 i に 6i..6i+5 (値, dx, dy, dxx, dxy, dyy)、
    局所辺 i （頂点 i と i+1 を結ぶ）に 18 + i。
    """

    triangle_ids: IntArray
    vertex_ids: IntArray  # (T, 3)
    edge_ids: IntArray  # (T, 3)
    centroids: FloatArray  # (T, 2)
    scales: FloatArray  # (T,) = h_K
    coefficients: FloatArray  # (T, 21, 21)
    conditions: FloatArray  # (T,) スケール済み汎関数行列の条件数

    @field_validator("centroids", "scales", "coefficients", "conditions", mode="before")
    @classmethod
    def _freeze_float(cls, value):
        return readonly(value)

    @field_validator("triangle_ids", "vertex_ids", "edge_ids", mode="before")
    @classmethod
    def _freeze_int(cls, value):
        return readonly(value, dtype=np.int64)

    @property
    def n_elements(self) -> int:
        return len(self.triangle_ids)

    def local_coordinates(
        self, element_ids: IntArray, x: FloatArray, y: FloatArray
    ) -> tuple[FloatArray, FloatArray]:
        """大域座標を要素の局所座標に変換する（element_ids は x, y にブロードキャスト）"""
        c = self.centroids[element_ids]
        h = self.scales[element_ids]
        return (x - c[..., 0]) / h, (y - c[..., 1]) / h

    def dof_keys(self, element_id: int) -> list[DofKey]:
        """要素の 21 個の自由度キー（局所の並び順）"""
        keys = [
            DofKey(kind=kind, anchor=int(v))
            for v in self.vertex_ids[element_id]
            for kind in VERTEX_DOF_KINDS
        ]
        keys += [
            DofKey(kind=DofKind.EDGE_NORMAL, anchor=int(e))
            for e in self.edge_ids[element_id]
        ]
        return keys

    @cached_property
    def max_condition(self) -> float:
        return float(np.max(self.conditions)) if len(self.conditions) else 0.0
