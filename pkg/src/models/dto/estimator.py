from __future__ import annotations

import numpy as np
from pydantic import field_validator

from constants.options import IndicatorTerm
from constants.types import FloatArray
from models.bases._base import CoreBaseModel, readonly


class EdgeJumpData(CoreBaseModel):
    """
    辺の積分点でのジャンプ値（境界辺では片側の値）

    moment は ⟦M_nn⟧、shear は ⟦V_n⟧（S 上の辺では線荷重 g を差し引いた値）。
    内部辺の符号は edge_triangles[e, 0] 側の外向き法線に合わせる。
    """

    edge_id: int
    is_boundary: bool
    moment: FloatArray
    shear: FloatArray

    @field_validator("moment", "shear", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value)


class IndicatorBreakdown(CoreBaseModel):
    """要素ごとの η_K² の内訳（各項は 2 乗値）"""

    interior_residual: FloatArray
    moment_jump: FloatArray
    shear_jump: FloatArray
    boundary_moment: FloatArray
    boundary_shear: FloatArray
    line_load: FloatArray

    @field_validator("*", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value)

    def term(self, term: IndicatorTerm) -> FloatArray:
        return getattr(self, term.value)

    def total(self) -> FloatArray:
        """η_K²（項の和）"""
        out = np.zeros_like(self.interior_residual)
        for term in IndicatorTerm:
            out = out + self.term(term)
        return out


class EstimatorReport(CoreBaseModel):
    eta_K: FloatArray  # (T,)
    eta: float
    osc_f: float
    osc_g: float
    totals: dict[IndicatorTerm, float]  # 項ごとの η² への寄与
    breakdown: IndicatorBreakdown

    @field_validator("eta_K", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value)

    @property
    def eta_squared(self) -> float:
        return self.eta**2
