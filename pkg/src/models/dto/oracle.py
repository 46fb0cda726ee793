from __future__ import annotations

from pydantic import Field, model_validator

from constants.options import OracleCase
from models.bases._base import CoreBaseModel
from models.domains.plate import Material


class NavierCase(CoreBaseModel):
    """
    単純支持された単位正方形板の中央荷重

    square: [1/2 - c, 1/2 + c] × [1/2 - d, 1/2 + d] 上の f0
    line: x = 1/2, y ∈ [1/2 - d, 1/2 + d] 上の g0
    point: (1/2, 1/2) の F0
    """

    kind: OracleCase
    value: float  # f0, g0 または F0
    material: Material
    c: float | None = Field(default=None, gt=0.0, le=0.5)
    d: float | None = Field(default=None, gt=0.0, le=0.5)

    @model_validator(mode="after")
    def _check_extent(self) -> NavierCase:
        if self.kind is OracleCase.SQUARE and (self.c is None or self.d is None):
            raise ValueError("square case requires both c and d")
        if self.kind is OracleCase.LINE and self.d is None:
            raise ValueError("line case requires d")
        return self


class SeriesValue(CoreBaseModel):
    value: float
    terms: int  # 打ち切り M
    tail_bound: float
