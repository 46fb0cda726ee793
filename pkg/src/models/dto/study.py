from __future__ import annotations

from pydantic import Field, model_validator

from constants.options import Strategy
from models.bases._base import CoreBaseModel


class MarkingParams(CoreBaseModel):
    """最大値基準マーキングのパラメータ"""

    theta: float = Field(default=0.5, gt=0.0, lt=1.0)


class StudyConfig(CoreBaseModel):
    """収束スタディの設定。max_dofs と max_steps の少なくとも一方が必要"""

    strategy: Strategy = Strategy.UNIFORM
    max_dofs: int | None = Field(default=None, gt=0)
    max_steps: int | None = Field(default=None, gt=0)
    marking: MarkingParams = MarkingParams()
    compute_energy: bool = True  # 参照解があればエネルギー誤差を記録する

    @model_validator(mode="after")
    def _require_stop(self) -> StudyConfig:
        if self.max_dofs is None and self.max_steps is None:
            raise ValueError("Either max_dofs or max_steps must be given")
        return self


class ConvergenceRecord(CoreBaseModel):
    """1 ステップ分の結果（CSV の 1 行）"""

    step: int = Field(ge=0)
    ndofs: int
    nelems: int
    eta: float
    energynorm: float | None = None

    @classmethod
    def __csv_columns__(cls) -> tuple[str, ...]:
        return ("ndofs", "nelems", "eta", "energynorm")

    @property
    def efficiency(self) -> float | None:
        """η / |||u - u_h|||"""
        if self.energynorm is None or self.energynorm == 0.0:
            return None
        return self.eta / self.energynorm


class SlopeSummary(CoreBaseModel):
    """スタディごとの収束率"""

    case: str
    strategy: Strategy
    slope_last: float | None = None
    slope_full: float | None = None

    @classmethod
    def __csv_columns__(cls) -> tuple[str, ...]:
        return ("case", "strategy", "slope_last", "slope_full")


class DeflectionSample(CoreBaseModel):
    """格子上のたわみの標本点"""

    x: float
    y: float
    deflection: float

    @classmethod
    def __csv_columns__(cls) -> tuple[str, ...]:
        return ("x", "y", "deflection")
