from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict


class CoreBaseModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def readonly(array: Any, dtype: Any = float) -> np.ndarray:
    """配列をコピーして書き込み禁止にする（不変モデルのフィールド用）"""
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out
