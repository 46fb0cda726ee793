from __future__ import annotations

from collections.abc import Mapping, Sequence
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from models.bases._base import CoreBaseModel


def _serialize_value(value: Any) -> str:
    """CSV セル用の文字列に変換"""
    if value is None:
        return ""

    # bool は int のサブクラスなので先に判定
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"

    # 浮動小数点は repr で往復可能な最短表現
    if isinstance(value, (float, np.floating)):
        return repr(float(value))

    if isinstance(value, (int, np.integer)):
        return str(int(value))

    if isinstance(value, Enum):
        return str(value.value)

    if isinstance(value, Path):
        return value.as_posix()

    return str(value)


def serialize_row(
    data: Mapping[str, Any] | CoreBaseModel, columns: Sequence[str]
) -> dict[str, str]:
    """
    Pydantic モデルまたは dict を CSV の 1 行にシリアライズ

    Args:
        data: シリアライズ対象のデータ
        columns: 出力する列（この順で並ぶ）

    Raises:
        TypeError: 不正な型が渡された場合
        KeyError: 列が存在しない場合
    """
    if isinstance(data, CoreBaseModel):
        source = {col: getattr(data, col) for col in columns}
    elif isinstance(data, Mapping):
        source = {col: data[col] for col in columns}
    else:
        raise TypeError(f"Expected CoreBaseModel or Mapping, got {type(data)}")
    return {col: _serialize_value(source[col]) for col in columns}


def bulk_serialize_rows(
    items: Sequence[Mapping[str, Any] | CoreBaseModel], columns: Sequence[str]
) -> list[dict[str, str]]:
    return [serialize_row(item, columns) for item in items]


def deserialize_row(row: Mapping[str, str]) -> dict[str, Any]:
    """空セルを None に戻す（型変換はモデルの検証に任せる）"""
    return {key: (None if value == "" else value) for key, value in row.items()}
