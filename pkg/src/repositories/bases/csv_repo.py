from __future__ import annotations

import csv
import logging
from abc import ABC
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Generic, TypeVar

from pydantic import ValidationError

from models.bases._base import CoreBaseModel
from utils.errors import ConfigError
from utils.serializers import bulk_serialize_rows, deserialize_row

M = TypeVar("M", bound=CoreBaseModel)

logger = logging.getLogger(__name__)


class CsvRepository(ABC, Generic[M]):
    """
    モデルの列を CSV ファイルとして読み書きする

    列名と順序は model_cls.__csv_columns__() で決まる。
    """

    # 列に含めず、読み込み時に 0 始まりの行番号で埋めるフィールド
    row_number_field: str | None = None

    def __init__(self, model_cls: type[M]) -> None:
        self.model_cls = model_cls
        self.columns: tuple[str, ...] = tuple(model_cls.__csv_columns__())

    # =================================================================
    # internal helpers (private)
    # =================================================================
    def _row_to_model(self, number: int, row: Mapping[str, Any]) -> M:
        data = dict(row)
        if self.row_number_field is not None:
            data[self.row_number_field] = number
        return self.model_cls.model_validate(data)

    # ==================================================================
    # read / write
    # ==================================================================
    def write_all(self, path: Path, entities: Sequence[M]) -> Path:
        """ヘッダ付きで全行を書き込む（既存ファイルは上書き）"""
        path.parent.mkdir(parents=True, exist_ok=True)
        rows = bulk_serialize_rows(entities, self.columns)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        logger.info("wrote rows=%d path=%s", len(rows), path)
        return path

    def read_all(self, path: Path) -> list[M]:
        """
        Raises:
            ConfigError: ヘッダが列定義と一致しない、または値が不正
        """
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != self.columns:
                raise ConfigError(
                    f"{path}: expected columns {','.join(self.columns)}, "
                    f"got {','.join(reader.fieldnames or ())}"
                )
            try:
                return [
                    self._row_to_model(i, deserialize_row(row)) for i, row in enumerate(reader)
                ]
            except ValidationError as exc:
                raise ConfigError(f"{path}: invalid row: {exc}") from exc
