from __future__ import annotations

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from constants.options import BuiltinCase
from models.dto.config import RunConfig
from services.business.case_service import builtin_config
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def _field_path(loc: tuple) -> str:
    """('study', 'theta') -> 'study.theta'、リストの添字は [i]"""
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += f".{part}" if out else str(part)
    return out or "<root>"


class CaseRepository:
    """実行設定の読み込み（JSON ファイルと組み込みケース）"""

    def load(self, path: Path) -> RunConfig:
        """
        Raises:
            ConfigError: 読めない、JSON として不正、または検証に失敗
        """
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"Cannot read config {path}: {exc.strerror}") from exc
        return self.parse(text, source=str(path))

    def parse(self, text: str, source: str = "<config>") -> RunConfig:
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
            ) from exc
        return self.parse_document(document, source)

    def parse_document(self, document: object, source: str = "<config>") -> RunConfig:
        """検証エラーは study.theta のような項目パス付きの ConfigError にする"""
        try:
            config = RunConfig.model_validate(document)
        except ValidationError as exc:
            details = "; ".join(
                f"{_field_path(err['loc'])}: {err['msg']}" for err in exc.errors()
            )
            raise ConfigError(f"{source}: invalid config: {details}") from exc
        logger.debug("loaded config name=%s source=%s", config.name, source)
        return config

    def builtin(self, name: str | BuiltinCase) -> RunConfig:
        try:
            case = BuiltinCase(name)
        except ValueError as exc:
            choices = ", ".join(c.value for c in BuiltinCase)
            raise ConfigError(f"Unknown built-in case '{name}' (choose from {choices})") from exc
        return builtin_config(case)
