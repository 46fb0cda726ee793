import logging

from utils.config import settings

LOG_FORMAT = "%(asctime)s level=%(levelname)s logger=%(name)s %(message)s"


def configure_logging(level: str | None = None) -> None:
    """ルートロガーを一度だけ設定する"""
    root = logging.getLogger()
    if root.handlers:
        root.setLevel((level or settings.PLATE_LOG_LEVEL).upper())
        return
    logging.basicConfig(
        level=(level or settings.PLATE_LOG_LEVEL).upper(), format=LOG_FORMAT
    )
