from __future__ import annotations

from models.dto.study import ConvergenceRecord, DeflectionSample, SlopeSummary
from repositories.bases.csv_repo import CsvRepository


class RecordRepository(CsvRepository[ConvergenceRecord]):
    """収束記録 CSV（列 ndofs,nelems,eta,energynorm）"""

    row_number_field = "step"

    def __init__(self) -> None:
        super().__init__(ConvergenceRecord)


class SummaryRepository(CsvRepository[SlopeSummary]):
    """収束率の要約 CSV"""

    def __init__(self) -> None:
        super().__init__(SlopeSummary)


class SampleRepository(CsvRepository[DeflectionSample]):
    """格子上のたわみ CSV（列 x,y,deflection）"""

    def __init__(self) -> None:
        super().__init__(DeflectionSample)
