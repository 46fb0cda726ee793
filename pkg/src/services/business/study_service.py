from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from constants.options import BuiltinCase, Strategy
from constants.paths import (
    GRID_FILE_NAME,
    RECORDS_FILE_PATTERN,
    SUMMARY_FILE_NAME,
    VTK_FILE_PATTERN,
)
from models.domains.assembly import Solution
from models.domains.plate import PlateProblem
from models.dto.config import RunConfig
from models.dto.estimator import EstimatorReport
from models.dto.study import ConvergenceRecord, DeflectionSample, SlopeSummary
from repositories.domains.record_repo import RecordRepository, SampleRepository, SummaryRepository
from repositories.domains.vtk_repo import VtkRepository
from services.business.adapt_service import rate_estimate, run_study
from services.business.assembly_service import evaluate_solution, solve_problem
from services.business.case_service import build_problem, builtin_config, study_config
from services.business.estimator_service import global_estimate
from services.business.mesh_service import locate_points, refine_uniform_red
from utils.errors import InsufficientRecordsError, StudyAbortedError

logger = logging.getLogger(__name__)


def vertex_deflection(solution: Solution) -> np.ndarray:
    """頂点でのたわみ（頂点の値自由度そのもの）"""
    return solution.coefficients[solution.dofmap.value_dofs]


class StudyService:
    """収束スタディの実行と CSV / VTK への書き出し"""

    def __init__(
        self,
        record_repo: RecordRepository | None = None,
        summary_repo: SummaryRepository | None = None,
        sample_repo: SampleRepository | None = None,
        vtk_repo: VtkRepository | None = None,
    ):
        self.record_repo = record_repo or RecordRepository()
        self.summary_repo = summary_repo or SummaryRepository()
        self.sample_repo = sample_repo or SampleRepository()
        self.vtk_repo = vtk_repo or VtkRepository()

    # =================================================================
    # single study
    # =================================================================
    def run_case(
        self,
        config: RunConfig,
        *,
        csv_path: Path | None = None,
        vtk_dir: Path | None = None,
        grid_path: Path | None = None,
    ) -> list[ConvergenceRecord]:
        """
        設定どおりにスタディを実行し、記録を CSV に、各メッシュを VTK に書き出す

        引数のパスは設定ファイルの output 節より優先する。
        失敗したときはそれまでの記録を CSV に書いてから StudyAbortedError を再送出する。
        """
        csv_path = csv_path or config.output.csv
        vtk_dir = vtk_dir or config.output.vtk_dir
        grid_path = grid_path or (
            (csv_path.parent if csv_path else Path(".")) / GRID_FILE_NAME
            if config.output.sample_grid
            else None
        )

        problem = build_problem(config)
        last: dict[str, Solution] = {}

        def on_step(
            record: ConvergenceRecord,
            step_problem: PlateProblem,
            solution: Solution,
            report: EstimatorReport,
        ) -> None:
            last["solution"] = solution
            if vtk_dir is not None:
                self.vtk_repo.write(
                    vtk_dir / VTK_FILE_PATTERN.format(step=record.step),
                    step_problem.mesh,
                    report.eta_K,
                    vertex_deflection(solution),
                    title=f"{config.name} step {record.step} ndofs {record.ndofs}",
                )

        try:
            records = run_study(problem, study_config(config), on_step=on_step)
        except StudyAbortedError as exc:
            if csv_path is not None:
                self.record_repo.write_all(csv_path, exc.records)
            raise

        if csv_path is not None:
            self.record_repo.write_all(csv_path, records)
        if grid_path is not None and config.output.sample_grid and "solution" in last:
            self.write_sample_grid(last["solution"], config.output.sample_grid, grid_path)
        return records

    # =================================================================
    # built-in experiments
    # =================================================================
    def reproduce(
        self,
        out_dir: Path,
        cases: tuple[BuiltinCase, ...] = tuple(BuiltinCase),
        strategies: tuple[Strategy, ...] = (Strategy.UNIFORM, Strategy.ADAPTIVE),
        theta: float = 0.5,
        max_dofs: int | None = None,
    ) -> list[SlopeSummary]:
        """
        組み込みケースを各戦略で実行し、ケースごとの CSV と summary.csv を書き出す

        max_dofs を与えるとケースごとの既定値を上書きする。
        """
        summaries: list[SlopeSummary] = []
        for case in cases:
            for strategy in strategies:
                base = builtin_config(case)
                study = base.study.model_copy(
                    update={
                        "strategy": strategy,
                        "theta": theta,
                        "max_dofs": max_dofs or base.study.max_dofs,
                    }
                )
                config = base.model_copy(update={"study": study})
                csv_path = out_dir / RECORDS_FILE_PATTERN.format(
                    case=case.value, strategy=strategy.value
                )
                logger.info("reproduce case=%s strategy=%s", case.value, strategy.value)
                records = self.run_case(config, csv_path=csv_path)
                summaries.append(self._summarize(case.value, strategy, records))

        self.summary_repo.write_all(out_dir / SUMMARY_FILE_NAME, summaries)
        return summaries

    def _summarize(
        self, case: str, strategy: Strategy, records: list[ConvergenceRecord]
    ) -> SlopeSummary:
        try:
            slope_last = rate_estimate(records, window=2)
            slope_full = rate_estimate(records, window=None)
        except InsufficientRecordsError:
            logger.warning("case=%s strategy=%s too few records for a rate", case, strategy.value)
            slope_last = slope_full = None
        return SlopeSummary(
            case=case, strategy=strategy, slope_last=slope_last, slope_full=slope_full
        )

    # =================================================================
    # single-mesh export
    # =================================================================
    def export_vtk(self, config: RunConfig, path: Path, refinements: int = 0) -> Path:
        """初期メッシュを refinements 回赤細分したメッシュで解き、1 つの VTK に書き出す"""
        problem = build_problem(config)
        for _ in range(refinements):
            problem = problem.with_mesh(refine_uniform_red(problem.mesh))
        solution = solve_problem(problem)
        report = global_estimate(solution, problem)
        return self.vtk_repo.write(
            path,
            problem.mesh,
            report.eta_K,
            vertex_deflection(solution),
            title=f"{config.name} ndofs {problem.mesh.n_dofs}",
        )

    def write_sample_grid(self, solution: Solution, n: int, path: Path) -> Path:
        """外接矩形上の n×n 格子のうち領域内の点でたわみを標本化する"""
        lo = solution.mesh.vertices.min(axis=0)
        hi = solution.mesh.vertices.max(axis=0)
        X, Y = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n))
        points = np.column_stack([X.ravel(), Y.ravel()])
        points = points[locate_points(solution.mesh, points, strict=False) >= 0]
        values = evaluate_solution(solution, points).value
        samples = [
            DeflectionSample(x=float(x), y=float(y), deflection=float(u))
            for (x, y), u in zip(points, values)
        ]
        return self.sample_repo.write_all(path, samples)
