"""Maximum-criterion marking, the solve-estimate-mark-refine loop and rate fitting."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from typing import Literal

import numpy as np

from constants.options import Strategy
from constants.types import FloatArray
from models.domains.assembly import Solution
from models.domains.plate import PlateProblem
from models.dto.estimator import EstimatorReport
from models.dto.study import ConvergenceRecord, StudyConfig
from services.business.assembly_service import solve_problem
from services.business.estimator_service import global_estimate
from services.business.mesh_service import refine_marked, refine_uniform_red
from services.business.oracle_service import energy_error_point_load, point_load_case
from utils.errors import InsufficientRecordsError, PlateError, StudyAbortedError, StudyError

logger = logging.getLogger(__name__)

# 各ステップの結果を受け取るコールバック (record, problem, solution, report)
StepCallback = Callable[[ConvergenceRecord, PlateProblem, Solution, EstimatorReport], None]


def mark(eta_K: Sequence[float] | FloatArray, theta: float) -> set[int]:
    """
    η_K ≥ θ max η を満たす要素 ID

    最大値が 0 のときはすべての要素が条件を満たす。
    """
    eta = np.asarray(eta_K, dtype=float)
    if eta.ndim != 1 or len(eta) == 0:
        raise StudyError("Marking needs at least one element indicator")
    if not 0.0 < theta < 1.0:
        raise StudyError(f"theta must lie in (0, 1), got {theta}")
    threshold = theta * float(eta.max())
    return {int(k) for k in np.flatnonzero(eta >= threshold)}


def _should_stop(config: StudyConfig, records: list[ConvergenceRecord], n_dofs: int) -> bool:
    if config.max_steps is not None and len(records) >= config.max_steps:
        return True
    # 初期メッシュの記録は常に残す
    return config.max_dofs is not None and bool(records) and n_dofs > config.max_dofs


def run_study(
    problem: PlateProblem,
    config: StudyConfig,
    on_step: StepCallback | None = None,
) -> list[ConvergenceRecord]:
    """
    解く → 推定 → マーク → 細分化 を停止条件まで繰り返す

    一様戦略は赤細分、適応戦略は mark と最新頂点二分割。
    中央点荷重の単純支持単位正方形ではエネルギー誤差も記録する。

    Raises:
        StudyAbortedError: 途中のステップが失敗した（それまでの記録を保持）
    """
    records: list[ConvergenceRecord] = []
    oracle = point_load_case(problem) if config.compute_energy else None
    current = problem

    while not _should_stop(config, records, current.mesh.n_dofs):
        step = len(records)
        try:
            solution = solve_problem(current)
            report = global_estimate(solution, current)
            energy = (
                energy_error_point_load(solution, oracle.value, oracle.material)
                if oracle is not None
                else None
            )
        except PlateError as exc:
            logger.error("step=%d ndofs=%d failed: %s", step, current.mesh.n_dofs, exc)
            raise StudyAbortedError(
                f"Study aborted at step {step} (ndofs={current.mesh.n_dofs}): {exc}", records
            ) from exc

        record = ConvergenceRecord(
            step=step,
            ndofs=current.mesh.n_dofs,
            nelems=current.mesh.n_triangles,
            eta=report.eta,
            energynorm=energy,
        )
        records.append(record)
        logger.info(
            "step=%d ndofs=%d nelems=%d eta=%.3e energynorm=%s",
            record.step,
            record.ndofs,
            record.nelems,
            record.eta,
            "-" if energy is None else f"{energy:.3e}",
        )
        if on_step is not None:
            on_step(record, current, solution, report)

        if config.strategy is Strategy.UNIFORM:
            mesh = refine_uniform_red(current.mesh)
        else:
            marked = mark(report.eta_K, config.marking.theta)
            logger.debug("step=%d marked=%d", step, len(marked))
            mesh = refine_marked(current.mesh, marked)
        current = current.with_mesh(mesh)

    return records


def rate_estimate(
    records: Sequence[ConvergenceRecord],
    window: int | None = 2,
    quantity: Literal["eta", "energynorm"] = "eta",
) -> float:
    """
    log(量) と log N の最小二乗勾配

    window は末尾の区間数（None なら全範囲）。
    """
    values = [(r.ndofs, getattr(r, quantity)) for r in records]
    values = [(n, v) for n, v in values if v is not None and v > 0]
    if len(values) < 2:
        raise InsufficientRecordsError(
            f"Rate estimate needs at least 2 records with positive {quantity}, got {len(values)}"
        )
    if window is not None:
        if window < 1:
            raise StudyError(f"window must be at least 1, got {window}")
        values = values[-(window + 1) :]
    n, v = np.log(np.array(values, dtype=float)).T
    slope, _ = np.polyfit(n, v, 1)
    return float(slope)


def efficiency_band(records: Sequence[ConvergenceRecord]) -> tuple[float, float]:
    """η / |||u - u_h||| の (最小, 最大)"""
    ratios = [r.efficiency for r in records if r.efficiency is not None]
    if not ratios:
        raise InsufficientRecordsError("No record carries an energy-norm error")
    return min(ratios), max(ratios)
