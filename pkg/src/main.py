"""Command-line front end: solve, oracle, reproduce and export-vtk."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from constants.options import BuiltinCase, OracleCase, Strategy
from constants.paths import RECORDS_FILE_PATTERN
from models.domains.plate import Material
from models.dto.config import RunConfig
from models.dto.oracle import NavierCase
from repositories.domains.case_repo import CaseRepository
from services.business.oracle_service import max_deflection_point_load, navier_deflection
from services.business.study_service import StudyService
from utils.config import settings
from utils.errors import ConfigError, PlateError, StudyAbortedError
from utils.log_setup import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """使い方の誤りは終了コード 1"""

    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: error: {message}")


def _add_problem_args(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="JSON run configuration")
    source.add_argument(
        "--builtin", choices=[c.value for c in BuiltinCase], help="built-in experiment"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plate-adapt", description=__doc__)
    parser.add_argument("--log-level", default=None, help="overrides PLATE_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="run a convergence study")
    _add_problem_args(solve)
    solve.add_argument("--strategy", choices=[s.value for s in Strategy])
    solve.add_argument("--theta", type=float)
    solve.add_argument("--max-dofs", type=int)
    solve.add_argument("--max-steps", type=int)
    solve.add_argument("--out", type=Path, help="output directory for CSV and VTK files")

    oracle = sub.add_parser("oracle", help="evaluate the Navier series")
    oracle.add_argument("--case", required=True, choices=[c.value for c in OracleCase])
    oracle.add_argument("--x", type=float, default=0.5)
    oracle.add_argument("--y", type=float, default=0.5)
    oracle.add_argument("--terms", type=int)
    oracle.add_argument("--value", type=float, default=1.0, help="f0, g0 or F0")
    oracle.add_argument("--c", type=float, default=1 / 3)
    oracle.add_argument("--d", type=float, default=1 / 3)
    oracle.add_argument("--E", type=float, default=1.0)
    oracle.add_argument("--nu", type=float, default=0.3)
    oracle.add_argument("--thickness", type=float, default=1.0)

    reproduce = sub.add_parser("reproduce", help="run all built-in studies")
    reproduce.add_argument("--out", type=Path)
    reproduce.add_argument("--theta", type=float, default=0.5)
    reproduce.add_argument("--max-dofs", type=int)

    export = sub.add_parser("export-vtk", help="solve on one mesh and write a VTK file")
    _add_problem_args(export)
    export.add_argument("--refinements", type=int, default=0)
    export.add_argument("--out", type=Path, help="VTK file path")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    repo = CaseRepository()
    return repo.load(args.config) if args.config else repo.builtin(args.builtin)


def _with_study_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    update = {}
    if args.strategy is not None:
        update["strategy"] = args.strategy
    if args.theta is not None:
        update["theta"] = args.theta
    if args.max_dofs is not None:
        update["max_dofs"] = args.max_dofs
    if args.max_steps is not None:
        update["max_steps"] = args.max_steps
    if not update:
        return config
    # 上書き後の値も設定ファイルと同じ規則で検証する
    document = config.model_dump(mode="json")
    document["study"] = {**document["study"], **update}
    return CaseRepository().parse_document(document, source="command line")


def cmd_solve(args: argparse.Namespace) -> int:
    config = _with_study_overrides(_load_config(args), args)
    csv_path = vtk_dir = None
    if args.out is not None or config.output.csv is None:
        out = args.out or settings.PLATE_OUTPUT_DIR
        csv_path = out / RECORDS_FILE_PATTERN.format(
            case=config.name, strategy=config.study.strategy.value
        )
        vtk_dir = out / f"vtk_{config.name}_{config.study.strategy.value}"

    service = StudyService()
    try:
        records = service.run_case(config, csv_path=csv_path, vtk_dir=vtk_dir)
    except StudyAbortedError as exc:
        print(f"study aborted after {len(exc.records)} steps: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    for r in records:
        energy = "" if r.energynorm is None else f" energynorm={r.energynorm:.6e}"
        print(f"ndofs={r.ndofs} nelems={r.nelems} eta={r.eta:.6e}{energy}")
    print(f"records: {csv_path or config.output.csv}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    if not (0.0 <= args.x <= 1.0 and 0.0 <= args.y <= 1.0):
        raise UsageError(f"--x and --y must lie in [0, 1], got ({args.x}, {args.y})")
    material = Material(E=args.E, nu=args.nu, thickness=args.thickness)
    kind = OracleCase(args.case)
    if kind is OracleCase.POINT_MAX:
        result = max_deflection_point_load(args.value, material, args.terms)
    else:
        case = NavierCase(
            kind=kind,
            value=args.value,
            material=material,
            c=args.c if kind is OracleCase.SQUARE else None,
            d=args.d if kind in (OracleCase.SQUARE, OracleCase.LINE) else None,
        )
        result = navier_deflection(case, args.x, args.y, args.terms)
    print(f"value={result.value!r} terms={result.terms} tail_bound={result.tail_bound:.3e}")
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    out = args.out or settings.PLATE_OUTPUT_DIR
    summaries = StudyService().reproduce(out, theta=args.theta, max_dofs=args.max_dofs)
    for s in summaries:
        last = "-" if s.slope_last is None else f"{s.slope_last:.3f}"
        full = "-" if s.slope_full is None else f"{s.slope_full:.3f}"
        print(f"{s.case:<12} {s.strategy.value:<9} slope_last={last} slope_full={full}")
    return EXIT_OK


def cmd_export_vtk(args: argparse.Namespace) -> int:
    if args.refinements < 0:
        raise UsageError("--refinements must be non-negative")
    config = _load_config(args)
    path = args.out or settings.PLATE_OUTPUT_DIR / f"{config.name}_r{args.refinements}.vtk"
    StudyService().export_vtk(config, path, refinements=args.refinements)
    print(f"vtk: {path}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "reproduce": cmd_reproduce,
    "export-vtk": cmd_export_vtk,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlateError as exc:
        logger.error("command=%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
