import json

import pytest

from constants.options import BuiltinCase, Strategy
from main import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from repositories.domains.case_repo import CaseRepository
from repositories.domains.record_repo import RecordRepository, SummaryRepository
from services.business import adapt_service
from services.business.study_service import StudyService
from utils.errors import SolverError


def parse_value(output: str) -> float:
    fields = dict(part.split("=", 1) for part in output.split())
    return float(fields["value"])


def test_oracle_point_max(capsys):
    assert main(["oracle", "--case", "point-max"]) == EXIT_OK
    assert parse_value(capsys.readouterr().out) == pytest.approx(0.1266812, abs=1e-6)


def test_oracle_on_boundary_is_zero(capsys):
    argv = ["oracle", "--case", "point", "--x", "0", "--y", "0.4", "--terms", "50"]
    assert main(argv) == EXIT_OK
    assert parse_value(capsys.readouterr().out) == 0.0


def test_oracle_outside_square_is_a_usage_error(capsys):
    assert main(["oracle", "--case", "point", "--x", "1.5"]) == EXIT_USAGE
    assert "must lie in [0, 1]" in capsys.readouterr().err


def test_solve_builtin_writes_records_and_meshes(tmp_path, capsys):
    code = main(
        ["solve", "--builtin", "point", "--strategy", "uniform", "--max-dofs", "300",
         "--out", str(tmp_path)]
    )
    assert code == EXIT_OK
    csv_path = tmp_path / "point_uniform.csv"
    records = RecordRepository().read_all(csv_path)
    assert [r.ndofs for r in records] == [70, 206]
    assert all(r.energynorm is not None for r in records)
    vtk_dir = tmp_path / "vtk_point_uniform"
    assert sorted(p.name for p in vtk_dir.iterdir()) == ["mesh_000.vtk", "mesh_001.vtk"]
    assert "ndofs=206" in capsys.readouterr().out


def test_solve_is_deterministic(tmp_path):
    args = ["solve", "--builtin", "line", "--max-steps", "2"]
    assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*args, "--out", str(tmp_path / "b")]) == EXIT_OK
    first = (tmp_path / "a" / "line_uniform.csv").read_bytes()
    assert first == (tmp_path / "b" / "line_uniform.csv").read_bytes()
    vtk = "vtk_line_uniform/mesh_001.vtk"
    assert (tmp_path / "a" / vtk).read_bytes() == (tmp_path / "b" / vtk).read_bytes()


def test_invalid_theta_is_rejected_before_any_output(tmp_path, capsys):
    document = CaseRepository().builtin(BuiltinCase.POINT).model_dump(mode="json")
    document["study"]["theta"] = 1.5
    config = tmp_path / "case.json"
    config.write_text(json.dumps(document), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["solve", "--config", str(config), "--out", str(out)]) == EXIT_USAGE
    assert "study.theta" in capsys.readouterr().err
    assert not out.exists()

    assert main(["solve", "--builtin", "point", "--theta", "0", "--out", str(out)]) == EXIT_USAGE
    assert not out.exists()


def test_config_file_with_sample_grid(tmp_path):
    document = CaseRepository().builtin(BuiltinCase.POINT).model_dump(mode="json")
    document["study"] = {"strategy": "adaptive", "theta": 0.5, "max_steps": 2}
    document["output"] = {
        "csv": str(tmp_path / "records.csv"),
        "vtk_dir": None,
        "sample_grid": 5,
    }
    config = tmp_path / "case.json"
    config.write_text(json.dumps(document), encoding="utf-8")
    assert main(["solve", "--config", str(config)]) == EXIT_OK
    assert len(RecordRepository().read_all(tmp_path / "records.csv")) == 2
    lines = (tmp_path / "deflection_grid.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,y,deflection"
    assert len(lines) == 1 + 25
    assert "0.5,0.5," in "\n".join(lines)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--builtin", "hexagon"],
        ["solve"],
        ["oracle", "--case", "triangle"],
        ["export-vtk", "--builtin", "point", "--refinements", "-1"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_missing_config_file(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "absent.json")]) == EXIT_USAGE
    assert "Cannot read config" in capsys.readouterr().err


def test_export_vtk(tmp_path):
    path = tmp_path / "square.vtk"
    code = main(["export-vtk", "--builtin", "square", "--refinements", "1", "--out", str(path)])
    assert code == EXIT_OK
    text = path.read_text(encoding="utf-8")
    assert "CELL_DATA 288" in text
    assert "POINT_DATA 169" in text


def test_reproduce_writes_summary(tmp_path):
    summaries = StudyService().reproduce(tmp_path, cases=(BuiltinCase.POINT,), max_dofs=300)
    assert [(s.case, s.strategy) for s in summaries] == [
        ("point", Strategy.UNIFORM),
        ("point", Strategy.ADAPTIVE),
    ]
    assert SummaryRepository().read_all(tmp_path / "summary.csv") == summaries
    assert (tmp_path / "point_uniform.csv").exists()
    assert (tmp_path / "point_adaptive.csv").exists()
    assert all(s.slope_full is not None and s.slope_full < 0 for s in summaries)


def test_numerical_failure_keeps_partial_records(tmp_path, monkeypatch, capsys):
    original = adapt_service.global_estimate

    def failing(solution, problem):
        if problem.mesh.n_dofs > 70:
            raise SolverError("factorization broke down")
        return original(solution, problem)

    monkeypatch.setattr(adapt_service, "global_estimate", failing)
    argv = ["solve", "--builtin", "point", "--max-steps", "3", "--out", str(tmp_path)]
    assert main(argv) == EXIT_NUMERICAL
    assert "study aborted after 1 steps" in capsys.readouterr().err
    records = RecordRepository().read_all(tmp_path / "point_uniform.csv")
    assert [r.ndofs for r in records] == [70]
