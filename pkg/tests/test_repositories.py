import json

import numpy as np
import pytest

from constants.options import BuiltinCase, Strategy
from models.dto.study import ConvergenceRecord, SlopeSummary
from repositories.domains.case_repo import CaseRepository
from repositories.domains.record_repo import RecordRepository, SummaryRepository
from repositories.domains.vtk_repo import VtkRepository
from utils.errors import ConfigError, PlateError


@pytest.fixture
def records():
    return [
        ConvergenceRecord(step=0, ndofs=70, nelems=8, eta=1.0305127, energynorm=0.0334469831818),
        ConvergenceRecord(step=1, ndofs=206, nelems=32, eta=0.4937, energynorm=None),
    ]


def test_records_csv_layout(tmp_path, records):
    path = RecordRepository().write_all(tmp_path / "out" / "point_uniform.csv", records)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "ndofs,nelems,eta,energynorm"
    assert lines[1] == "70,8,1.0305127,0.0334469831818"
    assert lines[2] == "206,32,0.4937,"


def test_records_read_back(tmp_path, records):
    repo = RecordRepository()
    path = repo.write_all(tmp_path / "records.csv", records)
    assert repo.read_all(path) == records


def test_record_steps_follow_row_order(tmp_path, records):
    # step は列に無いので、書き込み時の値ではなく行の順番で決まる
    shifted = [r.model_copy(update={"step": r.step + 5}) for r in records]
    repo = RecordRepository()
    path = repo.write_all(tmp_path / "records.csv", shifted)
    assert [r.step for r in repo.read_all(path)] == [0, 1]
    assert SummaryRepository.row_number_field is None


def test_summary_csv(tmp_path):
    repo = SummaryRepository()
    summaries = [
        SlopeSummary(case="point", strategy=Strategy.UNIFORM, slope_last=-0.535, slope_full=-0.6),
        SlopeSummary(case="line", strategy=Strategy.ADAPTIVE),
    ]
    path = repo.write_all(tmp_path / "summary.csv", summaries)
    assert path.read_text(encoding="utf-8").splitlines() == [
        "case,strategy,slope_last,slope_full",
        "point,uniform,-0.535,-0.6",
        "line,adaptive,,",
    ]
    assert repo.read_all(path) == summaries


def test_csv_with_foreign_header_is_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("ndofs,eta\n70,1.0\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="expected columns"):
        RecordRepository().read_all(path)


def test_vtk_file(tmp_path, grid_mesh):
    eta = np.linspace(0.1, 0.8, grid_mesh.n_triangles)
    deflection = np.arange(grid_mesh.n_vertices, dtype=float) / 10
    path = VtkRepository().write(tmp_path / "mesh.vtk", grid_mesh, eta, deflection, title="t")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:5] == [
        "# vtk DataFile Version 2.0",
        "t",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        "POINTS 9 double",
    ]
    assert lines[5] == "0.0 0.0 0.0"
    assert "CELLS 8 32" in lines
    assert lines.count("5") == 8
    cell_data = lines.index("CELL_DATA 8")
    assert lines[cell_data + 1 : cell_data + 3] == [
        "SCALARS eta_K double 1",
        "LOOKUP_TABLE default",
    ]
    assert float(lines[cell_data + 3]) == pytest.approx(0.1)
    point_data = lines.index("POINT_DATA 9")
    assert lines[point_data + 1] == "SCALARS deflection double 1"
    assert [float(v) for v in lines[point_data + 3 :]] == deflection.tolist()


def test_vtk_rejects_mismatched_fields(tmp_path, grid_mesh):
    with pytest.raises(PlateError):
        VtkRepository().write(
            tmp_path / "mesh.vtk", grid_mesh, np.zeros(3), np.zeros(grid_mesh.n_vertices)
        )


def test_config_round_trip(tmp_path):
    repo = CaseRepository()
    config = repo.builtin("point")
    path = tmp_path / "point.json"
    path.write_text(config.model_dump_json(), encoding="utf-8")
    assert repo.load(path) == config


def test_config_errors_name_the_field():
    document = CaseRepository().builtin(BuiltinCase.POINT).model_dump(mode="json")
    document["study"]["theta"] = 1.5
    with pytest.raises(ConfigError, match=r"study\.theta"):
        CaseRepository().parse(json.dumps(document), source="case.json")


def test_config_rejects_unknown_keys():
    document = CaseRepository().builtin(BuiltinCase.POINT).model_dump(mode="json")
    document["material"]["poisson"] = 0.3
    with pytest.raises(ConfigError, match=r"material\.poisson"):
        CaseRepository().parse_document(document)


def test_config_json_errors_carry_position():
    with pytest.raises(ConfigError, match=r"case\.json:2:"):
        CaseRepository().parse('{"name": "x",\n  "geometry": }', source="case.json")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="Cannot read config"):
        CaseRepository().load(tmp_path / "absent.json")


def test_unknown_builtin():
    with pytest.raises(ConfigError, match="Unknown built-in case"):
        CaseRepository().builtin("hexagon")
