import csv
import io

import pytest

from shishkin_sdfem import cli
from shishkin_sdfem.cli import (
    HEADER,
    ConvergenceTable,
    StudySpec,
    check_table,
    emit,
    main,
    parse_config,
    run_study,
)
from shishkin_sdfem.fem import SolverError
from shishkin_sdfem.mesh import InvalidConfigError

EXPECTED_HEADER = (
    "eps,N,interp_inf_omega_s,interp_inf_rest,energy_uI_U,nodal_inf_s1,green_energy_sq,"
    "term1_eps_delta,term2_BeG,rate_interp_inf_omega_s,rate_interp_inf_rest,rate_energy_uI_U,"
    "rate_nodal_inf_s1,rate_green_energy_sq,rate_term1_eps_delta,rate_term2_BeG"
)


@pytest.fixture(scope="module")
def small_table():
    return run_study(StudySpec(epsilons=(1e-6,), n_list=(24, 48), benchmark="curved"))


def test_two_row_study(small_table):
    assert [r.N for r in small_table.rows] == [24, 48]
    text = emit(small_table, "csv")
    lines = text.split("\n")
    assert lines[0] == EXPECTED_HEADER
    assert len(lines) == 5 and lines[-1] == ""  # header, two rows, rate row, trailing newline
    assert "\r" not in text
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[1][:2] == ["1e-06", "24"] and rows[2][:2] == ["1e-06", "48"]
    assert rows[3][1] == "rate" and all(c == "" for c in rows[3][2:9])
    # the least-squares rate from two points equals the local rate of the second row
    assert rows[3][9:] == rows[2][9:]
    # 10 significant digits
    assert len(rows[1][2].replace(".", "").split("e")[0].lstrip("0")) <= 10


def test_identity_defect_recorded(small_table):
    for row in small_table.rows:
        assert row.identity_defect is not None and row.identity_defect < 1e-8


def test_markdown_renders_same_cells(small_table):
    csv_rows = list(csv.reader(io.StringIO(emit(small_table, "csv"))))
    md = emit(small_table, "markdown").strip().split("\n")
    md_rows = [[c.strip() for c in line.strip("|").split("|")] for line in md]
    assert md_rows[0] == csv_rows[0]
    assert md_rows[2:] == csv_rows[1:]


def test_single_row_table():
    table = run_study(StudySpec(epsilons=(1e-6,), n_list=(12,), green_node=None))
    lines = emit(table).strip().split("\n")
    assert len(lines) == 3 and lines[2].startswith("1e-06,rate")
    assert list(csv.reader([lines[1]]))[0][6:9] == ["", "", ""]
    assert check_table(table) == []


def test_emit_contract():
    with pytest.raises(ValueError):
        emit(ConvergenceTable(StudySpec()), "csv")
    table = run_study(StudySpec(epsilons=(1e-6,), n_list=(12,), green_node=None))
    with pytest.raises(ValueError):
        emit(table, "json")


def test_deterministic_bytes(tmp_path):
    args = ["--epsilon", "1e-6,1e-5", "--n-list", "12,24", "--format", "csv"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    # rows are ordered by eps (descending) then N, whatever the input order
    c = tmp_path / "c.csv"
    assert main(["--epsilon", "1e-5,1e-6", "--n-list", "24,12", "--out", str(c)]) == 0
    assert c.read_bytes() == a.read_bytes()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("# demo\nepsilon = 1e-6\nn_list = 12, 24\nbenchmark = curved\n"
                   "green_node = 0.9999, 0.5\nc_star = 0.5\nformat = markdown\n")
    spec = parse_config(cfg.read_text())
    assert spec["epsilons"] == (1e-6,) and spec["n_list"] == (12, 24)
    assert spec["green_node"] == (0.9999, 0.5) and spec["c_star"] == 0.5
    out = tmp_path / "out.md"
    assert main([str(cfg), "--n-list", "12", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("| eps | N |") and text.count("\n") == 4


@pytest.mark.parametrize("text", ["epsilon 1e-6", "bogus = 1", "n_list = a,b", "green_node = 0.5"])
def test_bad_config_lines(text):
    with pytest.raises(InvalidConfigError):
        parse_config(text)


@pytest.mark.parametrize("args", [["--n-list", "25"], ["--n-list", ""], ["--epsilon", "2"],
                                  ["--format", "xml"], ["--green-node", "1.5,0.5"], ["--quad-order", "1"],
                                  ["/nonexistent/study.cfg"]])
def test_config_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert "config error" in capsys.readouterr().err


def test_numerical_failure_exits_3(monkeypatch, capsys):
    def boom(system, rhs=None, transpose=False):
        raise SolverError("synthetic failure")

    monkeypatch.setattr(cli, "solve", boom)
    assert main(["--n-list", "12", "--green-node", "none"]) == 3
    assert "eps=1e-06, N=12" in capsys.readouterr().err


def test_check_failure_exits_4(capsys):
    # N = 6, 12 is far too coarse for the asymptotic interpolation rates
    assert main(["--n-list", "6,12", "--epsilon", "1e-6", "--green-node", "none", "--check"]) == 4
    assert "check failed" in capsys.readouterr().err


def test_check_passes_on_a_real_study(capsys):
    assert main(["--n-list", "24,48,96", "--epsilon", "1e-6", "--check"]) == 0
    out = capsys.readouterr().out
    assert out.split("\n")[0] == ",".join(HEADER)


def test_rates_only_within_one_eps():
    table = run_study(StudySpec(epsilons=(1e-5, 1e-6), n_list=(12, 24), green_node=None))
    rows = list(csv.reader(io.StringIO(emit(table))))
    assert [r[:2] for r in rows[1:]] == [["1e-05", "12"], ["1e-05", "24"], ["1e-05", "rate"],
                                         ["1e-06", "12"], ["1e-06", "24"], ["1e-06", "rate"]]
    assert rows[4][9] == ""  # the first row of the second eps block has no local rate
