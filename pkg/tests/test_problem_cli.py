import textwrap

import numpy as np
import pytest

from tebounds import (
    EstimandRequest,
    InputError,
    OverlapError,
    Problem,
    SensitivitySpec,
    breakdown,
    ingest_cell_summary_csv,
    ingest_micro_csv,
    load_config,
    problem_from_config,
    run,
    write_cell_summary,
)
from tebounds.cli import main, _parse_grid, _parse_estimand
from tebounds.errors import EXIT_INPUT, EXIT_OK, EXIT_OVERLAP

FIXTURE_ROWS = "y,x,w\n0,1,a\n1,1,a\n0,0,a\n1,0,a\n"

CONFIG_TEXT = textwrap.dedent(
    """\
    columns:
      outcome: y
      treatment: x
      covariates: [w]
    estimands:
      - name: ate
      - name: qte
        tau: 0.5
    sensitivity:
      kind: msm
      grid: [1.0, 2.0]
    """
)


@pytest.fixture
def fixture_csv(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(FIXTURE_ROWS)
    return str(path)


@pytest.fixture
def fixture_config(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(CONFIG_TEXT)
    return str(path)


class TestIngestion:
    def test_fixture_file(self, fixture_csv):
        cells, digest, dropped = ingest_micro_csv(fixture_csv, "y", "x", ["w"])
        assert len(cells) == 1 and dropped == ()
        cell = cells[0]
        assert cell.id == "w=a"
        assert cell.weight == 1.0
        assert cell.p1 == 0.5
        assert cell.f_treated.support.tolist() == [0.0, 1.0]
        assert cell.f_treated.cum.tolist() == [0.5, 1.0]
        assert len(digest) == 64

    def test_non_binary_treatment(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y,x,w\n0,2,a\n1,1,a\n")
        with pytest.raises(InputError, match="non-binary treatment"):
            ingest_micro_csv(str(path), "y", "x", ["w"])

    def test_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y,x\n0,1\n")
        with pytest.raises(InputError, match="missing columns"):
            ingest_micro_csv(str(path), "y", "x", ["w"])

    def test_unreadable_file(self):
        with pytest.raises(InputError, match="cannot read"):
            ingest_micro_csv("/nonexistent/file.csv", "y", "x", ["w"])

    def test_overlap_violation_names_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y,x,w\n0,1,a\n1,1,a\n0,0,a\n0,1,b\n1,1,b\n")
        with pytest.raises(OverlapError, match="w=b"):
            ingest_micro_csv(str(path), "y", "x", ["w"])

    def test_drop_nonoverlap_reweights(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y,x,w\n0,1,a\n1,1,a\n0,0,a\n0,1,b\n1,1,b\n")
        cells, _, dropped = ingest_micro_csv(
            str(path), "y", "x", ["w"], drop_nonoverlap=True
        )
        assert dropped == ("w=b",)
        assert len(cells) == 1
        assert cells[0].weight == 1.0

    def test_covariate_values_with_spaces(self, tmp_path):
        path = tmp_path / "sp.csv"
        path.write_text(
            "y,x,w\n0,1,group a\n1,1,group a\n0,0,group a\n"
            "0,1,group b\n1,1,group b\n"
        )
        cells, _, dropped = ingest_micro_csv(
            str(path), "y", "x", ["w"], drop_nonoverlap=True
        )
        assert dropped == ("w=group b",)
        assert cells[0].id == "w=group a"

    def test_no_covariate_columns(self, tmp_path):
        path = tmp_path / "nc.csv"
        path.write_text("y,x\n0,1\n1,1\n0,0\n1,0\n")
        cells, _, _ = ingest_micro_csv(str(path), "y", "x", [])
        assert len(cells) == 1
        assert cells[0].id == "w=all"
        assert cells[0].p1 == 0.5

    def test_cell_summary_round_trip(self, fixture_csv, tmp_path, fixture_config):
        cells, _, _ = ingest_micro_csv(fixture_csv, "y", "x", ["w"])
        summary = tmp_path / "cells.csv"
        write_cell_summary(cells, str(summary))
        cells2, _, _ = ingest_cell_summary_csv(str(summary))
        assert len(cells2) == 1
        assert cells2[0].p1 == cells[0].p1
        assert cells2[0].f_treated == cells[0].f_treated
        assert cells2[0].f_control == cells[0].f_control

        config = load_config(fixture_config)
        r1 = run(problem_from_config(config, data_path=fixture_csv))
        r2 = run(problem_from_config(config, cells_path=str(summary)))
        assert r1.row_lines() == r2.row_lines()


class TestProblem:
    def test_weights_must_sum_to_one(self, fixture_csv):
        from tebounds import Cell, StepCdf

        bern = StepCdf.from_pmf([0, 1], [0.5, 0.5])
        with pytest.raises(InputError, match="sum"):
            Problem(
                cells=(Cell("a", 0.4, 0.5, bern, bern),),
                sensitivity=SensitivitySpec.msm([1.0]),
            )

    def test_overlap_checked_at_epsilon(self):
        from tebounds import Cell, StepCdf

        bern = StepCdf.from_pmf([0, 1], [0.5, 0.5])
        cell = Cell("a", 1.0, 0.02, bern, bern)
        with pytest.raises(OverlapError):
            Problem(
                cells=(cell,),
                sensitivity=SensitivitySpec.msm([1.0]),
                overlap_epsilon=0.05,
            )

    def test_unknown_estimand_rejected(self):
        with pytest.raises(InputError):
            EstimandRequest.make("banana")


class TestRun:
    def test_fixture_rows(self, fixture_csv, fixture_config):
        problem = problem_from_config(load_config(fixture_config), data_path=fixture_csv)
        report = run(problem)
        rows = {(r.estimand, r.grid_label): r for r in report.rows}
        assert rows[("ate", "lambda=1")].lo == 0.0
        assert rows[("ate", "lambda=1")].hi == 0.0
        assert rows[("ate", "lambda=2")].lo == pytest.approx(-0.25, abs=1e-12)
        assert rows[("ate", "lambda=2")].hi == pytest.approx(0.25, abs=1e-12)
        assert rows[("qte", "lambda=2")].lo == -1.0

    def test_empty_estimands_provenance_only(self, fixture_csv):
        config = {
            "columns": {"outcome": "y", "treatment": "x", "covariates": ["w"]},
            "sensitivity": {"kind": "msm", "grid": [1.0]},
        }
        report = run(problem_from_config(config, data_path=fixture_csv))
        assert report.rows == ()
        assert any(k == "input-sha256" for k, _ in report.provenance)

    def test_grid_rows_sorted_and_nested(self, fixture_csv):
        config = {
            "columns": {"outcome": "y", "treatment": "x", "covariates": ["w"]},
            "estimands": [{"name": "ate"}],
            "sensitivity": {"kind": "msm", "grid": [1.0, 1.5, 2.0, 4.0]},
        }
        report = run(problem_from_config(config, data_path=fixture_csv))
        rows = [r for r in report.rows if r.estimand == "ate"]
        assert [r.grid_index for r in rows] == [0, 1, 2, 3]
        for a, b in zip(rows, rows[1:]):
            assert b.lo <= a.lo + 1e-12 and a.hi <= b.hi + 1e-12


class TestBreakdown:
    def test_already_covered(self, fixture_csv, fixture_config):
        problem = problem_from_config(load_config(fixture_config), data_path=fixture_csv)
        assert breakdown(problem, EstimandRequest.make("ate"), target=0.0) == 1.0

    def test_bisection_certified(self, fixture_csv, fixture_config):
        from tebounds.report import evaluate_at_lambda

        problem = problem_from_config(load_config(fixture_config), data_path=fixture_csv)
        req = EstimandRequest.make("ate")
        lam = breakdown(problem, req, target=0.1, lambda_max=50.0)
        assert lam == pytest.approx(1.25, abs=1e-4)
        assert evaluate_at_lambda(problem, req, lam + 1e-4).contains(0.1, slack=1e-12)
        assert not evaluate_at_lambda(problem, req, lam - 1e-4).contains(0.1)

    def test_unreachable_target(self, fixture_csv, fixture_config):
        problem = problem_from_config(load_config(fixture_config), data_path=fixture_csv)
        assert breakdown(problem, EstimandRequest.make("ate"), target=5.0) is None

    def test_rejects_copula_dependent(self, fixture_csv, fixture_config):
        problem = problem_from_config(load_config(fixture_config), data_path=fixture_csv)
        with pytest.raises(InputError):
            breakdown(problem, EstimandRequest.make("dte", z=0.0))


class TestSensitivityKinds:
    @pytest.fixture
    def two_cell_csv(self, tmp_path):
        path = tmp_path / "two.csv"
        path.write_text(
            "y,x,w\n0,1,a\n1,1,a\n0,0,a\n1,0,a\n2,1,b\n3,1,b\n2,0,b\n3,0,b\n"
        )
        return str(path)

    def test_conditional_c_grid(self, two_cell_csv):
        config = {
            "columns": {"outcome": "y", "treatment": "x", "covariates": ["w"]},
            "estimands": [{"name": "ate"}],
            "sensitivity": {"kind": "conditional_c", "grid": [0.0, 0.2]},
        }
        report = run(problem_from_config(config, data_path=two_cell_csv))
        rows = {r.grid_label: r for r in report.rows}
        assert rows["c=0"].lo == rows["c=0"].hi == 0.0
        assert rows["c=0.2"].lo == pytest.approx(-2 / 7, abs=1e-12)
        assert rows["c=0.2"].hi == pytest.approx(2 / 7, abs=1e-12)

    def test_gmsm_pairs(self, two_cell_csv):
        config = {
            "columns": {"outcome": "y", "treatment": "x", "covariates": ["w"]},
            "estimands": [{"name": "ate"}],
            "sensitivity": {"kind": "gmsm", "grid": [[0.5, 2.0]]},
        }
        report = run(problem_from_config(config, data_path=two_cell_csv))
        (row,) = report.rows
        assert (row.lambda_lo, row.lambda_hi) == (0.5, 2.0)
        assert row.lo == pytest.approx(-0.25, abs=1e-12)

    def test_raw_per_cell(self, two_cell_csv):
        config = {
            "columns": {"outcome": "y", "treatment": "x", "covariates": ["w"]},
            "estimands": [{"name": "ate"}],
            "sensitivity": {
                "kind": "raw",
                "cells": {"w=a": [0.3, 0.7], "w=b": [0.5, 0.5]},
            },
        }
        report = run(problem_from_config(config, data_path=two_cell_csv))
        (row,) = report.rows
        # only the first cell is widened, so the interval halves
        assert row.lo == pytest.approx(-1 / 7, abs=1e-12)
        assert row.hi == pytest.approx(1 / 7, abs=1e-12)

    def test_raw_missing_cell_rejected(self, two_cell_csv):
        config = {
            "columns": {"outcome": "y", "treatment": "x", "covariates": ["w"]},
            "estimands": [{"name": "ate"}],
            "sensitivity": {"kind": "raw", "cells": {"w=a": [0.3, 0.7]}},
        }
        with pytest.raises(InputError, match="no bounds for cell"):
            run(problem_from_config(config, data_path=two_cell_csv))


class TestThroughput:
    def test_grid_sweep_wall_clock(self):
        import time

        from tebounds import Cell, StepCdf

        rng = np.random.default_rng(0)
        cells = []
        for i in range(25):
            f1 = StepCdf.from_pmf(np.sort(rng.uniform(-2, 2, 6)), rng.dirichlet(np.ones(6)))
            f0 = StepCdf.from_pmf(np.sort(rng.uniform(-2, 2, 6)), rng.dirichlet(np.ones(6)))
            cells.append(Cell(f"w={i:03d}", 1 / 25, float(rng.uniform(0.2, 0.8)), f1, f0))
        problem = Problem(
            cells=tuple(cells),
            sensitivity=SensitivitySpec.msm(list(np.linspace(1.0, 3.0, 50))),
            requests=tuple(
                EstimandRequest.make(n, **p)
                for n, p in [
                    ("ate", {}),
                    ("att", {}),
                    ("qte", {"tau": 0.5}),
                    ("qtt", {"tau": 0.5}),
                    ("aww", {"omega": 0.5}),
                    ("qcate", {"tau": 0.5}),
                    ("dte", {"z": 0.0}),
                    ("joint_cdf", {"y1": 0.0, "y0": 0.0}),
                ]
            ),
        )
        t0 = time.perf_counter()
        report = run(problem)
        dt = time.perf_counter() - t0
        assert len(report.rows) == 400
        # 25 cells x 50 grid points x 8 estimands = 1e4 evaluations
        assert dt < 1.0, f"grid sweep took {dt:.2f}s for 1e4 evaluations"


class TestCliParsing:
    def test_parse_grid_range(self):
        assert _parse_grid("1:3:0.25")[:3] == [1.0, 1.25, 1.5]
        assert _parse_grid("1:3:0.25")[-1] == 3.0
        assert _parse_grid("1,1.5,2") == [1.0, 1.5, 2.0]

    def test_parse_estimand(self):
        req = _parse_estimand("qte:tau=0.5")
        assert req.name == "qte"
        assert req.param_dict() == {"tau": 0.5}


class TestCliCommands:
    def test_bounds_deterministic(self, fixture_csv, fixture_config, tmp_path):
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        base = ["bounds", "--data", fixture_csv, "--config", fixture_config]
        assert main(base + ["--out", str(out1)]) == EXIT_OK
        assert main(base + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_text_report(self, fixture_csv, fixture_config, tmp_path):
        out = tmp_path / "r.csv"
        txt = tmp_path / "r.txt"
        code = main(
            [
                "bounds",
                "--data",
                fixture_csv,
                "--config",
                fixture_config,
                "--out",
                str(out),
                "--text-out",
                str(txt),
            ]
        )
        assert code == EXIT_OK
        assert "bound report" in txt.read_text()

    def test_exit_codes(self, tmp_path, fixture_config):
        bad = tmp_path / "bad.csv"
        bad.write_text("y,x,w\n0,2,a\n")
        assert main(["bounds", "--data", str(bad), "--config", fixture_config]) == EXIT_INPUT
        noover = tmp_path / "noover.csv"
        noover.write_text("y,x,w\n0,1,a\n1,1,a\n")
        assert (
            main(["bounds", "--data", str(noover), "--config", fixture_config])
            == EXIT_OVERLAP
        )

    def test_grid_and_estimand_flags(self, fixture_csv, fixture_config, tmp_path, capsys):
        code = main(
            [
                "bounds",
                "--data",
                fixture_csv,
                "--config",
                fixture_config,
                "--grid",
                "1:2:1",
                "--estimand",
                "att",
                "--estimand",
                "qtt",
                "--tau",
                "0.5",
            ]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "att,," in out
        assert "qtt,tau=0.5," in out

    def test_convert(self, capsys):
        assert main(["convert", "--p1", "0.5", "--lam", "2"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "c_lo=0.333333333333" in out
        assert "lambda_hi=2" in out

    def test_convert_from_c(self, capsys):
        assert main(["convert", "--p1", "0.5", "--c-lo", "0.3", "--c-hi", "0.7"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "lambda_lo=0.428571428571" in out

    def test_oracle_check(self, fixture_csv, fixture_config, capsys):
        code = main(
            [
                "oracle-check",
                "--data",
                fixture_csv,
                "--config",
                fixture_config,
                "--resolution",
                "60",
            ]
        )
        assert code == EXIT_OK
        assert "oracle check passed" in capsys.readouterr().out

    def test_bounds_with_breakdown_target(self, fixture_csv, fixture_config, capsys):
        code = main(
            [
                "bounds",
                "--data",
                fixture_csv,
                "--config",
                fixture_config,
                "--breakdown-target",
                "0.1",
            ]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "# breakdown ate: 1.25" in out
        assert "# breakdown qte" in out

    def test_internal_error_exit_code(self, monkeypatch, fixture_csv, fixture_config):
        from tebounds import cli
        from tebounds.errors import EXIT_INTERNAL, InternalError

        def boom(problem, breakdown_target=None):
            raise InternalError("synthetic invariant breach")

        monkeypatch.setattr(cli, "run", boom)
        code = cli.main(["bounds", "--data", fixture_csv, "--config", fixture_config])
        assert code == EXIT_INTERNAL

    def test_breakdown_command(self, fixture_csv, fixture_config, capsys):
        code = main(
            [
                "breakdown",
                "--data",
                fixture_csv,
                "--config",
                fixture_config,
                "--estimand",
                "ate",
                "--target",
                "0.1",
            ]
        )
        assert code == EXIT_OK
        assert "lambda=1.25" in capsys.readouterr().out
