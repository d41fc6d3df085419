import json
import math
import subprocess
import sys

import numpy as np
import pytest

from oscphase.benchmark import (
    CSV_COLUMNS,
    ExperimentSpec,
    SweepRow,
    read_csv,
    read_json,
    run_problem,
    run_sweep,
    write_csv,
    write_json,
)
from oscphase.cli import main
from oscphase.errors import InvalidArgument
from oscphase.ode_solver import SolverConfig
from oscphase.phase import PhaseFunction
from oscphase.solve import Solution


def quick(**kwargs):
    kwargs.setdefault("repeats", 1)
    return ExperimentSpec(**kwargs)


class TestExperimentSpec:
    def test_defaults(self):
        spec = ExperimentSpec()
        assert (spec.count, spec.eps, spec.k, spec.variant) == (100, 1e-13, 16, "rrqr")
        lams = spec.lambdas()
        assert lams.size == 100 and lams[0] == pytest.approx(10) and lams[-1] == pytest.approx(1e6)
        np.testing.assert_allclose(np.diff(np.log10(lams)), 5 / 99)

    def test_linear_spacing(self):
        np.testing.assert_allclose(quick(lambda_min=1, lambda_max=10, count=10, spacing="linear").lambdas(), range(1, 11))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"problem": "x"},
            {"lambda_min": 10, "lambda_max": 1},
            {"lambda_min": 0},
            {"count": 0},
            {"spacing": "cubic"},
            {"eps": 1.5},
            {"k": 1},
            {"variant": "lu"},
            {"repeats": 0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidArgument):
            ExperimentSpec(**kwargs)


class TestRunProblem:
    def test_airy_row(self):
        row = run_problem(quick(problem="airy"), 1.0)
        assert row.ok and row.reference.startswith("fixture")
        assert row.max_abs_err <= 1e-11
        assert row.n_coeffs_phase > 0 and row.n_coeffs_levin > 0
        assert 0 <= row.time_phase <= row.time_total and 0 <= row.time_levin <= row.time_total

    def test_missing_reference_is_flagged(self):
        row = run_problem(quick(problem="bvp4"), 12.5)
        assert row.status == "no reference" and math.isnan(row.max_abs_err)
        assert row.n_coeffs_phase > 0

    def test_failure_is_recorded(self):
        class TinyBudget(ExperimentSpec):
            def config(self):
                return SolverConfig(max_intervals=2)

        row = run_problem(TinyBudget(problem="airy", repeats=1), 1e4)
        assert row.status.startswith("failed") and not row.ok

    def test_determinism(self):
        spec = quick(problem="bvp3")
        one, two = run_problem(spec, 100.0), run_problem(spec, 100.0)
        assert (one.max_abs_err, one.n_coeffs_phase, one.n_coeffs_levin) == (
            two.max_abs_err,
            two.n_coeffs_phase,
            two.n_coeffs_levin,
        )


class TestSweep:
    def test_single_row_matches_run_problem(self):
        spec = quick(problem="ivp2", lambda_min=100, lambda_max=100, count=1)
        (row,) = run_sweep(spec)
        direct = run_problem(spec, 100.0)
        assert row.max_abs_err == direct.max_abs_err
        assert (row.n_coeffs_phase, row.n_coeffs_levin) == (direct.n_coeffs_phase, direct.n_coeffs_levin)

    def test_files_round_trip(self, tmp_path):
        spec = quick(
            problem="airy",
            lambda_min=1,
            lambda_max=1e3,
            count=3,
            csv_path=str(tmp_path / "s.csv"),
            json_path=str(tmp_path / "s.json"),
        )
        rows = run_sweep(spec)
        header = (tmp_path / "s.csv").read_text().splitlines()[0]
        assert header.split(",") == list(CSV_COLUMNS)
        back = read_csv(tmp_path / "s.csv")
        for a, b in zip(rows, back):
            assert (a.lam, a.max_abs_err, a.time_total, a.n_coeffs_phase, a.status) == (
                b.lam,
                b.max_abs_err,
                b.time_total,
                b.n_coeffs_phase,
                b.status,
            )
        meta, jrows = read_json(tmp_path / "s.json")
        assert {"k", "eps", "variant", "git_revision", "timestamp"} <= set(meta)
        assert [r.to_dict() for r in jrows] == [r.to_dict() for r in rows]

    def test_nan_round_trip(self, tmp_path):
        rows = [SweepRow(lam=2.0, status="no reference", n_coeffs_phase=5)]
        write_csv(rows, tmp_path / "r.csv")
        write_json(rows, quick(), tmp_path / "r.json")
        assert math.isnan(read_csv(tmp_path / "r.csv")[0].max_abs_err)
        json.loads((tmp_path / "r.json").read_text())
        assert math.isnan(read_json(tmp_path / "r.json")[1][0].max_abs_err)

    def test_every_row_uses_ten_thousand_points(self):
        from oscphase.problems import SAMPLE_COUNT, reference_values

        assert reference_values("airy", 3.0).t.size == SAMPLE_COUNT == 10_000


class TestCommandLine:
    def test_run(self, tmp_path, capsys):
        out = tmp_path / "row.json"
        assert main(["run", "--problem", "airy", "--lambda", "1e3", "--repeats", "1", "--out", str(out)]) == 0
        meta, (row,) = read_json(out)
        assert row.ok and row.max_abs_err <= 1e-10 and meta["variant"] == "rrqr"
        assert "1000" in capsys.readouterr().out

    def test_run_without_reference_is_partial(self):
        assert main(["run", "--problem", "bvp4", "--lambda", "12.5", "--repeats", "1"]) == 2

    def test_sweep(self, tmp_path):
        out = tmp_path / "sweep.csv"
        args = ["sweep", "--problem", "airy", "--lambda-min", "1", "--lambda-max", "10", "--count", "2"]
        assert main(args + ["--repeats", "1", "--quiet", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert [r.lam for r in rows] == [1.0, 10.0]
        assert (tmp_path / "sweep.json").exists()

    def test_partial_sweep(self, tmp_path):
        out = tmp_path / "sweep.csv"
        args = ["sweep", "--problem", "bvp4", "--lambda-min", "10", "--lambda-max", "12.5", "--count", "2"]
        assert main(args + ["--repeats", "1", "--quiet", "--out", str(out)]) == 2
        assert [r.status for r in read_csv(out)] == ["ok", "no reference"]

    @pytest.mark.parametrize("what", ["phase", "levin", "solution"])
    def test_dump(self, tmp_path, what):
        out = tmp_path / f"{what}.json"
        assert main(["dump", "--what", what, "--problem", "bvp3", "--lambda", "50", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["problem"] == "bvp3" and what in payload
        if what == "phase":
            PhaseFunction.from_dict(payload["phase"])
        if what == "solution":
            sol = Solution.from_dict(payload["solution"])
            assert np.isfinite(sol(0.0))

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "--problem", "nope", "--lambda", "1"],
            ["run", "--problem", "airy"],
            ["frobnicate"],
            ["run", "--problem", "airy", "--lambda", "-1"],
        ],
    )
    def test_hard_failures(self, argv):
        with pytest.raises(SystemExit) as info:
            code = main(argv)
            raise SystemExit(code)
        assert info.value.code == 1

    def test_unwritable_output(self, tmp_path):
        out = tmp_path / "missing" / "row.json"
        assert main(["run", "--problem", "airy", "--lambda", "1", "--repeats", "1", "--out", str(out)]) == 1

    def test_console_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "oscphase.cli", "--help"], capture_output=True, text=True, check=False
        )
        assert proc.returncode == 0 and "sweep" in proc.stdout
