"""Lambda sweeps over the benchmark problems.

Each row solves one problem instance, times the phase and Levin stages
(median of several repetitions), and records the largest absolute error
over `SAMPLE_COUNT` equispaced interior points against the reference.
"""

from __future__ import annotations

import csv
import datetime
import json
import math
import subprocess
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidArgument, OscPhaseError
from .levin import SOLVERS
from .ode_solver import SolverConfig
from .problems import PROBLEM_IDS, NoReference, make_problem, reference_values
from .solve import eval_solution, solve

__all__ = [
    "CSV_COLUMNS",
    "ExperimentSpec",
    "SweepRow",
    "run_problem",
    "run_sweep",
    "write_csv",
    "read_csv",
    "write_json",
    "read_json",
    "git_revision",
]

CSV_COLUMNS = (
    "lambda",
    "max_abs_err",
    "time_phase",
    "time_levin",
    "time_total",
    "n_coeffs_phase",
    "n_coeffs_levin",
    "status",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """A problem, a lambda grid and solver settings.

    Defaults follow the standard protocol: 100 log-spaced values in
    ``[10, 10^6]``, ``eps = 1e-13`` and 16-point (degree 15) expansions.
    """

    problem: str = "airy"
    lambda_min: float = 1e1
    lambda_max: float = 1e6
    count: int = 100
    spacing: str = "log"
    eps: float = 1e-13
    k: int = 16
    variant: str = "rrqr"
    repeats: int = 3
    csv_path: Optional[str] = None
    json_path: Optional[str] = None

    def __post_init__(self):
        if self.problem not in PROBLEM_IDS:
            raise InvalidArgument(f"unknown problem {self.problem!r}; expected one of {PROBLEM_IDS}")
        if not (0 < self.lambda_min <= self.lambda_max and math.isfinite(self.lambda_max)):
            raise InvalidArgument("need 0 < lambda_min <= lambda_max < inf")
        if int(self.count) != self.count or self.count < 1:
            raise InvalidArgument("count must be a positive integer")
        if self.spacing not in ("log", "linear"):
            raise InvalidArgument("spacing must be 'log' or 'linear'")
        if not 0 < self.eps < 1:
            raise InvalidArgument("eps must lie in (0, 1)")
        if int(self.k) != self.k or self.k < 2:
            raise InvalidArgument("k must be an integer >= 2")
        if self.variant not in SOLVERS:
            raise InvalidArgument(f"variant must be one of {sorted(SOLVERS)}")
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise InvalidArgument("repeats must be a positive integer")

    def lambdas(self):
        if self.count == 1:
            return np.array([float(self.lambda_min)])
        if self.spacing == "log":
            return np.logspace(np.log10(self.lambda_min), np.log10(self.lambda_max), self.count)
        return np.linspace(self.lambda_min, self.lambda_max, self.count)

    def config(self):
        return SolverConfig(k=int(self.k), eps=float(self.eps))


@dataclass
class SweepRow:
    """One measured solve.  ``status`` is ``"ok"``, ``"no reference"`` or ``"failed: ..."``."""

    lam: float
    max_abs_err: float = float("nan")
    time_phase: float = float("nan")
    time_levin: float = float("nan")
    time_total: float = float("nan")
    n_coeffs_phase: int = 0
    n_coeffs_levin: int = 0
    status: str = "ok"
    reference: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "ok"

    def csv_record(self):
        return {
            "lambda": repr(float(self.lam)),
            "max_abs_err": repr(float(self.max_abs_err)),
            "time_phase": repr(float(self.time_phase)),
            "time_levin": repr(float(self.time_levin)),
            "time_total": repr(float(self.time_total)),
            "n_coeffs_phase": str(int(self.n_coeffs_phase)),
            "n_coeffs_levin": str(int(self.n_coeffs_levin)),
            "status": self.status,
        }

    def to_dict(self):
        return asdict(self)


def run_problem(spec, lam, reference_dir=None):
    """Solve ``spec.problem`` at ``lam`` and measure it.

    Solve failures and missing references are recorded in the row's
    ``status`` instead of being raised.
    """
    problem = make_problem(spec.problem, lam)
    row = SweepRow(lam=float(lam))
    config = spec.config()
    reports = []
    try:
        for _ in range(spec.repeats):
            sol = solve(problem.q, problem.f, problem.interval, problem.bcs, config, spec.variant, residual_samples=0)
            reports.append(sol.report)
    except OscPhaseError as exc:
        row.status = f"failed: {exc}"
        return row
    row.time_phase = float(np.median([r.time_phase for r in reports]))
    row.time_levin = float(np.median([r.time_levin for r in reports]))
    row.time_total = float(np.median([r.time_total for r in reports]))
    row.n_coeffs_phase = sol.report.n_coeffs_phase
    row.n_coeffs_levin = sol.report.n_coeffs_levin
    row.extra = {
        "n_intervals_phase": sol.report.n_intervals_phase,
        "n_intervals_levin": sol.report.n_intervals_levin,
        "condition": sol.report.condition,
    }
    try:
        ref = reference_values(spec.problem, lam, reference_dir)
    except NoReference as exc:
        row.status = "no reference"
        row.reference = str(exc)
        return row
    y, _ = eval_solution(sol, ref.t)
    row.max_abs_err = float(np.max(np.abs(y - ref.y)))
    row.reference = ref.source
    return row


def git_revision():
    """Current git commit of the working directory, or ``"unknown"``."""
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            check=True,
            cwd=Path(__file__).resolve().parent,
        )
        return out.stdout.strip()
    except (OSError, subprocess.CalledProcessError):
        return "unknown"


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.csv_record())


def read_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                SweepRow(
                    lam=float(rec["lambda"]),
                    max_abs_err=float(rec["max_abs_err"]),
                    time_phase=float(rec["time_phase"]),
                    time_levin=float(rec["time_levin"]),
                    time_total=float(rec["time_total"]),
                    n_coeffs_phase=int(rec["n_coeffs_phase"]),
                    n_coeffs_levin=int(rec["n_coeffs_levin"]),
                    status=rec["status"],
                )
            )
    return rows


def _jsonable(value):
    # NaN is not valid JSON; encode it as null
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else repr(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def write_json(rows, spec, path):
    meta = {
        "problem": spec.problem,
        "k": spec.k,
        "eps": spec.eps,
        "variant": spec.variant,
        "repeats": spec.repeats,
        "spacing": spec.spacing,
        "lambda_min": spec.lambda_min,
        "lambda_max": spec.lambda_max,
        "count": spec.count,
        "git_revision": git_revision(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    payload = {"metadata": meta, "rows": [_jsonable(r.to_dict()) for r in rows]}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_json(path):
    """Return ``(metadata, rows)`` from a file written by `write_json`."""
    payload = json.loads(Path(path).read_text())
    names = {f.name for f in fields(SweepRow)}
    rows = []
    for rec in payload["rows"]:
        rec = {k: (float("nan") if v is None else v) for k, v in rec.items() if k in names}
        rows.append(SweepRow(**rec))
    return payload["metadata"], rows


def run_sweep(spec, reference_dir=None, progress=None):
    """Run one row per lambda of ``spec`` and write the requested files.

    ``progress`` is called with each finished row.  Returns the rows.
    """
    rows = []
    for lam in spec.lambdas():
        row = run_problem(spec, float(lam), reference_dir)
        rows.append(row)
        if progress is not None:
            progress(row)
    if spec.csv_path:
        write_csv(rows, spec.csv_path)
    if spec.json_path:
        write_json(rows, spec, spec.json_path)
    return rows
