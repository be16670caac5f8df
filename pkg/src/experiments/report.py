"""
Experiment reports: one row per checked or reported quantity, written as CSV
(fixed schema) and as a JSON document that embeds the full run configuration.
"""

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment", "q", "p", "n", "quantity", "value", "stderr", "tolerance", "pass")


@dataclass
class ReportRow:
    experiment: str
    q: Optional[float]
    p: Optional[float]
    n: Any
    quantity: str
    value: float
    stderr: float = 0.0
    tolerance: Optional[float] = None
    passed: Optional[bool] = None
    exploratory: bool = False
    note: str = ""

    def csv_record(self) -> List[str]:
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return f"{x:.15g}"
            return str(x)
        verdict = "" if self.passed is None else ("true" if self.passed else "false")
        return [self.experiment, fmt(self.q), fmt(self.p), fmt(self.n), self.quantity,
                fmt(self.value), fmt(self.stderr), fmt(self.tolerance), verdict]


@dataclass
class ExperimentReport:
    """Rows of one experiment run plus what is needed to replay it."""

    experiment: str
    parameters: Dict[str, Any]
    seed: int
    rows: List[ReportRow] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)
    runtime: float = 0.0
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def record(self, quantity: str, value: float, *, q=None, p=None, n=None, stderr: float = 0.0,
               note: str = "") -> ReportRow:
        """A report-only row; never affects the verdict."""
        row = ReportRow(self.experiment, q, p, n, quantity, float(value), float(stderr), None, None, True, note)
        self.rows.append(row)
        return row

    def check(self, quantity: str, value: float, passed: bool, tolerance: float, *, q=None, p=None, n=None,
              stderr: float = 0.0, exploratory: bool = False, note: str = "") -> ReportRow:
        """An assertion row carrying the tolerance it was checked against."""
        row = ReportRow(self.experiment, q, p, n, quantity, float(value), float(stderr), float(tolerance),
                        bool(passed), exploratory, note)
        self.rows.append(row)
        level = logging.INFO if passed or exploratory else logging.WARNING
        logger.log(level, f"[{self.experiment}] {quantity} q={q} p={p} n={n}: {value:.6g} "
                          f"({'pass' if passed else 'FAIL'}{', exploratory' if exploratory else ''})")
        return row

    @property
    def passed(self) -> bool:
        return not self.errors and all(r.passed for r in self.rows if r.passed is not None and not r.exploratory)

    @property
    def failures(self) -> List[ReportRow]:
        return [r for r in self.rows if r.passed is False and not r.exploratory]

    def finish(self) -> "ExperimentReport":
        self.runtime = time.perf_counter() - self._started
        logger.info(f"Experiment {self.experiment} finished in {self.runtime:.1f}s: "
                    f"{len(self.rows)} rows, {len(self.failures)} failing assertions, {len(self.errors)} errors")
        return self

    def write_csv(self, out_dir) -> Path:
        path = Path(out_dir) / f"{self.experiment}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(row.csv_record())
        return path

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "parameters": self.parameters,
            "runtime": self.runtime,
            "passed": self.passed,
            "errors": self.errors,
            "rows": [asdict(r) for r in self.rows],
        }

    def write_json(self, out_dir) -> Path:
        path = Path(out_dir) / f"{self.experiment}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=_json_default)
        return path


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")
