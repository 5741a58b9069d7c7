"""EstimateReport: rows of measured ratios / fitted exponents with verdicts, plus JSON/CSV output."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

CSV_HEADER = ["scenario", "case", "input_params", "measured", "theory", "slope", "stderr", "verdict"]
VERDICTS = ("pass", "fail", "info")


@dataclass
class PowerFit:
    slope: float
    intercept: float
    stderr: float


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> PowerFit:
    """Least-squares fit of log y = slope * log x + intercept."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("need at least two points for a fit")
    if lx.size == 2:
        slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return PowerFit(float(slope), float(ly[0] - slope * lx[0]), 0.0)
    res = stats.linregress(lx, ly)
    return PowerFit(float(res.slope), float(res.intercept), float(res.stderr))


@dataclass
class ReportRow:
    case: str
    inputs: dict
    measured: float
    theory: float | None = None
    slope: float | None = None
    stderr: float | None = None
    verdict: str = "info"
    operation: str = ""
    reference: str = ""
    tolerance: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def _clean(obj):
    """Make a value JSON-safe (numpy scalars, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class EstimateReport:
    scenario: str
    rows: list[ReportRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, row: ReportRow) -> ReportRow:
        self.rows.append(row)
        return row

    def extend(self, rows: Sequence[ReportRow]):
        for r in rows:
            self.add(r)

    def row(self, case: str) -> ReportRow:
        for r in self.rows:
            if r.case == case:
                return r
        raise KeyError(case)

    @property
    def passed(self) -> bool:
        return all(r.verdict != "fail" for r in self.rows)

    def to_dict(self) -> dict:
        return _clean({"scenario": self.scenario, "metadata": self.metadata,
                       "rows": [asdict(r) for r in self.rows]})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow([self.scenario, r.case, json.dumps(_clean(r.inputs), sort_keys=True),
                             _fmt(r.measured), _fmt(r.theory), _fmt(r.slope), _fmt(r.stderr), r.verdict])
        return buf.getvalue()

    def write(self, outdir: str | Path) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        jpath, cpath = outdir / "report.json", outdir / "report.csv"
        jpath.write_text(self.to_json())
        cpath.write_text(self.to_csv())
        return jpath, cpath

    def summary(self) -> str:
        lines = [f"[{self.scenario}]"]
        for r in self.rows:
            extra = f" slope={r.slope:.4g}" if r.slope is not None else ""
            lines.append(f"  {r.verdict.upper():4s} {r.case}: measured={r.measured:.6g}{extra}"
                         + (f" theory={r.theory:.4g}" if r.theory is not None else ""))
        return "\n".join(lines)


def within(value: float, target: float, tol: float) -> str:
    return "pass" if math.isfinite(value) and abs(value - target) <= tol else "fail"
