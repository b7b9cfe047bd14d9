"""CSV ingestion, report assembly, and serialization for the CLI.

All real numbers are serialized with ``repr`` (shortest round-trip, up to 17
significant digits) so reports re-parse to the exact in-memory values.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .bootstrap import BootstrapConfig, IntervalSet, TerminalCoefficients
from .exceptions import CsvParseError
from .inference import InferenceReport
from .path import LarPath, StandardizedData

SCHEMA_VERSION = 1

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]


def read_csv(path: str | Path) -> tuple[list[str], Matrix]:
    """Read a numeric CSV with a required header row.

    Comma-separated, UTF-8, '.' decimal.  Raises CsvParseError with 1-based
    row/column coordinates on any malformed cell or ragged row.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError("empty file", 1, 1) from None
        names = [h.strip() for h in header]
        if any(not name for name in names):
            col = next(i for i, name in enumerate(names) if not name) + 1
            raise CsvParseError("empty header field", 1, col)
        rows: list[list[float]] = []
        for r, raw in enumerate(reader, start=2):
            if len(raw) != len(names):
                raise CsvParseError(
                    f"expected {len(names)} fields, found {len(raw)}", r, len(raw) + 1
                )
            parsed = []
            for c, cell in enumerate(raw, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvParseError(f"malformed numeric cell {cell!r}", r, c) from None
            rows.append(parsed)
    if not rows:
        raise CsvParseError("no data rows", 2, 1)
    return names, np.array(rows)


def split_response(
    names: list[str], table: Matrix, response: str
) -> tuple[list[str], Matrix, Vector]:
    """Split a parsed CSV into features and the named response column."""
    if response in names:
        idx = names.index(response)
    else:
        try:
            idx = int(response)
        except ValueError:
            raise CsvParseError(f"no column named {response!r}", 1, 1) from None
        if not 0 <= idx < len(names):
            raise CsvParseError(f"response index {idx} out of range", 1, idx + 1)
    feature_names = [n for i, n in enumerate(names) if i != idx]
    keep = [i for i in range(len(names)) if i != idx]
    return feature_names, table[:, keep], table[:, idx]


def diabetes_fixture_path() -> Path:
    return Path(str(resources.files("larinfer").joinpath("data/diabetes.csv")))


def load_diabetes() -> tuple[list[str], Matrix, Vector]:
    """Bundled diabetes benchmark: 442 rows, 10 precentered unit-norm columns."""
    names, table = read_csv(diabetes_fixture_path())
    return split_response(names, table, "progression")


def _float(x) -> float:
    return float(x)


def path_report_dict(
    path: LarPath, data: StandardizedData, names: list[str], response: str
) -> dict:
    """Fit report: step table plus correlation and coefficient traces."""
    steps = [
        {
            "step": k,
            "variable": names[s.entrant],
            "index": s.entrant,
            "sign": _float(s.sign),
            "correlation": _float(s.correlation),
            "angle": _float(s.angle),
            "weight": _float(s.weight),
        }
        for k, s in enumerate(path.steps, start=1)
    ]
    abs_corr = [np.abs(s.correlations_all).tolist() for s in path.steps]
    coefs = path.coefficients.tolist()
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit",
        "n": data.n,
        "p": data.p,
        "response": response,
        "centered": data.centered,
        "variables": names,
        "terminated_at": path.terminated_at,
        "steps": steps,
        "correlation_traces": abs_corr,
        "coefficient_traces": coefs,
    }


@dataclass(frozen=True)
class InferredPathReport:
    """Everything the inference tables and panels need, in one document."""

    names: list[str]
    response: str
    data: StandardizedData
    path: LarPath
    inference: InferenceReport
    intervals: IntervalSet
    terminal: TerminalCoefficients
    cfg: BootstrapConfig

    def to_dict(self) -> dict:
        names, path = self.names, self.path
        inf, iv = self.inference, self.intervals
        step_rows = [
            {
                "step": k,
                "variable": names[path.steps[k - 1].entrant],
                "tail_sum": _float(inf.S[k - 1]),
                "threshold": _float(inf.thresholds[k - 1]),
                "correlation": _float(path.correlations[k - 1]),
                "interval_lo": _float(iv.correlation_intervals[k - 1, 0]),
                "interval_hi": _float(iv.correlation_intervals[k - 1, 1]),
            }
            for k in range(1, len(path.steps) + 1)
        ]
        m_bar = inf.m_bar
        terminal_rows = [
            {
                "variable": names[j],
                "estimate": _float(self.terminal.b_bar[j]),
                "interval_lo": _float(iv.coefficient_intervals[(m_bar, j)][0]),
                "interval_hi": _float(iv.coefficient_intervals[(m_bar, j)][1]),
                "raw_estimate": _float(self.terminal.raw_scale[j]),
            }
            for j in path.entrants[:m_bar]
        ]
        coef_rows = [
            {
                "step": k,
                "variable": names[j],
                "estimate": _float(
                    self.terminal.b_bar[j] if k == m_bar else path.coefficients[k - 1, j]
                ),
                "interval_lo": _float(lo),
                "interval_hi": _float(hi),
            }
            for (k, j), (lo, hi) in sorted(iv.coefficient_intervals.items())
        ]
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "infer",
            "n": self.data.n,
            "p": self.data.p,
            "response": self.response,
            "centered": self.data.centered,
            "alpha": self.cfg.alpha,
            "draws": self.cfg.draws,
            "seed": self.cfg.seed,
            "variables": names,
            "sigma_hat": _float(inf.sigma_hat),
            "m_bar": m_bar,
            "steps": step_rows,
            "terminal_coefficients": terminal_rows,
            "coefficient_intervals": coef_rows,
            "membership_freq": iv.membership_freq.tolist(),
            "correlation_traces": [
                np.abs(s.correlations_all).tolist() for s in path.steps
            ],
            "coefficient_traces": path.coefficients.tolist(),
        }


def write_json(doc: dict, out) -> None:
    json.dump(doc, out, indent=2)
    out.write("\n")


def write_fit_csv(doc: dict, out) -> None:
    names = doc["variables"]
    writer = csv.writer(out)
    header = ["step", "variable", "sign", "correlation", "angle", "weight"]
    header += [f"abs_corr_{n}" for n in names] + [f"coef_{n}" for n in names]
    writer.writerow(header)
    for i, row in enumerate(doc["steps"]):
        cells = [
            row["step"], row["variable"], repr(row["sign"]),
            repr(row["correlation"]), repr(row["angle"]), repr(row["weight"]),
        ]
        cells += [repr(v) for v in doc["correlation_traces"][i]]
        cells += [repr(v) for v in doc["coefficient_traces"][i]]
        writer.writerow(cells)


def write_infer_csv(doc: dict, out) -> None:
    writer = csv.writer(out)
    writer.writerow(
        ["step", "variable", "tail_sum", "threshold", "correlation",
         "interval_lo", "interval_hi"]
    )
    for row in doc["steps"]:
        writer.writerow(
            [row["step"], row["variable"], repr(row["tail_sum"]),
             repr(row["threshold"]), repr(row["correlation"]),
             repr(row["interval_lo"]), repr(row["interval_hi"])]
        )
    writer.writerow([])
    writer.writerow(["variable", "estimate", "interval_lo", "interval_hi", "raw_estimate"])
    for row in doc["terminal_coefficients"]:
        writer.writerow(
            [row["variable"], repr(row["estimate"]), repr(row["interval_lo"]),
             repr(row["interval_hi"]), repr(row["raw_estimate"])]
        )
