"""Command-line front end.

Subcommands: ``fit`` (path only), ``infer`` (full inference report),
``simulate`` (coverage study from a scenario file), and ``tie-demo``
(the mid-path tie construction).  Exit codes: 0 ok, 2 parse error,
3 numeric/shape error, 4 simulation budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import io as reports
from .bootstrap import BootstrapConfig, bootstrap_intervals, terminal_coefficients
from .exceptions import CsvParseError, LarInferError, RejectionBudgetExceeded
from .inference import build_inference_report, full_column_basis
from .io import InferredPathReport
from .path import lar_path, standardize
from .simulate import ScenarioSpec, run_coverage, tie_demo

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4


def _out_stream(path: str | None):
    if path is None or path == "-":
        return nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


def _load_standardized(args):
    names, table = reports.read_csv(args.csv)
    feature_names, X, y = reports.split_response(names, table, args.response)
    data = standardize(X, y, center=not args.no_center)
    return feature_names, data


def cmd_fit(args) -> int:
    names, data = _load_standardized(args)
    path = lar_path(data, data.y, zero_tol=args.zero_tol, kind="sample")
    doc = reports.path_report_dict(path, data, names, args.response)
    with _out_stream(args.out) as out:
        if args.format == "json":
            reports.write_json(doc, out)
        else:
            reports.write_fit_csv(doc, out)
    return EXIT_OK


def cmd_infer(args) -> int:
    names, data = _load_standardized(args)
    path = lar_path(data, data.y, zero_tol=args.zero_tol, kind="sample")
    basis = full_column_basis(data)
    inference = build_inference_report(data, path, basis=basis)
    cfg = BootstrapConfig(
        draws=args.draws, alpha=args.alpha, seed=args.seed,
        parallel=args.threads != 1, threads=args.threads,
    )
    intervals = bootstrap_intervals(data, path, inference.m_bar, cfg, basis=basis)
    terminal = terminal_coefficients(data, path, inference.m_bar)
    report = InferredPathReport(
        names, args.response, data, path, inference, intervals, terminal, cfg
    )
    doc = report.to_dict()
    with _out_stream(args.out) as out:
        if args.format == "json":
            reports.write_json(doc, out)
        else:
            reports.write_infer_csv(doc, out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    with open(args.scenario, encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.threads is not None:
        raw["threads"] = args.threads
    spec = ScenarioSpec(**raw)

    def progress(done: int, total: int) -> None:
        batch = max(1, total // 10)
        if done % batch == 0 or done == total:
            print(f"replication {done}/{total}", file=sys.stderr)

    result = run_coverage(spec, progress=progress)
    out_path = Path(args.out)
    write_header = not out_path.exists() or out_path.stat().st_size == 0
    with open(out_path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if write_header:
            writer.writerow(
                ["n", "p", "m", "delta0", "reps", "boot_draws", "seed",
                 "corr_coverage", "coef_coverage", "m_correct",
                 "terminal_coverage", "zero_step_coverage", "reps_evaluated"]
            )
        writer.writerow(
            [spec.n, spec.p, spec.m, repr(spec.delta0), spec.reps,
             spec.boot_draws, spec.seed, repr(result.corr_coverage),
             repr(result.coef_coverage), repr(result.m_correct),
             repr(result.terminal_coverage), repr(result.zero_step_coverage),
             result.reps_evaluated]
        )
    return EXIT_OK


def cmd_tie_demo(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    result = tie_demo(args.n, args.reps, rng)
    with _out_stream(args.out) as out:
        writer = csv.writer(out)
        writer.writerow(["draw", "C1", "C2", "C3", "C4", "second_entrant"])
        for i in range(args.reps):
            writer.writerow(
                [i] + [repr(float(v)) for v in result.correlations[i]]
                + [f"x{result.second_entrants[i] + 1}"]
            )
    tallies = {
        f"x{j + 1}": int(np.sum(result.second_entrants == j)) for j in range(4)
    }
    print(
        f"population tie steps: {result.population_path.tie_steps}; "
        f"step-2 entrant tallies: {tallies}",
        file=sys.stderr,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="larinfer",
        description="Least-angle regression paths with bootstrap inference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("csv", help="input CSV with a header row")
        p.add_argument("--response", required=True, help="response column name or index")
        p.add_argument("--no-center", action="store_true",
                       help="skip centering of columns and response")
        p.add_argument("--zero-tol", type=float, default=0.0,
                       help="relative zero threshold for stopping (default 0)")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    fit = sub.add_parser("fit", help="compute the sample path")
    add_common(fit)
    fit.set_defaults(func=cmd_fit)

    infer = sub.add_parser("infer", help="full inference report")
    add_common(infer)
    infer.add_argument("--alpha", type=float, default=0.05)
    infer.add_argument("--draws", type=int, default=500)
    infer.add_argument("--seed", type=int, default=0)
    infer.add_argument("--threads", type=int, default=1,
                       help="bootstrap worker threads (0 = all cores)")
    infer.set_defaults(func=cmd_infer)

    sim = sub.add_parser("simulate", help="run a coverage study")
    sim.add_argument("scenario", help="scenario JSON file")
    sim.add_argument("--out", required=True, help="results CSV (appended)")
    sim.add_argument("--threads", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    tie = sub.add_parser("tie-demo", help="mid-path tie demonstration")
    tie.add_argument("--n", type=int, default=500)
    tie.add_argument("--reps", type=int, default=2000)
    tie.add_argument("--seed", type=int, default=0)
    tie.add_argument("--out", default=None, help="samples CSV (default stdout)")
    tie.set_defaults(func=cmd_tie_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CsvParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RejectionBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except LarInferError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
