"""Command-line entry point: ``ncqsim {run,bound,sweep,minimal-p,verify}``.

Exit status is 0 on success, 1 when a check or budget search fails, and 2
for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .adversary import BoundReport, build_relation, compute_bounds
from .algorithms import Model
from .bench import (
    SUITES,
    ExperimentResult,
    ExperimentSpec,
    default_Q,
    estimate_success,
    minimal_budget,
    scaling_experiment,
    verify_all,
)
from .errors import BudgetCapReached, SimulationError
from .problems import ProblemKind

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

PROBLEMS = [k.value for k in ProblemKind]
MODELS = [m.value for m in Model]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=PROBLEMS + ["element_distinctness"])
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--n", type=int, nargs="+", dest="N", help="input size(s)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", choices=["csv", "json"])
    p.add_argument("--output", help="write to this file instead of stdout")
    p.add_argument("--config", help="JSON file with experiment settings; flags override it")


def _experiment(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int, dest="Q")
    p.add_argument("--p", type=int, dest="P")
    p.add_argument("--c", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--target", type=float)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncqsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="estimate success probability")
    _common(run)
    _experiment(run)

    bound = sub.add_parser("bound", help="adversary lower bounds")
    _common(bound)
    bound.add_argument("--mode", choices=["auto", "exhaustive", "sampled"], default="auto")
    bound.add_argument("--samples", type=int, default=200)

    sweep = sub.add_parser("sweep", help="minimal budgets over N and the fitted exponent")
    _common(sweep)
    _experiment(sweep)

    mp = sub.add_parser("minimal-p", help="smallest sample budget reaching the target")
    _common(mp)
    _experiment(mp)
    mp.add_argument("--p-cap", type=int, default=4096)

    verify = sub.add_parser("verify", help="run property suites")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--suite", action="append", choices=SUITES, dest="suites",
                        help="suite to run (repeatable); all when omitted")
    verify.add_argument("--none", action="store_true", help="select no suites")
    verify.add_argument("--mutate", action="store_true", help="disable purified reweighting")
    verify.add_argument("--shots", type=int, default=100_000)
    verify.add_argument("--circuits", type=int, default=50)
    verify.add_argument("--out", choices=["text", "json"], default="text")
    verify.add_argument("--output")
    return parser


def _spec(args, parser) -> ExperimentSpec:
    conf = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config: {exc}")
    for key in ("problem", "model", "N", "trials", "seed", "target", "out", "Q", "P", "c", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            conf[key] = v
    if "problem" not in conf:
        parser.error("--problem is required (flag or config)")
    conf.setdefault("model", "pdqp")
    conf.setdefault("N", [16])
    if args.command in ("sweep", "minimal-p"):
        conf.setdefault("trials", 300)
    return ExperimentSpec.from_dict(conf)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _bounds(args, spec: ExperimentSpec) -> str:
    rng = np.random.default_rng(spec.seed)
    reports: list[BoundReport] = []
    for N in spec.N:
        relation = build_relation(spec.problem, N, args.mode, args.samples, rng)
        reports.append(compute_bounds(relation, spec.model))
    rows = [r.to_row() for r in reports]
    if spec.out == "json":
        return json.dumps(rows, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    try:
        if args.command == "verify":
            suites = [] if args.none else args.suites
            report = verify_all(args.seed, suites, args.mutate, args.shots, args.circuits)
            _emit(report.to_json() if args.out == "json" else report.to_text(), args.output)
            return EXIT_OK if report.ok else EXIT_VIOLATION

        spec = _spec(args, parser)
        if args.command == "run":
            result = estimate_success(spec)
        elif args.command == "bound":
            _emit(_bounds(args, spec), args.output)
            return EXIT_OK
        elif args.command == "sweep":
            result = scaling_experiment(spec, lambda N: spec.Q or default_Q(spec.problem, spec.model, N))
        else:
            budgets = [
                minimal_budget(spec.problem, spec.model, N, spec.target, spec.seed, spec.trials,
                               spec.Q or default_Q(spec.problem, spec.model, N), spec.c, spec.params,
                               args.p_cap, spec.workers)
                for N in spec.N
            ]
            meta = {"target": spec.target,
                    "budgets": {str(b.N): {"Q": b.Q, "P_star": b.P_star} for b in budgets}}
            result = ExperimentResult([b.row for b in budgets], meta=meta)
        _emit(result.render(spec.out), args.output)
        return EXIT_OK
    except BudgetCapReached as exc:
        print(f"ncqsim: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except (SimulationError, ValueError) as exc:
        print(f"ncqsim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
