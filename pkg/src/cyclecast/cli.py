"""Command-line pipeline over the library: ingest traces, fit and apply
cost surfaces, evaluate them, and generate synthetic workloads.

Conventions
-----------
* exit 0: success.  exit 1: usage error (bad flags, malformed flag
  values).  exit 2: data or validation error (malformed files, rank
  deficiency, unknown machines, ...).
* Diagnostics and progress go to stderr.  Data goes to stdout or to files
  named by flags; no subcommand touches a file its flags do not name.
* simulate's --seed falls back to the CYCLECAST_SEED environment
  variable, then to 0, so batch jobs can pin determinism externally.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from .core import CyclecastError, JobConfig, JobRun, aggregate_repetitions, total_cpu_cycles
from .ingest import parse_cluster_spec, parse_trace_csv, write_trace_csv
from .metrics import evaluate
from .regression import (
    RankDeficientError,
    build_design_matrix,
    fit_least_squares,
    predict,
)
from .scaling import DegenerateInputError, fit_scaling, scale_prediction
from .store import append_runs, load_model, load_runs, save_model
from .synth import DEFAULT_INPUT_BYTES, SynthSpec, generate_profiles, generate_trace

SEED_ENV_VAR = "CYCLECAST_SEED"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message: str):
        raise _UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonnegative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a value >= 0, got {text}")
    return value


def _uint64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in a uint64, got {value}")
    return value


def _grid(text: str) -> tuple[int, ...]:
    """Parse 'lo:hi:step' into the inclusive range (lo, lo+step, ..., <=hi)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in lo:hi:step, got {text!r}") from None
    if lo < 1 or step < 1 or hi < lo:
        raise argparse.ArgumentTypeError(
            f"need 1 <= lo <= hi and step >= 1, got {text!r}"
        )
    return tuple(range(lo, hi + 1, step))


def _read_holdout_list(path: str) -> set[tuple[int, int]]:
    """Parse lines of 'mappers reducers' (whitespace or comma separated)."""
    pairs: set[tuple[int, int]] = set()
    text = Path(path).read_text(encoding="utf-8")
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise CyclecastError(
                f"{path}:{line_no}: expected 'mappers reducers', got {raw!r}"
            )
        try:
            mappers, reducers = int(parts[0]), int(parts[1])
        except ValueError:
            raise CyclecastError(
                f"{path}:{line_no}: expected integers, got {raw!r}"
            ) from None
        if mappers < 1 or reducers < 1:
            raise CyclecastError(f"{path}:{line_no}: values must be >= 1")
        pairs.add((mappers, reducers))
    return pairs


def _fmt_opt(value: float | None, spec: str) -> str:
    return "n/a" if value is None else format(value, spec)


def _predict_at(model, scaling, mappers: int, reducers: int, input_bytes: int | None) -> float:
    """Surface prediction, size-scaled when a target size and a line exist."""
    base_bytes = model.ref_input_bytes
    config_bytes = input_bytes if input_bytes is not None else (base_bytes or 1)
    value = predict(model, JobConfig(mappers=mappers, reducers=reducers, input_bytes=config_bytes))
    if input_bytes is None:
        return value
    if scaling is not None and input_bytes != scaling.ref_bytes:
        return scale_prediction(value, scaling, input_bytes)
    if scaling is None and base_bytes is not None and input_bytes != base_bytes:
        print(
            f"warning: model has no scaling section; predicting as if at the "
            f"reference size {base_bytes} bytes",
            file=sys.stderr,
        )
    return value


def _cmd_ingest(args: argparse.Namespace) -> int:
    with open(args.traces, "r", encoding="utf-8", newline="") as handle:
        traces, warnings_found = parse_trace_csv(handle, gap_threshold=args.gap_threshold)
    for warning in warnings_found:
        scope = f" machine={warning.machine_id}" if warning.machine_id else ""
        print(f"warning: {warning.kind.value}{scope}: {warning.detail}", file=sys.stderr)
    with open(args.cluster, "r", encoding="utf-8") as handle:
        cluster = parse_cluster_spec(handle)
    cycles = total_cpu_cycles(traces, cluster)
    run_id = args.run_id
    if run_id is None:
        digest = hashlib.sha256(Path(args.traces).read_bytes()).hexdigest()
        run_id = digest[:12]
    run = JobRun(
        app=args.app,
        run_id=run_id,
        config=JobConfig(
            mappers=args.mappers, reducers=args.reducers, input_bytes=args.input_bytes
        ),
        total_cycles=cycles,
    )
    append_runs(args.out, [run])
    print(
        f"ingested {len(traces)} machine trace(s) -> {cycles!r} cycles "
        f"as run {run_id!r} in {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    runs = load_runs(args.runs, app=args.app)
    profiles = aggregate_repetitions(runs)
    distinct = {(p.config.mappers, p.config.reducers) for p in profiles}
    if len(distinct) < args.min_k:
        raise RankDeficientError(
            f"only {len(distinct)} distinct (mappers, reducers) configurations "
            f"for app {args.app!r}, need >= {args.min_k}"
        )
    matrix, targets = build_design_matrix(profiles)
    model = fit_least_squares(matrix, targets)
    save_model(args.out, model)
    print(
        f"fitted {args.app!r} over {len(profiles)} profiles "
        f"({sum(p.repetitions for p in profiles)} runs): "
        f"condition={model.condition_estimate:.3e} "
        f"residual={model.training_residual:.6e} -> {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    model, scaling = load_model(args.model)
    value = _predict_at(model, scaling, args.mappers, args.reducers, args.input_bytes)
    print(repr(value))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    model, scaling = load_model(args.model)
    runs = load_runs(args.runs, app=args.app)
    if args.holdout_list is not None:
        keep = _read_holdout_list(args.holdout_list)
        runs = [r for r in runs if (r.config.mappers, r.config.reducers) in keep]
    if len(runs) < 2:
        raise DegenerateInputError(
            f"need >= 2 runs to evaluate, got {len(runs)} after filtering"
        )
    actual = [r.total_cycles for r in runs]
    predicted = [
        _predict_at(model, scaling, r.config.mappers, r.config.reducers,
                    r.config.input_bytes if model.ref_input_bytes != r.config.input_bytes else None)
        for r in runs
    ]
    report = evaluate(actual, predicted)
    print(json.dumps(report.to_json_dict()))
    print(
        f"n={report.n} MAPE={report.mape:.2%} PRED(25)={report.pred25:.2%} "
        f"RMSE={report.rmse:.6e} RMSE/mean={_fmt_opt(report.rmse_norm, '.2%')} "
        f"r2_paper={_fmt_opt(report.r2_paper, '.4f')} "
        f"r2_standard={_fmt_opt(report.r2_standard, '.4f')}",
        file=sys.stderr,
    )
    return 0


def _cmd_scale_fit(args: argparse.Namespace) -> int:
    model, _ = load_model(args.model)
    if model.ref_input_bytes is None:
        raise DegenerateInputError(
            "model has no reference input size; refit it from runs that share one"
        )
    runs = load_runs(args.runs, app=args.app)
    profiles = aggregate_repetitions(runs)
    by_size: dict[int, list[float]] = {}
    for profile in profiles:
        by_size.setdefault(profile.config.input_bytes, []).append(profile.mean_cycles)
    points = [
        (size, sum(values) / len(values)) for size, values in sorted(by_size.items())
    ]
    scaling = fit_scaling(points, ref_bytes=model.ref_input_bytes)
    save_model(args.model, model, scaling)
    print(
        f"fitted size line over {len(points)} sizes: "
        f"slope={scaling.slope!r} cycles/byte intercept={scaling.intercept!r} "
        f"ref_bytes={scaling.ref_bytes} -> {args.model}",
        file=sys.stderr,
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    truth, _ = load_model(args.truth)
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    spec = SynthSpec(
        truth=truth,
        grid_mappers=args.grid,
        grid_reducers=args.grid,
        repetitions=args.reps,
        noise_rel_sigma=args.noise,
        seed=seed,
        app=args.app,
        input_bytes=args.input_bytes,
    )
    runs = generate_profiles(spec)
    append_runs(args.out, runs)
    if args.emit_traces is not None:
        with open(args.cluster, "r", encoding="utf-8") as handle:
            cluster = parse_cluster_spec(handle)
        out_dir = Path(args.emit_traces)
        out_dir.mkdir(parents=True, exist_ok=True)
        for run in runs:
            traces = generate_trace(run, cluster, seed)
            with open(out_dir / f"{run.run_id}.csv", "w", encoding="utf-8", newline="") as handle:
                write_trace_csv(traces, handle)
        print(f"emitted {len(runs)} trace file(s) to {out_dir}", file=sys.stderr)
    print(
        f"simulated {len(runs)} runs of {spec.app!r} "
        f"(grid {len(spec.grid_mappers)}x{len(spec.grid_reducers)}, "
        f"{spec.repetitions} rep(s), sigma={spec.noise_rel_sigma}, seed={seed}) "
        f"-> {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    model, _ = load_model(args.model)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    surface_path = out_dir / "surface.tsv"
    input_bytes = model.ref_input_bytes or 1
    with open(surface_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("mappers\treducers\tpredicted_cycles\n")
        for mappers in args.grid:
            for reducers in args.grid:
                value = predict(
                    model,
                    JobConfig(mappers=mappers, reducers=reducers, input_bytes=input_bytes),
                )
                handle.write(f"{mappers}\t{reducers}\t{value!r}\n")
    print(
        f"wrote {len(args.grid) * len(args.grid)} predictions to {surface_path}",
        file=sys.stderr,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cyclecast",
        description="Cycle-count profiles and quadratic cost-surface prediction.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("ingest", help="account a trace CSV into the run store")
    p.add_argument("--traces", required=True, help="trace CSV file")
    p.add_argument("--cluster", required=True, help="cluster spec file")
    p.add_argument("--app", required=True, help="application name")
    p.add_argument("--mappers", required=True, type=_positive_int)
    p.add_argument("--reducers", required=True, type=_positive_int)
    p.add_argument("--input-bytes", required=True, type=_positive_int)
    p.add_argument("--out", required=True, help="run store to append to")
    p.add_argument("--run-id", default=None, help="default: digest of the trace file")
    p.add_argument(
        "--gap-threshold",
        type=_nonnegative_float,
        default=0.05,
        help="tolerated missing fraction of a trace span before warning (default 0.05)",
    )
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("fit", help="fit the quadratic surface for one app")
    p.add_argument("--runs", required=True, help="run store to read")
    p.add_argument("--app", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument(
        "--min-k",
        type=_positive_int,
        default=5,
        help="minimum distinct (mappers, reducers) configurations (default 5)",
    )
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict cycles at one configuration")
    p.add_argument("--model", required=True)
    p.add_argument("--mappers", required=True, type=_positive_int)
    p.add_argument("--reducers", required=True, type=_positive_int)
    p.add_argument(
        "--input-bytes",
        type=_positive_int,
        default=None,
        help="target size; scales via the model's size line when present",
    )
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score a model against stored runs")
    p.add_argument("--model", required=True)
    p.add_argument("--runs", required=True)
    p.add_argument("--app", required=True)
    p.add_argument(
        "--holdout-list",
        default=None,
        help="file of 'mappers reducers' lines; evaluate only those configs",
    )
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("scale-fit", help="fit the input-size line into a model file")
    p.add_argument("--runs", required=True)
    p.add_argument("--app", required=True)
    p.add_argument("--model", required=True, help="model file to update in place")
    p.set_defaults(func=_cmd_scale_fit)

    p = sub.add_parser("simulate", help="generate synthetic runs from a truth model")
    p.add_argument("--truth", required=True, help="model file used as ground truth")
    p.add_argument("--grid", required=True, type=_grid, help="lo:hi:step, e.g. 4:32:4")
    p.add_argument("--reps", type=_positive_int, default=10)
    p.add_argument("--noise", type=_nonnegative_float, default=0.02,
                   help="relative noise sigma (default 0.02)")
    p.add_argument("--seed", type=_uint64, default=None,
                   help=f"default: ${SEED_ENV_VAR}, then 0")
    p.add_argument("--out", required=True, help="run store to append to")
    p.add_argument("--app", default="synthetic")
    p.add_argument("--input-bytes", type=_positive_int, default=DEFAULT_INPUT_BYTES)
    p.add_argument("--emit-traces", default=None, metavar="DIR",
                   help="also fabricate one trace CSV per run into DIR")
    p.add_argument("--cluster", default=None,
                   help="cluster spec for --emit-traces")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="tabulate a model's surface over a grid")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True, type=_grid, help="lo:hi:step")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.error("a subcommand is required")
        if args.command == "simulate" and args.emit_traces is not None and args.cluster is None:
            parser.error("--emit-traces requires --cluster")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except CyclecastError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
