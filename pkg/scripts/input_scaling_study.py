#!/usr/bin/env python3
"""Input-size transfer study: fit at one size, predict at others.

Ground truth here makes cycles grow linearly with input bytes on top of
the quadratic (mappers, reducers) surface.  The study fits the surface at
the reference size only, fits the size line from per-size mean cycles,
then transfers reference-size predictions to each held-out size.  One row
per target size:

    gib  transfer_mape  pred25

A small transfer_mape at 2x and 4x the reference size is the point of the
multiplicative size model.

Example:
    python3 scripts/input_scaling_study.py --noise 0.02 --seed 3
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from cyclecast.core import JobConfig, JobRun, aggregate_repetitions
from cyclecast.metrics import mape, pred25
from cyclecast.regression import (
    ModelCoefficients,
    build_design_matrix,
    fit_least_squares,
    predict,
)
from cyclecast.scaling import fit_scaling, scale_prediction
from cyclecast.synth import DEFAULT_GRID

GIB = 2**30

SURFACE = ModelCoefficients(
    a=(1.0e12, 2.0e10, 3.0e8, 4.0e10, 5.0e8),
    condition_estimate=1.0,
    training_residual=0.0,
    app="study",
    ref_input_bytes=12 * GIB,
)

# True size behavior: cycles(M, R, bytes) = surface(M, R) * line(bytes)/line(ref).
LINE_SLOPE = 60.0  # cycles per byte, before the surface factor
LINE_INTERCEPT = 2.0e11


def true_cycles(config: JobConfig, ref_bytes: int) -> float:
    line = LINE_SLOPE * config.input_bytes + LINE_INTERCEPT
    line_ref = LINE_SLOPE * ref_bytes + LINE_INTERCEPT
    return predict(SURFACE, config) * line / line_ref


def simulate_runs(sizes_gib, reps, noise, seed, ref_bytes) -> list[JobRun]:
    runs = []
    for gib in sizes_gib:
        for mappers in DEFAULT_GRID:
            for reducers in DEFAULT_GRID:
                config = JobConfig(mappers, reducers, gib * GIB)
                truth = true_cycles(config, ref_bytes)
                for rep in range(reps):
                    rng = np.random.default_rng(
                        np.random.SeedSequence([seed, gib, mappers, reducers, rep])
                    )
                    eps = rng.normal(0.0, noise)
                    runs.append(
                        JobRun(
                            app="study",
                            run_id=f"study-g{gib:02d}-m{mappers:03d}-r{reducers:03d}-x{rep:02d}",
                            config=config,
                            total_cycles=truth * max(0.0, 1.0 + eps),
                        )
                    )
    return runs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ref-gib", type=int, default=12)
    parser.add_argument(
        "--train-gib", type=int, nargs="+", default=[6, 12, 18],
        help="sizes the size line is fitted from",
    )
    parser.add_argument(
        "--target-gib", type=int, nargs="+", default=[24, 48],
        help="held-out sizes the transfer is scored at",
    )
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument("--noise", type=float, default=0.02)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    ref_bytes = args.ref_gib * GIB
    if args.ref_gib not in args.train_gib:
        parser.error("--ref-gib must be one of --train-gib")

    train_runs = simulate_runs(args.train_gib, args.reps, args.noise, args.seed, ref_bytes)
    profiles = aggregate_repetitions(train_runs)

    ref_profiles = [p for p in profiles if p.config.input_bytes == ref_bytes]
    matrix, targets = build_design_matrix(ref_profiles)
    surface_model = fit_least_squares(matrix, targets)

    by_size: dict[int, list[float]] = {}
    for profile in profiles:
        by_size.setdefault(profile.config.input_bytes, []).append(profile.mean_cycles)
    points = [(size, float(np.mean(v))) for size, v in sorted(by_size.items())]
    size_line = fit_scaling(points, ref_bytes=ref_bytes)
    print(
        f"# surface condition {surface_model.condition_estimate:.2e}, "
        f"size line slope {size_line.slope:.4e} cycles/byte "
        f"intercept {size_line.intercept:.4e}",
        file=sys.stderr,
    )

    print(f"{'gib':>4} {'transfer_mape':>14} {'pred25':>7}")
    for gib in args.target_gib:
        target_bytes = gib * GIB
        actual, predicted = [], []
        for mappers in DEFAULT_GRID:
            for reducers in DEFAULT_GRID:
                config = JobConfig(mappers, reducers, target_bytes)
                actual.append(true_cycles(config, ref_bytes))
                base = predict(surface_model, JobConfig(mappers, reducers, ref_bytes))
                predicted.append(scale_prediction(base, size_line, target_bytes))
        print(
            f"{gib:>4d} {mape(actual, predicted):>14.4%} "
            f"{pred25(actual, predicted):>7.2f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
