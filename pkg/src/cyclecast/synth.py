"""Seeded synthetic workloads for end-to-end validation.

A ground-truth quadratic surface plays the role of a real application:
each simulated run draws one multiplicative noise factor and reports
cycles = truth(config) * max(0, 1 + eps) with eps ~ Normal(0, sigma).

Randomness contract: every (config, repetition) cell gets its own PCG64
substream keyed by SeedSequence([seed, mappers, reducers, repetition]),
so the order the grid is enumerated in can never change a draw, and any
cell can be regenerated in isolation.  Trace synthesis keys its stream by
[seed, digest(run_id)].

Trace synthesis works backwards from a run's total: the total is split
across machines by random weights, converted to per-machine CPU-seconds
through each clock rate, and spread over enough one-second samples that
no sample exceeds its machine's core count.  Re-accounting the emitted
traces reproduces the run's total to ~1e-12 relative.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ClusterSpec,
    CpuSample,
    EmptyInputError,
    JobConfig,
    JobRun,
    MachineTrace,
)
from .regression import ModelCoefficients, predict

DEFAULT_GRID = tuple(range(4, 33, 4))
DEFAULT_INPUT_BYTES = 12 * 2**30

# Target mean utilization when spreading CPU-seconds over samples; leaves
# headroom so jitter never pushes a sample past the core count.
_TARGET_UTILIZATION = 0.6
_JITTER_SAFETY = 0.9


@dataclass(frozen=True)
class SynthSpec:
    """Everything that determines a synthetic workload, including the seed."""

    truth: ModelCoefficients
    grid_mappers: tuple[int, ...] = DEFAULT_GRID
    grid_reducers: tuple[int, ...] = DEFAULT_GRID
    repetitions: int = 10
    noise_rel_sigma: float = 0.02
    seed: int = 0
    app: str = "synthetic"
    input_bytes: int = DEFAULT_INPUT_BYTES

    def __post_init__(self) -> None:
        for name in ("grid_mappers", "grid_reducers"):
            grid = tuple(getattr(self, name))
            if not grid:
                raise ValueError(f"{name} must be non-empty")
            if any(v < 1 for v in grid):
                raise ValueError(f"{name} values must be >= 1, got {grid}")
            object.__setattr__(self, name, grid)
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if not math.isfinite(self.noise_rel_sigma) or self.noise_rel_sigma < 0:
            raise ValueError(
                f"noise_rel_sigma must be finite and >= 0, got {self.noise_rel_sigma}"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a uint64, got {self.seed}")
        if not self.app:
            raise ValueError("app must be non-empty")
        if self.input_bytes < 1:
            raise ValueError(f"input_bytes must be >= 1, got {self.input_bytes}")


def _cell_rng(seed: int, mappers: int, reducers: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, mappers, reducers, rep]))


def generate_profiles(spec: SynthSpec) -> list[JobRun]:
    """Simulate every grid cell, repetitions times, in deterministic order.

    With noise_rel_sigma == 0 every run's cycles equals the surface
    evaluation at its config exactly.  Runs come out ordered by
    (mappers, reducers, repetition).
    """
    runs: list[JobRun] = []
    for mappers in spec.grid_mappers:
        for reducers in spec.grid_reducers:
            config = JobConfig(
                mappers=mappers, reducers=reducers, input_bytes=spec.input_bytes
            )
            true_cycles = predict(spec.truth, config)
            for rep in range(spec.repetitions):
                rng = _cell_rng(spec.seed, mappers, reducers, rep)
                eps = rng.normal(0.0, spec.noise_rel_sigma)
                cycles = true_cycles * max(0.0, 1.0 + eps)
                runs.append(
                    JobRun(
                        app=spec.app,
                        run_id=f"{spec.app}-m{mappers:03d}-r{reducers:03d}-rep{rep:02d}",
                        config=config,
                        total_cycles=cycles,
                    )
                )
    return runs


def generate_trace(
    run: JobRun, cluster: ClusterSpec, seed: int
) -> list[MachineTrace]:
    """Fabricate per-machine traces that account back to run.total_cycles.

    The split across machines and the per-second jitter are drawn from a
    stream keyed by (seed, run_id), so regenerating any single run's traces
    is deterministic and independent of other runs.  A zero-cycle run
    yields no traces.  Every sample satisfies 0 <= cpu_seconds <= cores.
    """
    if not cluster.machines:
        raise EmptyInputError("cluster has no machines")
    if run.total_cycles == 0:
        return []
    digest = int.from_bytes(
        hashlib.sha256(run.run_id.encode("utf-8")).digest()[:8], "big"
    )
    rng = np.random.default_rng(np.random.SeedSequence([seed, digest]))
    weights = rng.uniform(0.5, 1.5, size=len(cluster.machines))
    weights /= weights.sum()

    traces: list[MachineTrace] = []
    for machine, weight in zip(cluster.machines, weights):
        cpu_seconds = run.total_cycles * weight / machine.clock_hz
        target_rate = _TARGET_UTILIZATION * machine.cores
        n_samples = max(1, math.ceil(cpu_seconds / target_rate))
        base = cpu_seconds / n_samples  # <= target_rate by choice of n_samples
        jitter = rng.uniform(-1.0, 1.0, size=n_samples)
        jitter -= jitter.mean()
        peak = float(np.max(jitter))
        trough = float(-np.min(jitter))
        if n_samples > 1 and peak > 0 and trough > 0:
            # Largest zero-sum wiggle keeping every sample in (0, cores).
            amplitude = _JITTER_SAFETY * min(
                (machine.cores - base) / peak, base / trough
            )
            values = base + amplitude * jitter
        else:
            values = np.full(n_samples, base)
        traces.append(
            MachineTrace(
                machine_id=machine.machine_id,
                samples=tuple(
                    CpuSample(offset_s=i, cpu_seconds=float(v))
                    for i, v in enumerate(values)
                ),
            )
        )
    return traces
