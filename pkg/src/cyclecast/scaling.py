"""Linear input-size scaling of cycle predictions.

Total cycles grow close to linearly with input bytes for the workloads
this package targets, so a straight line cycles = slope * bytes + intercept
is fitted across sizes and predictions made at the reference size are
carried to a target size multiplicatively:

    scaled = base * line(target_bytes) / line(ref_bytes)

The ratio form means scaling to the reference size itself is exactly the
identity, and chaining scalings agrees with scaling directly up to
rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CyclecastError, NegativePredictionWarning


class DegenerateInputError(CyclecastError):
    """Fitting a line needs at least two distinct input sizes."""


class NonPositiveReferenceError(CyclecastError):
    """The fitted line is not positive at the reference size."""


@dataclass(frozen=True)
class ScalingModel:
    """A fitted cycles-vs-bytes line anchored at a reference size.

    slope is cycles per byte, intercept cycles.  The line must be positive
    at ref_bytes, otherwise the multiplicative transfer below is undefined.
    """

    slope: float
    intercept: float
    ref_bytes: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.slope) or not math.isfinite(self.intercept):
            raise ValueError("slope and intercept must be finite")
        if self.ref_bytes < 1:
            raise ValueError(f"ref_bytes must be >= 1, got {self.ref_bytes}")
        if self.slope * self.ref_bytes + self.intercept <= 0:
            raise NonPositiveReferenceError(
                f"line evaluates to {self.slope * self.ref_bytes + self.intercept:.6g} "
                f"cycles at ref_bytes={self.ref_bytes}; must be > 0"
            )

    def line(self, input_bytes: int) -> float:
        return self.slope * input_bytes + self.intercept


def fit_scaling(
    points: Sequence[tuple[int, float]], ref_bytes: int
) -> ScalingModel:
    """Fit cycles = slope * bytes + intercept over (input_bytes, cycles) points.

    Solved by least squares on a column-scaled design so byte counts in the
    gigabytes do not wreck conditioning.  Needs at least two distinct sizes.
    """
    if ref_bytes < 1:
        raise ValueError(f"ref_bytes must be >= 1, got {ref_bytes}")
    sizes = np.array([float(b) for b, _ in points])
    cycles = np.array([float(c) for _, c in points])
    if len({b for b, _ in points}) < 2:
        raise DegenerateInputError(
            f"need >= 2 distinct input sizes, got {len(set(b for b, _ in points))}"
        )
    if np.any(sizes < 1):
        raise ValueError("input sizes must be >= 1 byte")
    if not np.all(np.isfinite(cycles)):
        raise ValueError("cycle values must be finite")
    size_scale = float(np.max(sizes))
    design = np.column_stack([sizes / size_scale, np.ones_like(sizes)])
    (scaled_slope, intercept), _, _, _ = np.linalg.lstsq(design, cycles, rcond=None)
    return ScalingModel(
        slope=float(scaled_slope) / size_scale,
        intercept=float(intercept),
        ref_bytes=ref_bytes,
    )


def scale_prediction(
    base_cycles: float, model: ScalingModel, target_bytes: int
) -> float:
    """Carry a reference-size prediction to target_bytes along the fitted line.

    target_bytes == ref_bytes returns base_cycles unchanged, exactly.  A
    negative result (possible when the line crosses zero below the target)
    is clamped to 0.0 with a NegativePredictionWarning.
    """
    if not math.isfinite(base_cycles) or base_cycles < 0:
        raise ValueError(f"base_cycles must be finite and >= 0, got {base_cycles}")
    if target_bytes < 1:
        raise ValueError(f"target_bytes must be >= 1, got {target_bytes}")
    reference = model.line(model.ref_bytes)
    if reference <= 0:
        raise NonPositiveReferenceError(
            f"line evaluates to {reference:.6g} cycles at ref_bytes={model.ref_bytes}"
        )
    if model.intercept == 0.0:
        # Slope cancels from the ratio when the line passes through the
        # origin; folding it out keeps the pure-proportional case exact.
        factor = target_bytes / model.ref_bytes
    else:
        factor = model.line(target_bytes) / reference
    scaled = base_cycles * factor
    if scaled < 0:
        warnings.warn(
            f"scaling to {target_bytes} bytes gives {scaled:.6g} cycles; clamping to 0",
            NegativePredictionWarning,
            stacklevel=2,
        )
        return 0.0
    return scaled
