"""Cycle-count job profiles and quadratic cost-surface prediction.

The pipeline: per-machine CPU-second traces are accounted into total
clock cycles (core, ingest), repeated runs are averaged and fitted with a
quadratic surface over (mappers, reducers) (regression), predictions are
optionally carried across input sizes (scaling) and scored (metrics).
synth generates seeded synthetic workloads for validation, store persists
runs and models, cli ties it together.
"""

from .core import (
    ClusterSpec,
    CpuSample,
    CyclecastError,
    EmptyInputError,
    JobConfig,
    JobProfile,
    JobRun,
    Machine,
    MachineTrace,
    NegativePredictionWarning,
    SampleExceedsCoresError,
    ShapeMismatchError,
    UnknownMachineError,
    aggregate_repetitions,
    total_cpu_cycles,
)
from .ingest import (
    IngestWarning,
    WarningKind,
    parse_cluster_spec,
    parse_trace_csv,
    write_trace_csv,
)
from .metrics import (
    EvaluationReport,
    ZeroActualError,
    evaluate,
    mape,
    pred25,
    r2_paper,
    r2_standard,
    rmse,
)
from .regression import (
    DesignMatrix,
    IllConditionedError,
    MixedApplicationsError,
    ModelCoefficients,
    RankDeficientError,
    SingularNormalMatrixError,
    TargetVector,
    build_design_matrix,
    design_row,
    fit_least_squares,
    predict,
    residual_norm,
    solve_normal_equations,
)
from .scaling import (
    DegenerateInputError,
    NonPositiveReferenceError,
    ScalingModel,
    fit_scaling,
    scale_prediction,
)
from .store import (
    CorruptRecordError,
    IoFailureError,
    UnsupportedSchemaError,
    append_runs,
    load_model,
    load_runs,
    save_model,
)
from .synth import SynthSpec, generate_profiles, generate_trace

__version__ = "0.1.0"

__all__ = [
    "ClusterSpec",
    "CorruptRecordError",
    "CpuSample",
    "CyclecastError",
    "DegenerateInputError",
    "DesignMatrix",
    "EmptyInputError",
    "EvaluationReport",
    "IllConditionedError",
    "IngestWarning",
    "IoFailureError",
    "JobConfig",
    "JobProfile",
    "JobRun",
    "Machine",
    "MachineTrace",
    "MixedApplicationsError",
    "ModelCoefficients",
    "NegativePredictionWarning",
    "NonPositiveReferenceError",
    "RankDeficientError",
    "SampleExceedsCoresError",
    "ScalingModel",
    "ShapeMismatchError",
    "SingularNormalMatrixError",
    "SynthSpec",
    "TargetVector",
    "UnknownMachineError",
    "UnsupportedSchemaError",
    "WarningKind",
    "ZeroActualError",
    "aggregate_repetitions",
    "append_runs",
    "build_design_matrix",
    "design_row",
    "evaluate",
    "fit_least_squares",
    "fit_scaling",
    "generate_profiles",
    "generate_trace",
    "load_model",
    "load_runs",
    "mape",
    "parse_cluster_spec",
    "parse_trace_csv",
    "pred25",
    "predict",
    "r2_paper",
    "r2_standard",
    "residual_norm",
    "rmse",
    "save_model",
    "scale_prediction",
    "solve_normal_equations",
    "total_cpu_cycles",
    "write_trace_csv",
]
