"""On-disk formats for CPU traces and cluster inventories.

Trace CSV
---------
UTF-8, LF line endings, '.' decimal point.  Header row required, exactly:

    machine_id,offset_s,cpu_seconds

One data row per one-second sample.  machine_id is restricted to
``[A-Za-z0-9_-]+`` so no CSV quoting is ever needed.  offset_s is a
non-negative integer, cpu_seconds a non-negative decimal (scientific
notation accepted).  Rows may arrive in any order and may interleave
machines; parsing groups per machine and sorts by offset.  A repeated
(machine_id, offset_s) pair is an error, not a merge.

Cluster spec
------------
Line oriented, one machine per line:

    machine_id clock_hz cores

Fields are whitespace separated.  '#' starts a comment (whole-line or
trailing), blank lines are ignored.  clock_hz accepts scientific notation.

Warnings
--------
Parsing never invents data: a missing second simply contributes no
CPU-seconds.  Two conditions are reported as warnings rather than errors,
because the remaining rows are still internally consistent:

* TRUNCATED_TAIL: the file's last line has no trailing newline, so the
  final row may have been cut off mid-append.
* GAP_EXCEEDS_THRESHOLD: a machine's sample count covers less than
  (1 - gap_threshold) of its offset span, i.e. more than gap_threshold of
  the trace window is missing.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, TextIO

from .core import ClusterSpec, CpuSample, CyclecastError, Machine, MachineTrace

TRACE_HEADER = "machine_id,offset_s,cpu_seconds"

_MACHINE_ID_RE = re.compile(r"[A-Za-z0-9_-]+\Z")


class MalformedHeaderError(CyclecastError):
    """The trace stream does not start with the exact expected header."""


class MalformedRowError(CyclecastError):
    """A trace data row does not match the format contract."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class NegativeCpuSecondsError(CyclecastError):
    """A trace row carries a negative cpu_seconds value."""

    def __init__(self, line_no: int, value: str):
        super().__init__(f"line {line_no}: cpu_seconds must be >= 0, got {value}")
        self.line_no = line_no


class DuplicateSampleError(CyclecastError):
    """Two rows claim the same (machine_id, offset_s) slot."""

    def __init__(self, line_no: int, machine_id: str, offset_s: int):
        super().__init__(
            f"line {line_no}: duplicate sample for machine {machine_id!r} "
            f"at offset {offset_s}"
        )
        self.line_no = line_no


class MalformedEntryError(CyclecastError):
    """A cluster spec line does not match the format contract."""


class DuplicateMachineIdError(CyclecastError):
    """The cluster spec lists the same machine_id twice."""


class NonPositiveClockError(CyclecastError):
    """A cluster spec entry has clock_hz <= 0."""


class WarningKind(enum.Enum):
    TRUNCATED_TAIL = "truncated_tail"
    GAP_EXCEEDS_THRESHOLD = "gap_exceeds_threshold"


@dataclass(frozen=True)
class IngestWarning:
    """A recoverable anomaly noticed while parsing a trace stream."""

    kind: WarningKind
    machine_id: str
    detail: str


def parse_trace_csv(
    stream: TextIO, gap_threshold: float = 0.05
) -> tuple[list[MachineTrace], list[IngestWarning]]:
    """Parse a trace CSV stream into per-machine traces plus warnings.

    Returns traces sorted by machine_id with samples sorted by offset.
    A header-only stream yields ([], []).  gap_threshold is the tolerated
    missing fraction of each machine's offset span before a
    GAP_EXCEEDS_THRESHOLD warning is attached.
    """
    if not 0 <= gap_threshold <= 1:
        raise ValueError(f"gap_threshold must be in [0, 1], got {gap_threshold}")
    text = stream.read()
    if not text:
        raise MalformedHeaderError(f"empty stream, expected header {TRACE_HEADER!r}")
    terminated = text.endswith("\n")
    lines = text.split("\n")
    if terminated:
        lines.pop()
    if lines[0] != TRACE_HEADER:
        raise MalformedHeaderError(
            f"expected header {TRACE_HEADER!r}, got {lines[0]!r}"
        )

    per_machine: dict[str, dict[int, float]] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise MalformedRowError(line_no, f"expected 3 fields, got {len(parts)}")
        machine_id, offset_text, cpu_text = parts
        if not _MACHINE_ID_RE.fullmatch(machine_id):
            raise MalformedRowError(
                line_no, f"machine_id {machine_id!r} must match [A-Za-z0-9_-]+"
            )
        try:
            offset_s = int(offset_text)
        except ValueError:
            raise MalformedRowError(
                line_no, f"offset_s must be an integer, got {offset_text!r}"
            ) from None
        if offset_s < 0:
            raise MalformedRowError(line_no, f"offset_s must be >= 0, got {offset_s}")
        try:
            cpu_seconds = float(cpu_text)
        except ValueError:
            raise MalformedRowError(
                line_no, f"cpu_seconds must be a number, got {cpu_text!r}"
            ) from None
        if math.isnan(cpu_seconds) or math.isinf(cpu_seconds):
            raise MalformedRowError(
                line_no, f"cpu_seconds must be finite, got {cpu_text!r}"
            )
        if cpu_seconds < 0:
            raise NegativeCpuSecondsError(line_no, cpu_text)
        bucket = per_machine.setdefault(machine_id, {})
        if offset_s in bucket:
            raise DuplicateSampleError(line_no, machine_id, offset_s)
        bucket[offset_s] = cpu_seconds

    warnings: list[IngestWarning] = []
    if len(lines) > 1 and not terminated:
        warnings.append(
            IngestWarning(
                WarningKind.TRUNCATED_TAIL,
                machine_id="",
                detail="last line has no trailing newline; the final row may be truncated",
            )
        )

    traces: list[MachineTrace] = []
    for machine_id in sorted(per_machine):
        offsets = sorted(per_machine[machine_id])
        samples = tuple(
            CpuSample(offset_s=o, cpu_seconds=per_machine[machine_id][o])
            for o in offsets
        )
        span = offsets[-1] - offsets[0] + 1
        missing = span - len(offsets)
        if missing / span > gap_threshold:
            warnings.append(
                IngestWarning(
                    WarningKind.GAP_EXCEEDS_THRESHOLD,
                    machine_id=machine_id,
                    detail=f"{missing} of {span} seconds in span missing",
                )
            )
        traces.append(MachineTrace(machine_id=machine_id, samples=samples))
    return traces, warnings


def write_trace_csv(traces: Iterable[MachineTrace], stream: TextIO) -> None:
    """Write traces in canonical order: machines lexicographic, offsets ascending.

    Floats are written with repr, so a parse round-trip is bit-exact.
    """
    stream.write(TRACE_HEADER + "\n")
    for trace in sorted(traces, key=lambda t: t.machine_id):
        for sample in trace.samples:
            stream.write(
                f"{trace.machine_id},{sample.offset_s},{sample.cpu_seconds!r}\n"
            )


def parse_cluster_spec(stream: TextIO) -> ClusterSpec:
    """Parse a cluster spec stream; entries keep their file order."""
    machines: list[Machine] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(stream.read().split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise MalformedEntryError(
                f"line {line_no}: expected 'machine_id clock_hz cores', got {raw!r}"
            )
        machine_id, clock_text, cores_text = parts
        if not _MACHINE_ID_RE.fullmatch(machine_id):
            raise MalformedEntryError(
                f"line {line_no}: machine_id {machine_id!r} must match [A-Za-z0-9_-]+"
            )
        if machine_id in seen:
            raise DuplicateMachineIdError(
                f"line {line_no}: duplicate machine_id {machine_id!r}"
            )
        try:
            clock_hz = float(clock_text)
        except ValueError:
            raise MalformedEntryError(
                f"line {line_no}: clock_hz must be a number, got {clock_text!r}"
            ) from None
        if not math.isfinite(clock_hz):
            raise MalformedEntryError(f"line {line_no}: clock_hz must be finite")
        if clock_hz <= 0:
            raise NonPositiveClockError(
                f"line {line_no}: clock_hz must be > 0, got {clock_text}"
            )
        try:
            cores = int(cores_text)
        except ValueError:
            raise MalformedEntryError(
                f"line {line_no}: cores must be an integer, got {cores_text!r}"
            ) from None
        if cores < 1:
            raise MalformedEntryError(f"line {line_no}: cores must be >= 1, got {cores}")
        seen.add(machine_id)
        machines.append(Machine(machine_id=machine_id, clock_hz=clock_hz, cores=cores))
    if not machines:
        raise MalformedEntryError("cluster spec has no machine entries")
    return ClusterSpec(machines=tuple(machines))
