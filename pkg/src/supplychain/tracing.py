"""Run traces and their CSV form.

Row 0 of every trace is the initial iterate; rows 1.. are iterates k produced
by tick k-1, together with the steps, realized ages and message counts of that
tick. Every algorithm emits the same columns.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import TraceSchemaError

METRIC_COLUMNS = (
    "alpha",
    "beta",
    "delay_price",
    "delay_flow",
    "sent",
    "dropped",
    "delivered",
    "objective",
    "gap",
    "ergodic_gap",
    "violation",
)
INTEGER_COLUMNS = {"delay_price", "delay_flow", "sent", "dropped", "delivered"}


@dataclass
class RunTrace:
    algorithm: str
    x_labels: Tuple[str, ...]
    lambda_labels: Tuple[str, ...]
    k: np.ndarray
    x: np.ndarray
    lam: np.ndarray
    columns: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_records(self) -> int:
        """Iterates after the initial one."""
        return max(len(self.k) - 1, 0)

    @property
    def iterations(self) -> int:
        return int(self.k[-1]) if len(self.k) else 0

    @property
    def every_tick(self) -> bool:
        return self.n_records == self.iterations

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise TraceSchemaError(f"Trace has no column '{name}'", {"column": name})

    def row(self, index: int) -> Dict[str, Any]:
        values = {"k": int(self.k[index])}
        for name in METRIC_COLUMNS:
            value = self.columns[name][index]
            values[name] = int(value) if name in INTEGER_COLUMNS else float(value)
        return values

    def final(self) -> Dict[str, Any]:
        return self.row(len(self.k) - 1)

    def message_totals(self) -> Dict[str, int]:
        return {
            name: int(np.sum(self.columns[name]))
            for name in ("sent", "dropped", "delivered")
        }


def _header(trace: RunTrace) -> List[str]:
    return (
        ["k"]
        + list(METRIC_COLUMNS)
        + [f"x[{label}]" for label in trace.x_labels]
        + [f"lambda[{label}]" for label in trace.lambda_labels]
    )


def _format(value, integer: bool) -> str:
    if integer:
        return str(int(value))
    return repr(float(value))


def trace_to_csv(trace: RunTrace) -> str:
    """Render the trace with shortest round-trip float formatting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_header(trace))
    for i in range(len(trace.k)):
        row = [str(int(trace.k[i]))]
        row += [
            _format(trace.columns[name][i], name in INTEGER_COLUMNS)
            for name in METRIC_COLUMNS
        ]
        row += [repr(float(v)) for v in trace.x[i]]
        row += [repr(float(v)) for v in trace.lam[i]]
        writer.writerow(row)
    return buffer.getvalue()


def _labels(header: Sequence[str], prefix: str) -> Tuple[str, ...]:
    start = f"{prefix}["
    return tuple(h[len(start):-1] for h in header if h.startswith(start) and h.endswith("]"))


def trace_from_csv(
    text: str,
    algorithm: str = "",
    metadata: Optional[Dict[str, Any]] = None,
    expected_rows: Optional[int] = None,
) -> RunTrace:
    """Parse a trace file; truncated or malformed files raise TraceSchemaError."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise TraceSchemaError("Trace file is empty")
    header = rows[0]
    missing = [name for name in ("k",) + METRIC_COLUMNS if name not in header]
    if missing:
        raise TraceSchemaError("Trace header is missing columns", {"missing": missing})
    x_labels = _labels(header, "x")
    lambda_labels = _labels(header, "lambda")
    if len(header) != 1 + len(METRIC_COLUMNS) + len(x_labels) + len(lambda_labels):
        raise TraceSchemaError("Trace header has unexpected columns")

    body = rows[1:]
    if not body:
        raise TraceSchemaError("Trace has no rows")
    if expected_rows is not None and len(body) != expected_rows:
        raise TraceSchemaError(
            "Trace is truncated",
            {"expected_rows": expected_rows, "found_rows": len(body)},
        )
    for line, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise TraceSchemaError(
                "Trace row has the wrong number of fields",
                {"line": line, "expected": len(header), "found": len(row)},
            )
    try:
        values = np.array([[float(v) for v in row] for row in body])
    except ValueError as e:
        raise TraceSchemaError(f"Trace has a non-numeric value: {e}")
    if not np.all(np.isfinite(values[:, 0])) or np.any(np.diff(values[:, 0]) <= 0):
        raise TraceSchemaError("Trace iteration column is not strictly increasing")
    if values[0, 0] != 0:
        raise TraceSchemaError("Trace must start with the initial iterate at k=0")

    index = {name: i for i, name in enumerate(header)}
    columns = {}
    for name in METRIC_COLUMNS:
        column = values[:, index[name]]
        columns[name] = column.astype(int) if name in INTEGER_COLUMNS else column
    n_meta = 1 + len(METRIC_COLUMNS)
    x = values[:, n_meta : n_meta + len(x_labels)]
    lam = values[:, n_meta + len(x_labels) :]
    return RunTrace(
        algorithm=algorithm,
        x_labels=x_labels,
        lambda_labels=lambda_labels,
        k=values[:, 0].astype(int),
        x=x,
        lam=lam,
        columns=columns,
        metadata=dict(metadata or {}),
    )


def json_safe(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value
