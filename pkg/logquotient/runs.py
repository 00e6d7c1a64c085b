"""Run bundles: CSV series, summary and manifest files, and re-validation.

Every CLI run writes its tables as CSV (shortest round-trip float text),
a ``summary.json`` with the headline numbers and a ``manifest.json``
describing the run. ``--validate`` recomputes a run and compares the new
summary against the stored one.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple, Optional

import numpy as np
import psutil

from . import __version__
from .dynamics import Trajectory
from .errors import ConfigError

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
MANIFEST_FILE = "manifest.json"

# Recomputed summaries must match stored ones this closely.
VALIDATE_RTOL = 1e-9
VALIDATE_ATOL = 1e-12


class Series(NamedTuple):
    """A table destined for one CSV file."""

    columns: list[str]
    data: np.ndarray  # (rows, len(columns))


class Mismatch(NamedTuple):
    path: str
    expected: Any
    actual: Any


@dataclass
class RunManifest:
    """What a run did and where its files went."""

    command: str
    config: dict = field(default_factory=dict)
    out_dir: str = ""
    files: list[str] = field(default_factory=list)
    arguments: list[str] = field(default_factory=list)
    version: str = __version__
    timestamp: str = ""
    duration_s: float = 0.0
    memory_mb: float = 0.0  # process RSS, max of start and end

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RunManifest:
        return cls(**d)


class RunTimer:
    """Wall clock and memory bookkeeping for a manifest."""

    def __init__(self) -> None:
        self.timestamp = datetime.now().isoformat(timespec="seconds")
        self._start = time.perf_counter()
        self._mem_start = process_memory_mb()

    def finish(self, manifest: RunManifest) -> RunManifest:
        manifest.timestamp = self.timestamp
        manifest.duration_s = round(time.perf_counter() - self._start, 4)
        manifest.memory_mb = round(max(self._mem_start, process_memory_mb()), 1)
        return manifest


def process_memory_mb() -> float:
    """RSS of this process in MB."""
    try:
        return psutil.Process().memory_info().rss / (1024 * 1024)
    except (psutil.NoSuchProcess, psutil.AccessDenied):
        return 0.0


# ─── CSV ─────────────────────────────────────────────────────

def format_value(value: Any) -> str:
    """Shortest round-trip text for floats; other cells as ``str``."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path: Path, columns: list[str], rows: Iterable[Iterable[Any]]) -> int:
    """Write a header plus rows; returns the number of data rows."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info("wrote %s (%d rows)", path, count)
    return count


def read_csv(path: Path) -> Series:
    """Read back a numeric CSV written by ``write_csv``."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        columns = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return Series(columns, data.reshape(-1, len(columns)))


def trajectory_series(trajectory: Trajectory) -> Series:
    """Columns ``t, x_1..x_r, Q_1..Q_r``."""
    r = trajectory.r
    columns = ["t"] + [f"x_{i + 1}" for i in range(r)] + [f"Q_{i + 1}" for i in range(r)]
    return Series(columns, np.column_stack([trajectory.times, trajectory.x, trajectory.Q]))


def write_series(out_dir: Path, tables: Mapping[str, Series]) -> list[Path]:
    paths = []
    for name, table in tables.items():
        path = out_dir / f"{name}.csv"
        write_csv(path, table.columns, table.data)
        paths.append(path)
    return paths


# ─── Summary and manifest ────────────────────────────────────

def jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays (complex included) into JSON-ready values."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(value.real), "imag": float(value.imag)}
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def save_summary(out_dir: Path, summary: Mapping[str, Any]) -> Path:
    path = out_dir / SUMMARY_FILE
    path.write_text(json.dumps(jsonable(summary), indent=2, ensure_ascii=False), encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def load_summary(out_dir: Path) -> dict:
    path = Path(out_dir) / SUMMARY_FILE
    if not path.exists():
        raise ConfigError(f"nothing to validate: {path} does not exist")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e


def save_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    path = out_dir / MANIFEST_FILE
    path.write_text(
        json.dumps(jsonable(manifest.to_dict()), indent=2, ensure_ascii=False),
        encoding="utf-8",
    )
    return path


def load_manifest(out_dir: Path) -> RunManifest:
    data = json.loads((Path(out_dir) / MANIFEST_FILE).read_text(encoding="utf-8"))
    return RunManifest.from_dict(data)


def compare_summaries(
    expected: Any,
    actual: Any,
    *,
    rtol: float = VALIDATE_RTOL,
    atol: float = VALIDATE_ATOL,
    path: str = "",
) -> list[Mismatch]:
    """Walk two summaries and list every value that differs beyond tolerance."""
    where = path or "<root>"
    if isinstance(expected, Mapping) and isinstance(actual, Mapping):
        mismatches = []
        for key in sorted(set(expected) | set(actual)):
            sub = f"{path}.{key}" if path else str(key)
            if key not in expected or key not in actual:
                mismatches.append(Mismatch(sub, expected.get(key), actual.get(key)))
            else:
                mismatches += compare_summaries(expected[key], actual[key], rtol=rtol, atol=atol, path=sub)
        return mismatches
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return [Mismatch(f"{where} (length)", len(expected), len(actual))]
        mismatches = []
        for i, (e, a) in enumerate(zip(expected, actual)):
            mismatches += compare_summaries(e, a, rtol=rtol, atol=atol, path=f"{path}[{i}]")
        return mismatches
    if _is_number(expected) and _is_number(actual):
        e, a = float(expected), float(actual)
        if math.isnan(e) and math.isnan(a):
            return []
        if e == a or abs(e - a) <= atol + rtol * abs(e):
            return []
        return [Mismatch(where, expected, actual)]
    if expected != actual:
        return [Mismatch(where, expected, actual)]
    return []


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


# ─── Terminal helpers ────────────────────────────────────────

def make_sparkline(values, width: Optional[int] = 60) -> str:
    """Create a sparkline string from values, resampled to at most ``width`` glyphs."""
    values = [float(v) for v in np.asarray(values, dtype=float).ravel() if math.isfinite(v)]
    if not values:
        return ""
    if width and len(values) > width:
        idx = np.linspace(0, len(values) - 1, width).round().astype(int)
        values = [values[i] for i in idx]
    blocks = " ▁▂▃▄▅▆▇█"
    mn, mx = min(values), max(values)
    rng = mx - mn if mx != mn else 1
    return "".join(
        blocks[min(len(blocks) - 1, int((v - mn) / rng * (len(blocks) - 1)))]
        for v in values
    )
