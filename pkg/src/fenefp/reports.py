"""Diagnostic report records and deterministic CSV/JSON serialization."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_SERIES_ROWS = 2000
FLOAT_FMT = "{:.17g}"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT.format(float(x))


def thin_indices(n: int, max_rows: int = MAX_SERIES_ROWS) -> np.ndarray:
    if n <= max_rows:
        return np.arange(n)
    step = int(np.ceil(n / max_rows))
    idx = np.arange(0, n, step)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class DiagnosticsReport:
    """Everything a scenario run reports, ready to serialize."""

    scenario: str
    config: dict
    series: dict = field(default_factory=dict)        # name -> 1-D array (incl. "t")
    trace_profile: dict = field(default_factory=dict)  # {"r": ..., "d": ..., columns...}
    scalars: dict = field(default_factory=dict)        # garding, residuals, fits, ...
    tables: dict = field(default_factory=dict)         # e.g. sweep rows

    def metadata(self) -> dict:
        return {
            "config_hash": config_hash(self.config),
            "numpy": np.__version__,
            "python": platform.python_version(),
        }

    def validate_finite(self) -> None:
        for name, col in self.series.items():
            if not np.all(np.isfinite(np.asarray(col, dtype=float))):
                raise ValueError(f"non-finite values in series '{name}'")

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: conv(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            return v

        return {
            "scenario": self.scenario,
            "config": conv(self.config),
            "metadata": self.metadata(),
            "scalars": conv(self.scalars),
            "trace_profile": conv(self.trace_profile),
            "tables": conv(self.tables),
        }

    def write(self, outdir: Path) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        self.validate_finite()

        if self.series:
            names = list(self.series.keys())
            cols = [np.asarray(self.series[n], dtype=float) for n in names]
            idx = thin_indices(len(cols[0]))
            path = outdir / "timeseries.csv"
            write_csv(path, names, [c[idx] for c in cols])
            written.append(path)

        if self.trace_profile:
            names = list(self.trace_profile.keys())
            cols = [np.asarray(self.trace_profile[n], dtype=float) for n in names]
            path = outdir / "trace_profile.csv"
            write_csv(path, names, cols)
            written.append(path)

        if self.tables:
            for name, rows in self.tables.items():
                path = outdir / f"{name}.csv"
                keys = []
                for row in rows:
                    for k in row:
                        if k not in keys:
                            keys.append(k)
                with open(path, "w", newline="\n") as fh:
                    fh.write(",".join(keys) + "\n")
                    for row in rows:
                        cells = []
                        for k in keys:
                            v = row.get(k, "")
                            cells.append(_fmt(v) if isinstance(
                                v, (int, float, np.floating)) else str(v))
                        fh.write(",".join(cells) + "\n")
                written.append(path)

        path = outdir / "report.json"
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
        return written
