"""Figure rendering for the report path (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reports import DiagnosticsReport


def render_timeseries(report: DiagnosticsReport, outdir: Path) -> Path | None:
    series = report.series
    if not series or "t" not in series:
        return None
    t = np.asarray(series["t"], dtype=float)
    names = [k for k in series if k != "t"]
    fig, axes = plt.subplots(len(names), 1, sharex=True,
                             figsize=(7.0, 1.8 * len(names)), squeeze=False)
    for ax, name in zip(axes[:, 0], names):
        ax.plot(t, np.asarray(series[name], dtype=float), lw=1.2)
        ax.set_ylabel(name, fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel("t")
    fig.suptitle(f"{report.scenario}: time series")
    fig.tight_layout()
    path = Path(outdir) / "timeseries.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_trace_profile(report: DiagnosticsReport, outdir: Path) -> Path | None:
    prof = report.trace_profile
    if not prof or "d" not in prof:
        return None
    d = np.asarray(prof["d"], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, col in prof.items():
        if name in ("r", "d"):
            continue
        vals = np.asarray(col, dtype=float)
        mask = vals > 0
        ax.loglog(d[mask], vals[mask], "o-", ms=3, lw=1.0, label=name)
    ax.set_xlabel("boundary distance d")
    ax.set_ylabel("circle trace norm")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.suptitle(f"{report.scenario}: boundary trace profile")
    fig.tight_layout()
    path = Path(outdir) / "trace_profile.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_all(report: DiagnosticsReport, outdir: Path) -> list[Path]:
    out = []
    for renderer in (render_timeseries, render_trace_profile):
        path = renderer(report, outdir)
        if path is not None:
            out.append(path)
    return out
