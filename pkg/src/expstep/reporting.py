"""CSV, JSON, and figure output for the command line harness.

Floats are written with 17 significant digits so that re-reading a file
reproduces the binary values exactly; wall-clock columns are the only
non-deterministic content.  Figures are rendered next to the delimited
output with the same stem.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

__all__ = [
    "format_float",
    "write_csv",
    "write_summary",
    "summary_path",
    "figure_path",
    "plot_run_trace",
    "plot_scan",
    "plot_work_precision",
    "plot_order_study",
]


def format_float(x) -> str:
    if x is None:
        return "nan"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _format_cell(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, str):
        return x
    return format_float(x)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(row[name]) for name in header) + "\n")


def summary_path(out_path) -> Path:
    return Path(out_path).with_suffix(".json")


def figure_path(out_path) -> Path:
    return Path(out_path).with_suffix(".png")


def write_summary(out_path, payload: dict) -> Path:
    path = summary_path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_run_trace(rows, path, title="") -> None:
    """Stepsize and conservation telemetry of a single run."""
    plt = _pyplot()
    ts = [r["t"] for r in rows]
    fig, axes = plt.subplots(3, 1, figsize=(7.0, 7.5), sharex=True)
    if "laser" in rows[0]:
        axes[0].plot(ts, [r["laser"] for r in rows], lw=1.0, color="tab:orange")
        axes[0].set_ylabel("E(t)")
    else:
        axes[0].plot(ts, [r["energy"] for r in rows], lw=1.0)
        axes[0].set_ylabel("energy")
    axes[1].semilogy(ts[1:], [max(r["h"], 1e-300) for r in rows[1:]], ".", ms=2.5)
    axes[1].set_ylabel("stepsize")
    drift = [max(abs(r["norm_drift"]), 1e-18) for r in rows]
    axes[2].semilogy(ts, drift, lw=1.0, color="tab:green")
    axes[2].set_ylabel("norm drift")
    axes[2].set_xlabel("t")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_scan(rows, path, title="norm conservation") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    methods = sorted({r["method"] for r in rows})
    for m in methods:
        pts = sorted((r["steps"], r["max_norm_drift"]) for r in rows if r["method"] == m)
        ns = [p[0] for p in pts]
        ds = [min(max(p[1], 1e-18), 1e3) for p in pts]
        ax.loglog(ns, ds, "o-", ms=4, label=m)
    ax.set_xlabel("number of steps")
    ax.set_ylabel("max norm drift")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_work_precision(rows, path, title="work precision") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    methods = sorted({r["method"] for r in rows})
    for m in methods:
        pts = sorted((r["b_evals"], r["error"]) for r in rows if r["method"] == m)
        ws = [p[0] for p in pts]
        es = [min(max(p[1], 1e-18), 1e3) for p in pts]
        ax.loglog(ws, es, "o-", ms=4, label=m)
    ax.set_xlabel("B evaluations")
    ax.set_ylabel("error vs reference")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_order_study(rows, fits, path, title="soliton convergence") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    methods = sorted({r["method"] for r in rows})
    for m in methods:
        pts = sorted((r["h"], r["error"]) for r in rows if r["method"] == m)
        hs = [p[0] for p in pts]
        es = [max(p[1], 1e-18) for p in pts]
        label = m
        if m in fits:
            label = f"{m} (slope {fits[m]['slope']:.2f})"
        ax.loglog(hs, es, "o-", ms=4, label=label)
    ax.set_xlabel("stepsize h")
    ax.set_ylabel("error at t_end")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
