"""Figure rendering for evaluation outputs.

Reads the delimited files emitted by the evaluate step and renders PNG
figures next to them: detection accuracy over time, false positive rate
bars, and mitigation directives versus the tau threshold sweep.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def render_accuracy_figure(csv_path, out_path) -> None:
    rows = _read_csv(csv_path)
    windows = [int(r["window"]) for r in rows]
    accuracy = [float(r["accuracy"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(windows, accuracy, marker="o", markersize=3, linewidth=1.2)
    ax.set_xlabel("window index")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("Detection accuracy over time")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_fpr_figure(csv_path, out_path) -> None:
    rows = _read_csv(csv_path)
    methods = [r["method"] for r in rows]
    fpr = [float(r["fpr"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(methods, fpr, width=0.5)
    ax.set_ylabel("false positive rate")
    ax.set_title("False positive rate")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_tau_sweep_figure(csv_path, out_path) -> None:
    rows = _read_csv(csv_path)
    tau = [float(r["tau"]) for r in rows]
    directives = [int(r["directives"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(tau, directives, where="post", linewidth=1.5)
    ax.set_xlabel(r"mitigation threshold $\tau$")
    ax.set_ylabel("directives issued")
    ax.set_title("Mitigation activation vs. threshold")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


_RENDERERS = {
    "accuracy_over_time.csv": ("fig_accuracy_over_time.png", render_accuracy_figure),
    "fpr.csv": ("fig_fpr.png", render_fpr_figure),
    "tau_sweep.csv": ("fig_tau_sweep.png", render_tau_sweep_figure),
}


def render_report(directory) -> list[Path]:
    """Render every known plot CSV found in the directory; returns the
    list of figure paths written."""
    directory = Path(directory)
    written = []
    for csv_name, (png_name, renderer) in _RENDERERS.items():
        csv_path = directory / csv_name
        if csv_path.exists():
            out_path = directory / png_name
            renderer(csv_path, out_path)
            written.append(out_path)
    return written
