"""Render sweep CSVs into the standard panel layouts.

Two figures: metrics against the accumulator width (one curve per threshold)
and against the threshold (one curve per width). Each figure has three
panels: mean KL divergence (log scale), flip rate (log scale), and
recomputation rate (linear).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REQUIRED_COLUMNS = (
    "model_id", "dataset_id", "mu", "tau", "mode", "mean_kl", "flip_rate",
    "recomputation_rate", "effective_mantissa_bits", "positions",
    "wall_time_seconds",
)

_PANELS = (
    ("mean_kl", "mean KL divergence", "log"),
    ("flip_rate", "flip rate", "log"),
    ("recomputation_rate", "recomputation rate", "linear"),
)


def load_rows(csv_paths) -> list[dict]:
    rows: list[dict] = []
    for path in csv_paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise ValueError(f"{path}: missing columns {missing}")
            for raw in reader:
                rows.append({
                    **raw,
                    "mu": int(raw["mu"]),
                    "tau": float(raw["tau"]),
                    "mean_kl": float(raw["mean_kl"]),
                    "flip_rate": float(raw["flip_rate"]),
                    "recomputation_rate": float(raw["recomputation_rate"]),
                })
    if not rows:
        raise ValueError("no data rows in the given CSVs")
    return rows


def _panel_figure(rows, x_field, curve_field, curve_label):
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    curve_values = sorted({r[curve_field] for r in rows}, reverse=True)
    for ax, (field, label, scale) in zip(axes, _PANELS):
        for cv in curve_values:
            pts = sorted(
                ((r[x_field], r[field]) for r in rows if r[curve_field] == cv),
            )
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            ax.plot(xs, ys, marker="o", label=f"{curve_label} = {cv:g}")
        ax.set_xlabel(x_field)
        ax.set_ylabel(label)
        ax.set_yscale(scale)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def plot_results(csv_paths, out_dir, image_format: str = "png") -> list[Path]:
    """Write metrics_vs_mu and metrics_vs_tau figures; returns the paths."""
    if image_format not in ("png", "svg"):
        raise ValueError(f"image_format must be png or svg, got {image_format!r}")
    rows = load_rows(csv_paths)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for x_field, curve_field, curve_label, stem in (
        ("mu", "tau", "tau", "metrics_vs_mu"),
        ("tau", "mu", "mu", "metrics_vs_tau"),
    ):
        fig = _panel_figure(rows, x_field, curve_field, curve_label)
        path = out_dir / f"{stem}.{image_format}"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
