"""Figure rendering for plan and benchmark outputs.

Figures are written next to the delimited exports: a top-down density
heatmap with candidate markers for a plan, and success-rate / stable
fraction charts for a benchmark report.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.patches as mpatches
import matplotlib.pyplot as plt
import numpy as np

from .bench import BenchReport
from .density import DensityField
from .scene import Scene, object_aabb


def render_heatmap(
    scene: Scene,
    field: DensityField,
    candidates,
    path: str | Path,
    title: str = "placement density (top-down)",
) -> Path:
    """Top-down heatmap of the evaluation grid with ranked candidate markers."""
    path = Path(path)
    if field.grid_spec is None or field.grid_values is None:
        raise ValueError("density field carries no evaluation grid")
    spec = field.grid_spec
    nx, ny, nz = spec.dims
    values = np.asarray(field.grid_values).reshape(nx, ny, nz)[:, :, 0]

    fig, ax = plt.subplots(figsize=(7, 6))
    extent = (
        spec.origin[0],
        spec.origin[0] + spec.spacing[0] * (nx - 1),
        spec.origin[1],
        spec.origin[1] + spec.spacing[1] * (ny - 1),
    )
    im = ax.imshow(
        values.T, origin="lower", extent=extent, cmap="viridis", aspect="equal"
    )
    fig.colorbar(im, ax=ax, label="density")

    for obj in scene.objects:
        box = object_aabb(obj)
        ax.add_patch(
            mpatches.Rectangle(
                (box.min.x, box.min.y),
                box.max.x - box.min.x,
                box.max.y - box.min.y,
                fill=False,
                edgecolor="white",
                linewidth=0.8,
            )
        )
        ax.annotate(
            obj.label,
            (box.min.x, box.max.y),
            color="white",
            fontsize=7,
            va="bottom",
        )

    for c in candidates:
        ax.plot(c.point[0], c.point[1], "o", color="red", markersize=4)
        ax.annotate(
            str(c.rank),
            (c.point[0], c.point[1]),
            color="red",
            fontsize=8,
            xytext=(3, 3),
            textcoords="offset points",
        )

    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_bench_figures(report: BenchReport, out_dir: str | Path) -> list[Path]:
    """Success-rate and stable-fraction charts alongside the delimited report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = [r.scenario_id for r in report.rows]
    x = np.arange(len(labels))

    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(labels)), 4))
    width = 0.38
    ax.bar(
        x - width / 2,
        [r.stability_success_rate for r in report.rows],
        width,
        label="stability S/R",
    )
    ax.bar(
        x + width / 2,
        [r.reasonableness_success_rate for r in report.rows],
        width,
        label="reasonableness S/R",
    )
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("success rate")
    ax.set_title(f"benchmark success rates ({report.repetitions} repetitions)")
    ax.legend()
    fig.tight_layout()
    rates_path = out_dir / "bench_success_rates.png"
    fig.savefig(rates_path, dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(labels)), 4))
    ax.bar(x, [r.stable_fraction for r in report.rows], color="#2a7fb8")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("|stable points| / |candidates|")
    ax.set_title("stable fraction per scenario")
    fig.tight_layout()
    fraction_path = out_dir / "bench_stable_fraction.png"
    fig.savefig(fraction_path, dpi=150)
    plt.close(fig)

    return [rates_path, fraction_path]
