"""Load harness CSV outputs and render the standard figure set.

Rendering is display-only: every plotted number comes straight out of the
CSV files (metrics.csv, samples.csv, ellipses.csv); nothing is recomputed
here. Output is deterministic: fixed figure size, fixed DPI, and a fixed
color cycle keyed by sorted sampler tag, so re-rendering the same CSV bytes
produces identical image files.
"""

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Ellipse, Rectangle

FIGURE_KINDS = ("errorCurve", "scatter", "sinkhornCurve")
ERROR_METRICS = ("mean_sq_error", "scatter_rel_sq_error")

# Fixed palette; series colors are assigned by sorted sampler tag so the
# mapping never depends on CSV row order.
PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
    "#bcbd22",
    "#e377c2",
)

FIGSIZE = (6.0, 4.0)
DPI = 120


class RenderError(RuntimeError):
    """A figure could not be rendered from the given CSV inputs."""


@dataclass
class RunData:
    """Parsed contents of one harness output directory."""

    preset: str
    path: Path
    metrics: list  # (sampler, run, iter, metric, value)
    samples: list = field(default_factory=list)  # (sampler, run, iter, x1, x2)
    ellipses: list = field(default_factory=list)  # (cx, cy, a1, a2, angle)
    meta: dict = field(default_factory=dict)


def _read_metrics(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["preset", "sampler", "run", "iter", "metric", "value"]:
            raise RenderError(f"{path}: unexpected metrics header {header}")
        preset = None
        rows = []
        for rec in reader:
            preset = rec[0]
            rows.append((rec[1], int(rec[2]), int(rec[3]), rec[4], float(rec[5])))
    return preset, rows


def _read_samples(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        return [
            (rec[1], int(rec[2]), int(rec[3]), float(rec[4]), float(rec[5]))
            for rec in reader
        ]


def _read_ellipses(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        return [tuple(float(v) for v in rec[1:6]) for rec in reader]


def discover(csv_dir) -> list:
    """Find harness run directories (holding metrics.csv) under csv_dir."""
    root = Path(csv_dir)
    if not root.is_dir():
        raise RenderError(f"{root} is not a directory")
    metric_files = sorted(root.rglob("metrics.csv"))
    if not metric_files:
        raise RenderError(f"no metrics.csv found under {root}")
    runs = []
    for mpath in metric_files:
        preset, rows = _read_metrics(mpath)
        run = RunData(preset=preset or mpath.parent.name, path=mpath.parent, metrics=rows)
        spath = mpath.parent / "samples.csv"
        if spath.exists():
            run.samples = _read_samples(spath)
        epath = mpath.parent / "ellipses.csv"
        if epath.exists():
            run.ellipses = _read_ellipses(epath)
        jpath = mpath.parent / "meta.json"
        if jpath.exists():
            run.meta = json.loads(jpath.read_text())
        if not run.metrics and not run.samples:
            raise RenderError(f"{mpath.parent}: CSV outputs are empty")
        runs.append(run)
    return runs


def available_kinds(run: RunData) -> list:
    kinds = []
    metrics = {m for _, _, _, m, _ in run.metrics}
    if metrics & set(ERROR_METRICS):
        kinds.append("errorCurve")
    if "sinkhorn_w2" in metrics:
        kinds.append("sinkhornCurve")
    if run.samples:
        kinds.append("scatter")
    return kinds


def _color_map(tags):
    ordered = sorted(set(tags))
    return {tag: PALETTE[i % len(PALETTE)] for i, tag in enumerate(ordered)}


def _mean_series(rows, metric):
    """sampler -> (iters, mean over runs) for one metric."""
    acc = defaultdict(lambda: defaultdict(list))
    for sampler, _, it, m, v in rows:
        if m == metric:
            acc[sampler][it].append(v)
    out = {}
    for sampler, per_iter in acc.items():
        its = np.array(sorted(per_iter))
        means = np.array([np.mean(per_iter[i]) for i in its])
        out[sampler] = (its, means)
    return out


def _new_axes():
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    return fig, ax


def _save(fig, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": "plots"})
    plt.close(fig)
    return path


def render_error_curves(run: RunData, out_dir: Path) -> list:
    written = []
    for metric in ERROR_METRICS:
        series = _mean_series(run.metrics, metric)
        if not series:
            continue
        colors = _color_map(series)
        fig, ax = _new_axes()
        for sampler in sorted(series):
            its, means = series[sampler]
            finite = np.isfinite(means) & (means > 0)
            if not finite.any():
                continue
            ax.semilogy(its[finite], means[finite], label=sampler, color=colors[sampler], lw=1.2)
        ax.set_xlabel("iteration")
        ax.set_ylabel(metric.replace("_", " "))
        ax.set_title(run.preset)
        ax.legend(fontsize=8)
        written.append(_save(fig, out_dir / f"errorCurve-{run.preset}-{metric}.png"))
    if not written:
        raise RenderError(f"{run.preset}: no error-curve metrics in metrics.csv")
    return written


def render_sinkhorn_curve(run: RunData, out_dir: Path) -> list:
    series = _mean_series(run.metrics, "sinkhorn_w2")
    if not series:
        raise RenderError(f"{run.preset}: metric sinkhorn_w2 missing from metrics.csv")
    colors = _color_map(series)
    fig, ax = _new_axes()
    for sampler in sorted(series):
        its, means = series[sampler]
        finite = np.isfinite(means) & (means > 0)
        ax.semilogy(
            its[finite], means[finite], label=sampler, color=colors[sampler], lw=1.2, marker="o", ms=3
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("sinkhorn W2")
    ax.set_title(run.preset)
    ax.legend(fontsize=8)
    return [_save(fig, out_dir / f"sinkhornCurve-{run.preset}.png")]


def render_scatter(run: RunData, out_dir: Path) -> list:
    if not run.samples:
        raise RenderError(f"{run.preset}: samples.csv missing or empty")
    # final iterate per sampler
    final = defaultdict(int)
    for sampler, _, it, _, _ in run.samples:
        final[sampler] = max(final[sampler], it)
    colors = _color_map(final)
    fig, ax = _new_axes()
    for sampler in sorted(final):
        pts = np.array(
            [(x1, x2) for s, _, it, x1, x2 in run.samples if s == sampler and it == final[s]]
        )
        ax.scatter(pts[:, 0], pts[:, 1], s=6, color=colors[sampler], label=sampler, alpha=0.7)
    for cx, cy, a1, a2, angle in run.ellipses:
        ax.add_patch(
            Ellipse(
                (cx, cy),
                2.0 * a1,
                2.0 * a2,
                angle=math.degrees(angle),
                fill=False,
                color="black",
                lw=1.0,
            )
        )
    box = run.meta.get("box_half_widths")
    if box is not None:
        ax.add_patch(
            Rectangle(
                (-box[0], -box[1]), 2.0 * box[0], 2.0 * box[1], fill=False, color="black", lw=1.0
            )
        )
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(run.preset)
    ax.legend(fontsize=8)
    return [_save(fig, out_dir / f"scatter-{run.preset}.png")]


RENDERERS = {
    "errorCurve": render_error_curves,
    "scatter": render_scatter,
    "sinkhornCurve": render_sinkhorn_curve,
}


def render_figures(csv_dir, out_dir, figures="all") -> list:
    """Render requested figure kinds for every run found under csv_dir.

    ``figures`` is "all" or one of FIGURE_KINDS. With "all", each run gets
    every figure its files support; a named kind must be supported by at
    least one run, otherwise the metric is reported missing.
    """
    if figures != "all" and figures not in FIGURE_KINDS:
        raise RenderError(
            f"unknown figure kind {figures!r}; valid: all, " + ", ".join(FIGURE_KINDS)
        )
    runs = discover(csv_dir)
    out = Path(out_dir)
    written = []
    for run in runs:
        kinds = available_kinds(run)
        wanted = kinds if figures == "all" else [k for k in kinds if k == figures]
        for kind in wanted:
            written.extend(RENDERERS[kind](run, out))
    if not written:
        raise RenderError(
            f"no run under {csv_dir} carries the data for figure kind {figures!r}"
        )
    return written
