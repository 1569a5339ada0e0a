"""Figure assembly for result tables.

Each selected label becomes one plotted group in a shared color. Closed-form
variants draw as lines, `analytic` and `exact` solid and `approx` dashed,
while `mc` draws as hollow markers. A `ci` column shades a band of one
half-width around its `mc` series. Colors follow header order and all style
constants are pinned, so rendering the same table twice produces the same
image byte for byte.

Axis labels and scales can be left unset; they are then inferred from the
table metadata and the data itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fnmatch import fnmatch
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .tables import Table, read_table, split_name

__all__ = ["FigureSpec", "render", "render_auto"]

# matplotlib's default cycle, pinned so output does not drift across versions
_PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)

_PROBABILITY_QUANTITIES = {
    "p_detect",
    "p_detect_deg",
    "p_single",
    "p_sense_within",
    "p_sense_at",
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure: a source table, a series selection, and axis styling.

    `series` holds shell-style patterns matched against full column names,
    so `"*"` takes every series, `"p_deg_*"` takes a family, and
    `"*.analytic"` takes one variant across all labels. Scale flags set to
    None defer to the data: an axis goes logarithmic when its values are
    positive and spread over a wide range.
    """

    csv_path: str | Path
    out_path: str | Path
    series: tuple[str, ...] = ("*",)
    x_label: str | None = None
    y_label: str | None = None
    log_x: bool | None = None
    log_y: bool | None = None
    title: str | None = None

    def __post_init__(self) -> None:
        if not self.series:
            raise ValueError("series must hold at least one selector pattern")


def _select(table: Table, patterns: tuple[str, ...]) -> list[str]:
    names = table.series_names()
    chosen: set[str] = set()
    for pattern in patterns:
        matched = [name for name in names if fnmatch(name, pattern)]
        if not matched:
            raise ValueError(
                f"no column matches selector {pattern!r}; "
                f"available: {', '.join(names)}"
            )
        chosen.update(matched)
    return [name for name in names if name in chosen]


def _grouped(table: Table, selected: list[str]) -> dict[str, dict[str, np.ndarray]]:
    out: dict[str, dict[str, np.ndarray]] = {}
    for name in selected:
        label, variant = split_name(name)
        out.setdefault(label, {})[variant] = table.column(name)
    return out


def _quantities(table: Table) -> set[str]:
    # the writing tool echoes its experiment as JSON metadata; treat it as
    # an optional hint, never a requirement
    try:
        blob = json.loads(table.metadata_dict().get("experiment", ""))
        return {str(curve["quantity"]) for curve in blob["curves"]}
    except (ValueError, TypeError, KeyError):
        return set()


def _wide_positive_spread(values: np.ndarray) -> bool:
    finite = values[np.isfinite(values)]
    if finite.size < 4 or np.any(finite <= 0.0):
        return False
    return float(finite.max()) / float(finite.min()) >= 50.0


def _auto_y(table: Table, groups: dict[str, dict[str, np.ndarray]]) -> tuple[str, bool]:
    quantities = _quantities(table)
    if quantities and quantities <= _PROBABILITY_QUANTITIES:
        return "probability", False
    parts = [
        v for variants in groups.values() for k, v in variants.items() if k != "ci"
    ]
    stacked = np.concatenate(parts) if parts else np.zeros(0)
    wide = _wide_positive_spread(stacked)
    if quantities == {"mean_detectors"}:
        return "expected detectors", wide
    if quantities == {"mean_detection_time"}:
        return "mean detection time (s)", wide
    return "value", wide


def _auto_x(table: Table) -> tuple[str, bool]:
    if table.axis == "t":
        return "time (s)", _wide_positive_spread(table.x)
    return table.axis.replace("_", " "), False


def render(spec: FigureSpec) -> Path:
    """Render one figure from `spec` and return the written image path."""
    table = read_table(spec.csv_path)
    groups = _grouped(table, _select(table, spec.series))
    x = table.x

    fig = Figure(figsize=(6.4, 4.4), dpi=150)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()

    for index, (label, variants) in enumerate(groups.items()):
        color = _PALETTE[index % len(_PALETTE)]
        if "mc" in variants and "ci" in variants:
            ax.fill_between(
                x,
                variants["mc"] - variants["ci"],
                variants["mc"] + variants["ci"],
                color=color,
                alpha=0.22,
                linewidth=0.0,
            )
        if "analytic" in variants:
            ax.plot(x, variants["analytic"], "-", color=color, linewidth=1.6, label=label)
        if "exact" in variants:
            ax.plot(
                x, variants["exact"], "-", color=color, linewidth=1.6,
                label=f"{label} (exact)",
            )
        if "approx" in variants:
            ax.plot(
                x, variants["approx"], "--", color=color, linewidth=1.4,
                label=f"{label} (approx)",
            )
        if "mc" in variants:
            ax.plot(
                x,
                variants["mc"],
                linestyle="none",
                marker="o",
                markersize=3.4,
                markerfacecolor="none",
                markeredgecolor=color,
                markeredgewidth=1.0,
                # thin the markers on dense grids so they stay readable
                markevery=max(1, len(x) // 40),
                label=f"{label} (mc)",
            )

    x_label, x_log = _auto_x(table)
    y_label, y_log = _auto_y(table, groups)
    if spec.log_x if spec.log_x is not None else x_log:
        ax.set_xscale("log")
    if spec.log_y if spec.log_y is not None else y_log:
        ax.set_yscale("log")
    ax.set_xlabel(spec.x_label if spec.x_label is not None else x_label)
    ax.set_ylabel(spec.y_label if spec.y_label is not None else y_label)
    if spec.title is not None:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.25, linewidth=0.5)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False, fontsize=8)

    out = Path(spec.out_path)
    fig.tight_layout()
    fig.savefig(out)
    return out


def render_auto(csv_path, out_dir) -> Path:
    """Render a table with inferred styling, named after its metadata id."""
    table = read_table(csv_path)
    name = table.metadata_dict().get("id") or Path(csv_path).stem
    out = Path(out_dir) / f"{name}.png"
    return render(FigureSpec(csv_path=csv_path, out_path=out))
