"""Report rendering: aligned text tables, CSV, and matplotlib figures.

The figure writers import matplotlib lazily with the Agg backend so the
library itself never requires a display.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .core import format_rational
from .strategic import EfficiencyExperiment, ScanReport


def render_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for idx, cell in enumerate(row):
            widths[idx] = max(widths[idx], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def write_csv(path: Path, headers: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(headers)
        writer.writerows(rows)


def experiment_rows(experiment: EfficiencyExperiment) -> tuple[list[str], list[list[str]]]:
    headers = [
        "level",
        "width",
        "a",
        "b",
        "welfare",
        "optimal",
        "ratio",
        "max_delta",
        "dictate",
    ]
    rows = []
    for lvl in experiment.levels:
        rows.append(
            [
                str(lvl.level),
                str(lvl.width),
                format_rational(lvl.first_half_share),
                format_rational(lvl.second_half_share),
                format_rational(lvl.welfare),
                format_rational(lvl.optimal_welfare),
                format_rational(lvl.ratio),
                format_rational(lvl.max_consistent_delta),
                "-" if lvl.dictate_holds is None else ("ok" if lvl.dictate_holds else "VIOLATED"),
            ]
        )
    return headers, rows


def scan_rows(report: ScanReport) -> tuple[list[str], list[list[str]]]:
    if report.notion == "EF1":
        headers = ["instance", "ef1_violating_pairs"]
        rows = [[str(r.index), str(r.ef1_violating_pairs)] for r in report.records]
    else:
        headers = ["instance", "worst_mms_ratio"]
        rows = [
            [str(r.index), "-" if r.worst_mms_ratio is None else format_rational(r.worst_mms_ratio)]
            for r in report.records
        ]
    return headers, rows


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_experiment_figure(experiment: EfficiencyExperiment, path: Path) -> None:
    """Per-level welfare ratio and max consistent delta against the 2t/(1+t) line."""
    plt = _pyplot()
    levels = [lvl.level for lvl in experiment.levels]
    ratios = [float(lvl.ratio) for lvl in experiment.levels]
    deltas = [float(lvl.max_consistent_delta) for lvl in experiment.levels]
    bound = float(2 * experiment.t / (1 + experiment.t))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(levels, ratios, marker="o", label="welfare ratio")
    ax.plot(levels, deltas, marker="s", label="max consistent delta")
    ax.axhline(bound, color="gray", linestyle="--", label="2t/(1+t)")
    ax.set_xlabel("level")
    ax.set_ylabel("ratio")
    ax.set_title("Efficiency decay down the halving family")
    ax.set_xticks(levels)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_scan_figure(report: ScanReport, path: Path) -> None:
    """Per-instance worst metric for a fairness scan."""
    plt = _pyplot()
    xs = [r.index for r in report.records]
    if report.notion == "EF1":
        ys = [r.ef1_violating_pairs or 0 for r in report.records]
        label = "EF1 violating pairs"
    else:
        ys = [float(r.worst_mms_ratio) if r.worst_mms_ratio is not None else 0.0 for r in report.records]
        label = "worst MMS ratio"
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, marker=".", linestyle="none")
    ax.set_xlabel("instance")
    ax.set_ylabel(label)
    ax.set_title(f"{report.notion} scan over {len(xs)} instances")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
