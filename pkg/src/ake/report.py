"""Evaluation reports: aligned text tables, CSV records, and figures.

Every report lands in one directory: ``records.csv`` holds one row per
(condition, story, metric) plus macro rows, ``table.txt`` the human-readable
summary, and the PNG figures the same numbers drawn with matplotlib.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ConditionResult

MACRO_ROW = "MACRO"


def format_table(results: Sequence[ConditionResult]) -> str:
    width = max(len(r.label) for r in results)
    width = max(width, len("Condition"))
    lines = [
        f"{'Condition':<{width}}  {'nDCG':>8}  {'Precision':>9}",
        "-" * (width + 21),
    ]
    for r in results:
        lines.append(
            f"{r.label:<{width}}  {r.macro_ndcg:>8.4f}  {r.macro_precision:>9.4f}"
        )
    return "\n".join(lines)


def write_records(results: Sequence[ConditionResult], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "story_id", "metric", "value"])
        for r in results:
            for sid in sorted(r.per_story_ndcg):
                writer.writerow([r.label, sid, "ndcg", f"{r.per_story_ndcg[sid]:.6f}"])
                writer.writerow(
                    [r.label, sid, "precision", f"{r.per_story_precision[sid]:.6f}"]
                )
            writer.writerow([r.label, MACRO_ROW, "ndcg", f"{r.macro_ndcg:.6f}"])
            writer.writerow([r.label, MACRO_ROW, "precision", f"{r.macro_precision:.6f}"])
    return path


def render_condition_bars(results: Sequence[ConditionResult], path: str | Path) -> Path:
    """Grouped bars of macro nDCG and precision per condition."""
    labels = [r.label for r in results]
    ndcgs = [r.macro_ndcg for r in results]
    precisions = [r.macro_precision for r in results]
    x = np.arange(len(labels))

    fig, ax = plt.subplots(figsize=(max(6.0, 1.3 * len(labels)), 4.2))
    ax.bar(x - 0.2, ndcgs, width=0.4, label="nDCG", color="#4878cf")
    ax.bar(x + 0.2, precisions, width=0.4, label="precision", color="#ee854a")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.legend(frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_story_scatter(result: ConditionResult, path: str | Path) -> Path:
    """Per-story nDCG vs precision for a single condition."""
    sids = sorted(result.per_story_ndcg)
    ndcgs = [result.per_story_ndcg[s] for s in sids]
    precisions = [result.per_story_precision[s] for s in sids]

    fig, ax = plt.subplots(figsize=(5.0, 4.6))
    ax.scatter(precisions, ndcgs, s=24, alpha=0.7, color="#4878cf")
    ax.axhline(result.macro_ndcg, ls="--", lw=0.8, color="gray")
    ax.axvline(result.macro_precision, ls="--", lw=0.8, color="gray")
    ax.set_xlabel("precision")
    ax.set_ylabel("nDCG")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(result.label or "evaluation", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def write_report(
    results: Sequence[ConditionResult], out_dir: str | Path
) -> dict[str, Path]:
    """Write table.txt, records.csv and figures; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "table": out / "table.txt",
        "records": write_records(results, out / "records.csv"),
        "conditions_png": render_condition_bars(results, out / "conditions.png"),
    }
    paths["table"].write_text(format_table(results) + "\n", encoding="utf-8")
    for r in results:
        safe = r.label.replace("+", "_") or "eval"
        paths[f"stories_{safe}_png"] = render_story_scatter(
            r, out / f"stories_{safe}.png"
        )
    return paths
