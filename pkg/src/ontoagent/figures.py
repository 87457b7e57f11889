"""Report figures: per-scenario metric bars, aspect coverage, hit progressions.

Rendered to files next to the JSON report and the delimited metrics table by
the evaluate path. Uses the Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _metric_rows(report: dict[str, Any]) -> list[dict[str, Any]]:
    return [row for row in report.get("per_scenario", []) if "error" not in row]


def render_report_figures(report: dict[str, Any], out_dir: str | Path) -> list[Path]:
    """Write the figure set for one benchmark report; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = _metric_rows(report)
    written: list[Path] = []
    if not rows:
        return written

    written.append(_scenario_bars(rows, out / "metrics_by_scenario.png"))
    aspect_means = report.get("aggregate", {}).get("ire_by_aspect", {})
    if aspect_means:
        written.append(_aspect_bars(aspect_means, out / "aspect_ire.png"))
    if any(row.get("hits") for row in rows):
        written.append(_hit_curves(rows, out / "cumulative_hits.png"))
    return written


def _scenario_bars(rows: list[dict[str, Any]], path: Path) -> Path:
    labels = [row["scenario_id"] for row in rows]
    ire = [row["ire"] for row in rows]
    tkqr = [row["tkqr"] for row in rows]
    x = range(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(labels)), 4))
    ax.bar([i - width / 2 for i in x], ire, width, label="IRE", color="#3b6ea5")
    ax.bar([i + width / 2 for i in x], tkqr, width, label="TKQR", color="#b2603a")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Elicitation coverage and questioning efficiency per scenario")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _aspect_bars(aspect_means: dict[str, float], path: Path) -> Path:
    aspects = sorted(aspect_means)
    values = [aspect_means[a] for a in aspects]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(aspects, values, color="#4a7d4a")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mean IRE")
    ax.set_title("Aspect-level elicitation coverage")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _hit_curves(rows: list[dict[str, Any]], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for row in rows:
        hits = row.get("hits") or []
        cumulative = []
        total = 0
        for h in hits:
            total += h
            cumulative.append(total / row["k"])
        ax.step(range(1, len(hits) + 1), cumulative, where="post", label=row["scenario_id"])
    ax.set_xlabel("question")
    ax.set_ylabel("cumulative IRE")
    ax.set_ylim(0, 1.05)
    ax.set_title("Requirement discovery over the interview")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_metrics_csv(report: dict[str, Any], path: str | Path) -> Path:
    """Delimited per-scenario metrics table next to the JSON report."""
    import csv

    path = Path(path)
    columns = [
        "scenario_id", "interviewer", "n", "k", "ire",
        "ire_interaction", "ire_content", "ire_style",
        "tkqr", "dcg", "idcg", "finish_reason", "error",
    ]
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for row in report.get("per_scenario", []):
            aspects = row.get("ire_by_aspect", {})
            writer.writerow(
                {
                    "scenario_id": row.get("scenario_id", ""),
                    "interviewer": row.get("interviewer", ""),
                    "n": row.get("n", ""),
                    "k": row.get("k", ""),
                    "ire": row.get("ire", ""),
                    "ire_interaction": aspects.get("interaction", ""),
                    "ire_content": aspects.get("content", ""),
                    "ire_style": aspects.get("style", ""),
                    "tkqr": row.get("tkqr", ""),
                    "dcg": row.get("dcg", ""),
                    "idcg": row.get("idcg", ""),
                    "finish_reason": row.get("finish_reason", ""),
                    "error": row.get("error", ""),
                }
            )
    return path
