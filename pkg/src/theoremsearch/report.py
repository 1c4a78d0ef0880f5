"""Benchmark report rendering.

One output directory receives a delimited metrics table, a per-query table,
a plain-text summary, and bar-chart figures. Per-category rows average over
however many queries the benchmark file provides, so with small fixtures
they are indicative rather than comparable across runs of different size;
the summary labels the counts for that reason.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .benchmark import MetricsReport, QueryCategory


def _metric_columns(report: MetricsReport) -> list[tuple[str, str]]:
    ks = report.ks
    return [
        ("ndcg", f"ndcg@{ks['ndcg']}"),
        ("precision", f"precision@{ks['precision']}"),
        ("recall", f"recall@{ks['recall']}"),
    ]


def _scope_rows(report: MetricsReport) -> list[tuple[str, int, dict[str, float]]]:
    rows = [("overall", len(report.per_query), report.overall)]
    for category in QueryCategory:
        if category in report.per_category:
            rows.append(
                (category.value, report.category_counts[category], report.per_category[category])
            )
    return rows


def write_report(report: MetricsReport, out_dir: str) -> dict[str, object]:
    """Render every report artifact into out_dir; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    columns = _metric_columns(report)
    rows = _scope_rows(report)

    table_path = os.path.join(out_dir, "report.csv")
    with open(table_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scope", "n_queries"] + [header for _, header in columns])
        for scope, n, values in rows:
            writer.writerow([scope, n] + [f"{values[name]:.6f}" for name, _ in columns])

    queries_path = os.path.join(out_dir, "queries.csv")
    with open(queries_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["query_id", "group_id", "category"] + [header for _, header in columns] + ["text"]
        )
        for q in report.per_query:
            metrics = q.values()
            writer.writerow(
                [q.query_id, q.group_id, q.category.value]
                + [f"{metrics[name]:.6f}" for name, _ in columns]
                + [q.text]
            )

    summary_path = os.path.join(out_dir, "summary.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(_render_summary(report, rows, columns))

    figures = [
        _category_figure(report, rows, columns, os.path.join(out_dir, "metrics_by_category.png")),
        _query_figure(report, os.path.join(out_dir, "ndcg_per_query.png")),
    ]
    return {
        "table": table_path,
        "queries": queries_path,
        "summary": summary_path,
        "figures": figures,
    }


def _render_summary(report, rows, columns) -> str:
    groups = {q.group_id for q in report.per_query}
    lines = [
        f"Retrieval benchmark summary (idcg_mode={report.idcg_mode})",
        f"{len(report.per_query)} queries across {len(groups)} groups",
        "",
    ]
    scope_width = max(len("scope"), max(len(scope) for scope, _, _ in rows))
    header = f"{'scope':<{scope_width}}  {'n':>4}"
    for _, col_header in columns:
        header += f"  {col_header:>14}"
    lines.append(header)
    lines.append("-" * len(header))
    for scope, n, values in rows:
        line = f"{scope:<{scope_width}}  {n:>4}"
        for name, _ in columns:
            line += f"  {values[name]:>14.4f}"
        lines.append(line)
    lines.append("")
    lines.append(
        "Per-category rows average over that category's query count shown in n; "
        "small n means indicative, not population-level, figures."
    )
    lines.append("")
    return "\n".join(lines)


def _category_figure(report, rows, columns, path: str) -> str:
    labels = []
    for scope, n, _ in rows:
        try:
            labels.append(f"{QueryCategory(scope).abbreviation} (n={n})")
        except ValueError:
            labels.append(f"{scope} (n={n})")
    positions = range(len(rows))
    width = 0.8 / len(columns)
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(rows)), 4))
    for i, (name, col_header) in enumerate(columns):
        offsets = [p + (i - (len(columns) - 1) / 2) * width for p in positions]
        ax.bar(offsets, [values[name] for _, _, values in rows], width=width, label=col_header)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("metric value")
    ax.set_title("Retrieval metrics by query category")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _query_figure(report, path: str) -> str:
    queries = report.per_query
    fig_height = max(2.5, 0.28 * len(queries) + 1.2)
    fig, ax = plt.subplots(figsize=(8, min(fig_height, 30)))
    positions = range(len(queries))
    ax.barh(list(positions), [q.ndcg for q in queries])
    ax.set_yticks(list(positions))
    ax.set_yticklabels([q.query_id for q in queries], fontsize=7)
    ax.invert_yaxis()
    ax.set_xlim(0, 1.05)
    ax.set_xlabel(f"ndcg@{report.ks['ndcg']}")
    ax.set_title("Per-query ranking quality")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
