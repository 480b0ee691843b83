"""Exact ROC-AUC / accuracy on held-out pairs and all-pairs date ranking.

AUC is the Mann-Whitney statistic (ties count one half) computed from average
ranks in O(n log n). The date ranking scores every ordered pair of dates with
the symmetrized model probability and sorts dates by their mean win fraction,
the soft-Borda statistic behind the pre/post-period bar charts.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import date as Date

import numpy as np

from .ioutil import atomic_write_text
from .pairnet.model import PairNetParams, score_batch

logger = logging.getLogger(__name__)

REPORT_HEADER = ["class", "auc", "accuracy", "n_pairs"]
RANKING_HEADER = ["date", "period_tag", "win_fraction", "n_opponents"]
_CLASS_ORDER = ("large", "medium", "small")


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score of a positive > score of a negative), ties 0.5."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0 or scores.size != labels.size:
        raise ValueError("scores and labels must be non-empty and equal length")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    ranks = _average_ranks(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    """Fraction of pairs where thresholded score equals the label."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0:
        raise ValueError("empty score list")
    predicted = (scores > threshold).astype(labels.dtype)
    return float((predicted == labels).mean())


@dataclass(frozen=True)
class ClassMetrics:
    auc: float
    accuracy: float
    n_pairs: int


@dataclass
class EvalReport:
    per_class: dict[str, ClassMetrics] = field(default_factory=dict)
    overall: ClassMetrics | None = None


def evaluate_split(params: PairNetParams, pairs_by_class: dict, tensor_lookup) -> EvalReport:
    """Per-size-class AUC and accuracy on raw pair scores.

    `pairs_by_class` maps class name -> list of LabeledPair; `tensor_lookup`
    maps (lot_id, date) -> prepared input tensor. Classes without pairs are
    omitted with a warning. Rows are ordered large, medium, small.
    """
    report = EvalReport()
    all_scores: list[float] = []
    all_labels: list[int] = []
    for class_name in _CLASS_ORDER:
        pairs = pairs_by_class.get(class_name, [])
        if not pairs:
            logger.warning("no test pairs for class %s; omitted from report", class_name)
            continue
        a = np.stack([tensor_lookup(p.lot_id, p.date_a) for p in pairs])
        b = np.stack([tensor_lookup(p.lot_id, p.date_b) for p in pairs])
        scores = score_batch(params, a, b)
        labels = np.array([p.label for p in pairs])
        report.per_class[class_name] = ClassMetrics(
            auc=auc(scores, labels), accuracy=accuracy(scores, labels), n_pairs=len(pairs)
        )
        all_scores.extend(scores.tolist())
        all_labels.extend(labels.tolist())
    if not report.per_class:
        raise ValueError("no test pairs in any class")
    report.overall = ClassMetrics(
        auc=auc(all_scores, all_labels),
        accuracy=accuracy(all_scores, all_labels),
        n_pairs=len(all_scores),
    )
    return report


@dataclass(frozen=True)
class RankingEntry:
    date: Date
    win_fraction: float
    n_opponents: int
    period_tag: str = ""


def rank_dates(
    params: PairNetParams, tensors_by_date: dict[Date, np.ndarray], period_tags: dict[Date, str] | None = None
) -> list[RankingEntry]:
    """Soft-Borda ranking of one lot's dates by mean symmetrized win probability.

    Scores all ordered pairs of distinct dates; a date's win fraction is the
    mean symmetrized probability against every other date. Sorted descending,
    ties broken by earlier date.
    """
    dates = sorted(tensors_by_date)
    n = len(dates)
    if n < 2:
        raise ValueError("ranking needs at least two dates")
    idx_pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    a = np.stack([tensors_by_date[dates[i]] for i, _ in idx_pairs])
    b = np.stack([tensors_by_date[dates[j]] for _, j in idx_pairs])
    raw = score_batch(params, a, b)
    p = {pair: raw[k] for k, pair in enumerate(idx_pairs)}
    wins = np.zeros(n, dtype=np.float64)
    for i, j in idx_pairs:
        wins[i] += 0.5 * (p[(i, j)] + 1.0 - p[(j, i)])
    entries = [
        RankingEntry(
            date=dates[i],
            win_fraction=float(wins[i] / (n - 1)),
            n_opponents=n - 1,
            period_tag=(period_tags or {}).get(dates[i], ""),
        )
        for i in range(n)
    ]
    entries.sort(key=lambda e: (-e.win_fraction, e.date))
    return entries


def _format_float(x: float) -> str:
    return repr(float(x))


def report_to_csv(report: EvalReport) -> str:
    if not report.per_class:
        raise ValueError("empty report")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    rows = list(report.per_class.items())
    if report.overall is not None:
        rows.append(("overall", report.overall))
    for name, metrics in rows:
        writer.writerow([name, _format_float(metrics.auc), _format_float(metrics.accuracy), metrics.n_pairs])
    return buf.getvalue()


def parse_report_csv(text: str) -> EvalReport:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != REPORT_HEADER:
        raise ValueError(f"bad report header: {rows[:1]}")
    report = EvalReport()
    for name, auc_s, acc_s, n_s in rows[1:]:
        metrics = ClassMetrics(auc=float(auc_s), accuracy=float(acc_s), n_pairs=int(n_s))
        if name == "overall":
            report.overall = metrics
        else:
            report.per_class[name] = metrics
    return report


def ranking_to_csv(ranking: list[RankingEntry]) -> str:
    if not ranking:
        raise ValueError("empty ranking")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RANKING_HEADER)
    for entry in ranking:
        writer.writerow(
            [entry.date.isoformat(), entry.period_tag, _format_float(entry.win_fraction), entry.n_opponents]
        )
    return buf.getvalue()


def parse_ranking_csv(text: str) -> list[RankingEntry]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != RANKING_HEADER:
        raise ValueError(f"bad ranking header: {rows[:1]}")
    return [
        RankingEntry(
            date=Date.fromisoformat(date_s),
            period_tag=tag,
            win_fraction=float(wf_s),
            n_opponents=int(n_s),
        )
        for date_s, tag, wf_s, n_s in rows[1:]
    ]


_SVG_COLORS = ("#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4", "#8c613c")


def ranking_to_svg(ranking: list[RankingEntry]) -> str:
    """Static bar chart of win fractions, one bar per date, colored by period tag."""
    if not ranking:
        raise ValueError("empty ranking")
    bar_w, gap, height, margin, label_h = 34, 10, 220, 30, 58
    width = margin * 2 + len(ranking) * (bar_w + gap)
    tags = []
    for entry in ranking:
        if entry.period_tag not in tags:
            tags.append(entry.period_tag)
    color_of = {tag: _SVG_COLORS[i % len(_SVG_COLORS)] for i, tag in enumerate(tags)}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height + label_h + margin}" font-family="sans-serif" font-size="10">',
        f'<line x1="{margin}" y1="{height + margin}" x2="{width - margin}" '
        f'y2="{height + margin}" stroke="#333"/>',
    ]
    for k, entry in enumerate(ranking):
        x = margin + k * (bar_w + gap)
        bar_h = entry.win_fraction * height
        y = margin + height - bar_h
        parts.append(
            f'<rect x="{x}" y="{y:.2f}" width="{bar_w}" height="{bar_h:.2f}" '
            f'fill="{color_of[entry.period_tag]}"><title>{entry.date.isoformat()} '
            f"{entry.win_fraction:.4f}</title></rect>"
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{margin + height + 12}" text-anchor="middle" '
            f'transform="rotate(45 {x + bar_w / 2:.1f} {margin + height + 12})">'
            f"{entry.date.isoformat()}</text>"
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 3:.2f}" text-anchor="middle">'
            f"{entry.win_fraction:.2f}</text>"
        )
    for i, tag in enumerate(tags):
        if tag:
            x = margin + i * 110
            parts.append(f'<rect x="{x}" y="6" width="10" height="10" fill="{color_of[tag]}"/>')
            parts.append(f'<text x="{x + 14}" y="15">{tag}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def export_report(report: EvalReport, path, fmt: str = "csv") -> None:
    if fmt != "csv":
        raise ValueError(f"reports support csv only, got {fmt}")
    atomic_write_text(path, report_to_csv(report))


def export_ranking(ranking: list[RankingEntry], path, fmt: str = "csv") -> None:
    if fmt == "csv":
        atomic_write_text(path, ranking_to_csv(ranking))
    elif fmt == "svg-bars":
        atomic_write_text(path, ranking_to_svg(ranking))
    else:
        raise ValueError(f"unknown ranking format {fmt}")
