"""Set metrics, the POP baseline and k-sweep reports."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .data import Dataset
from .pipeline import PredictionRecord


@dataclass(frozen=True)
class SetScores:
    recall: float
    precision: float
    f1: float
    accuracy: float


def score_sets(predicted, truth, universe: int) -> SetScores:
    """Recall, precision, F1 and accuracy of a predicted user set.

    Accuracy counts agreement over all ``universe`` users. Precision of an
    empty prediction and F1 with P + R = 0 are both 0.
    """
    predicted, truth = set(predicted), set(truth)
    if not truth:
        raise ValueError("empty ground truth")
    hit = len(predicted & truth)
    recall = hit / len(truth)
    precision = hit / len(predicted) if predicted else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = 1.0 - len(predicted ^ truth) / universe
    return SetScores(recall, precision, f1, accuracy)


def pop_baseline(ds: Dataset, train_ids, k: int) -> list[str]:
    """The ``k`` users with the most training interactions, ties by user index."""
    counts = Counter()
    for pid in train_ids:
        counts.update(ds.cascades[pid].user_ids())
    order = {u: i for i, u in enumerate(ds.user_ids())}
    ranked = sorted(ds.user_ids(), key=lambda u: (-counts.get(u, 0), order[u]))
    return ranked[:k]


@dataclass
class KRow:
    k: int
    recall: float
    precision: float
    f1: float
    accuracy: float
    n_posts: int
    n_skipped: int
    micro_recall: float
    micro_precision: float
    micro_f1: float


@dataclass
class MetricsReport:
    rows: list[KRow]
    per_post: dict[int, dict[str, SetScores]] = field(default_factory=dict)
    excluded: list[str] = field(default_factory=list)

    def row(self, k: int) -> KRow:
        return next(r for r in self.rows if r.k == k)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "R", "P", "F1", "Acc", "n_posts", "n_skipped", "micro_R", "micro_P", "micro_F1"])
        for r in self.rows:
            w.writerow([r.k, *(f"{v:.6f}" for v in (r.recall, r.precision, r.f1, r.accuracy)),
                        r.n_posts, r.n_skipped,
                        *(f"{v:.6f}" for v in (r.micro_recall, r.micro_precision, r.micro_f1))])
        return buf.getvalue()

    def to_markdown(self, title: str = "Ours") -> str:
        lines = ["| Model | R | P | F1 | Acc | posts |", "|---|---|---|---|---|---|"]
        for r in self.rows:
            lines.append(f"| {title}@{r.k} | {r.recall:.4f} | {r.precision:.4f} | {r.f1:.4f} | "
                         f"{r.accuracy:.4f} | {r.n_posts} |")
        return "\n".join(lines) + "\n"


def _aggregate(k: int, pairs: list[tuple[str, list[str], list[str]]], universe: int,
               n_skipped: int) -> tuple[KRow, dict[str, SetScores]]:
    per_post = {}
    hit = n_pred = n_true = 0
    for pid, predicted, truth in pairs:
        per_post[pid] = score_sets(predicted, truth, universe)
        hit += len(set(predicted) & set(truth))
        n_pred += len(set(predicted))
        n_true += len(set(truth))
    n = len(per_post)

    def avg(attr):
        return sum(getattr(s, attr) for s in per_post.values()) / n if n else 0.0

    mr = hit / n_true if n_true else 0.0
    mp = hit / n_pred if n_pred else 0.0
    mf = 2 * mp * mr / (mp + mr) if mp + mr > 0 else 0.0
    row = KRow(k, avg("recall"), avg("precision"), avg("f1"), avg("accuracy"), n, n_skipped, mr, mp, mf)
    return row, per_post


def evaluate(
    records: list[PredictionRecord],
    ds: Dataset,
    ks: list[int],
    n_skipped: int = 0,
) -> MetricsReport:
    """Macro-averaged metrics for each k, truncating every record's tail to k."""
    for rec in records:
        if rec.post_id not in ds.cascades:
            raise ValueError(f"prediction for unknown post {rec.post_id}")
    report = MetricsReport([])
    universe = len(ds.users)
    for k in ks:
        pairs = []
        excluded = []
        for rec in records:
            if k > rec.k:
                raise ValueError(f"record {rec.post_id} holds a tail of {rec.k}, cannot score k={k}")
            truth = ds.responders(rec.post_id)
            if not truth:
                excluded.append(rec.post_id)
                continue
            publisher = ds.posts[rec.post_id].publisher_id
            seeded = [u for u in rec.seed_users if u != publisher]
            predicted = seeded + [u for u, _ in rec.tail[:k]]
            pairs.append((rec.post_id, predicted, truth))
        row, per_post = _aggregate(k, pairs, universe, n_skipped)
        report.rows.append(row)
        report.per_post[k] = per_post
        report.excluded = excluded
    return report


def evaluate_pop(ds: Dataset, train_ids, test_ids, ks: list[int]) -> MetricsReport:
    report = MetricsReport([])
    universe = len(ds.users)
    for k in ks:
        fixed = pop_baseline(ds, train_ids, k)
        pairs = [(pid, fixed, ds.responders(pid)) for pid in sorted(test_ids) if ds.responders(pid)]
        row, per_post = _aggregate(k, pairs, universe, 0)
        report.rows.append(row)
        report.per_post[k] = per_post
    return report


def write_report(report: MetricsReport, directory: str | Path, stem: str = "report", title: str = "Ours") -> None:
    directory = Path(directory)
    (directory / f"{stem}.csv").write_text(report.to_csv(), encoding="utf-8")
    (directory / f"{stem}.md").write_text(report.to_markdown(title), encoding="utf-8")
