"""Binary-classification metrics, the keyword-count baseline, and the
paired t-test used by the experiment harnesses.

All scores are computed for the positive (relevant) class only. Metrics
whose denominator is zero are reported as 0.0 with ``degenerate`` set,
never as NaN, so downstream tables stay machine-readable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .corpus import Article
from .features.tokenizer import Tokenizer


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1, "degenerate": self.degenerate,
        }


def compute_metrics(predictions: Sequence[int], gold: Sequence[int]) -> MetricsReport:
    """Confusion-matrix metrics with the positive class fixed at 1."""
    pred = np.asarray(predictions)
    true = np.asarray(gold)
    if pred.shape != true.shape or pred.ndim != 1:
        raise EvaluationError(
            f"prediction/gold length mismatch: {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise EvaluationError("cannot score zero predictions")
    for name, arr in (("predictions", pred), ("gold", true)):
        if not np.isin(arr, (0, 1)).all():
            raise EvaluationError(f"{name} must be binary 0/1 labels")
    tp = int(np.sum((pred == 1) & (true == 1)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    degenerate = False
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    accuracy = (tp + tn) / pred.size
    return MetricsReport(tp=tp, fp=fp, tn=tn, fn=fn, accuracy=accuracy,
                         precision=precision, recall=recall, f1=f1,
                         degenerate=degenerate)


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-tailed paired t-test; (0.0, 1.0) when every difference is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise EvaluationError("paired samples must be 1-d and equal length")
    if a.size < 2:
        raise EvaluationError("paired t-test needs at least two pairs")
    if np.all(a == b):
        return 0.0, 1.0
    t, p = stats.ttest_rel(a, b)
    return float(t), float(p)


def match_keywords(article: Article, keyword_list: Iterable[str],
                   tokenizer: Tokenizer | None = None) -> list[str]:
    """Distinct list entries whose token sequence occurs in the article.

    Multi-word entries must appear as a contiguous token run; stopwords
    are kept so phrases survive intact. Each entry counts at most once.
    """
    tokenizer = tokenizer or Tokenizer(drop_stopwords=False)
    tokens = tokenizer.tokenize(article.text)
    matched = []
    for entry in keyword_list:
        phrase = tuple(tokenizer.tokenize(entry))
        if not phrase:
            continue
        span = len(phrase)
        hit = any(tuple(tokens[i:i + span]) == phrase
                  for i in range(len(tokens) - span + 1))
        if hit and entry not in matched:
            matched.append(entry)
    return matched


def keyword_baseline(article: Article, keyword_list: Iterable[str], k: int = 3,
                     tokenizer: Tokenizer | None = None) -> int:
    """Relevant iff the article matches strictly more than ``k`` entries."""
    if k < 0:
        raise EvaluationError(f"keyword threshold must be nonnegative, got {k}")
    return int(len(match_keywords(article, keyword_list, tokenizer)) > k)


_REPORT_METRICS = ("accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class ArmComparison:
    """Paired t-test between two arms' per-seed F1 scores."""

    arm_a: str
    arm_b: str
    t_stat: float
    p_value: float


@dataclass(frozen=True)
class ComparisonReport:
    """Per-seed metrics for a set of experiment arms.

    Arms are positional: ``results[i][j]`` is arm ``arms[i]`` under seed
    ``seeds[j]``. Positional access keeps degenerate reports (the same arm
    listed twice) well-defined.
    """

    name: str
    arms: tuple[str, ...]
    seeds: tuple[int, ...]
    results: tuple[tuple[MetricsReport, ...], ...]
    comparisons: tuple[ArmComparison, ...]

    def metric_values(self, arm_index: int, metric: str) -> list[float]:
        if metric not in _REPORT_METRICS:
            raise EvaluationError(f"unknown metric {metric!r}")
        return [getattr(report, metric) for report in self.results[arm_index]]

    def mean(self, arm_index: int, metric: str) -> float:
        return float(np.mean(self.metric_values(arm_index, metric)))

    def std(self, arm_index: int, metric: str) -> float:
        values = self.metric_values(arm_index, metric)
        if len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1))

    def to_csv(self) -> str:
        lines = ["seed,strategy,accuracy,precision,recall,f1"]
        for j, seed in enumerate(self.seeds):
            for i, arm in enumerate(self.arms):
                report = self.results[i][j]
                cells = ",".join(f"{getattr(report, m):.6f}" for m in _REPORT_METRICS)
                lines.append(f"{seed},{arm},{cells}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max(len("arm"), *(len(arm) for arm in self.arms)) + 2
        lines = [f"{self.name}: {len(self.seeds)} seeds"]
        header = "arm".ljust(width) + "".join(m.ljust(16) for m in _REPORT_METRICS)
        lines.append(header)
        for i, arm in enumerate(self.arms):
            cells = "".join(
                f"{self.mean(i, m):.4f}±{self.std(i, m):.4f}".ljust(16)
                for m in _REPORT_METRICS
            )
            lines.append(arm.ljust(width) + cells)
        for comp in self.comparisons:
            lines.append(
                f"paired t-test (f1): {comp.arm_a} vs {comp.arm_b}"
                f"  t={comp.t_stat:+.3f}  p={comp.p_value:.4f}"
            )
        return "\n".join(lines) + "\n"


def compare_arms(
    name: str,
    arms: Sequence[str],
    seeds: Sequence[int],
    results: Sequence[Sequence[MetricsReport]],
) -> ComparisonReport:
    """Assemble a ComparisonReport, t-testing F1 for every arm pair."""
    arms = tuple(arms)
    seeds = tuple(seeds)
    if len(results) != len(arms):
        raise EvaluationError(f"expected {len(arms)} result rows, got {len(results)}")
    rows = tuple(tuple(row) for row in results)
    for arm, row in zip(arms, rows):
        if len(row) != len(seeds):
            raise EvaluationError(
                f"arm {arm!r} has {len(row)} results for {len(seeds)} seeds"
            )
    comparisons = []
    for i in range(len(arms)):
        for j in range(i + 1, len(arms)):
            f1_a = [report.f1 for report in rows[i]]
            f1_b = [report.f1 for report in rows[j]]
            t_stat, p_value = paired_ttest(f1_a, f1_b)
            comparisons.append(ArmComparison(arms[i], arms[j], t_stat, p_value))
    return ComparisonReport(
        name=name, arms=arms, seeds=seeds, results=rows,
        comparisons=tuple(comparisons),
    )
