"""Evaluation of diversity metrics against gold annotations: Spearman rank
correlation (average ranks for ties), percentile-bootstrap confidence
intervals, and histogram exports for external plotting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import DatasetBundle, iter_response_sets
from .errors import ItemValidationError, UndefinedCorrelationError
from .metrics import DiversityEvaluator

CORRELATION_TARGETS = ("diversity_parameter", "human_rating")


@dataclass(frozen=True)
class CorrelationReport:
    metric: str
    dataset: str
    target: str
    rho: float
    n_items: int
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    def __post_init__(self):
        if abs(self.rho) > 1.0 + 1e-9:
            raise ItemValidationError(f"|rho| = {abs(self.rho)} exceeds 1")
        if (self.ci_low is None) != (self.ci_high is None):
            raise ItemValidationError("ci_low and ci_high must be set together")
        if self.ci_low is not None and self.ci_low > self.ci_high:
            raise ItemValidationError("ci_low exceeds ci_high")

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "dataset": self.dataset,
            "target": self.target,
            "rho": self.rho,
            "n_items": self.n_items,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


@dataclass(frozen=True)
class BootstrapSpec:
    """Defaults follow the reference protocol: resamples of 110 items, 1,000
    iterations, 95% percentile interval."""

    resample_size: int = 110
    iterations: int = 1000
    level: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class HistogramExport:
    label: str
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ItemValidationError("need exactly one count per bin")
        if any(c < 0 for c in self.counts):
            raise ItemValidationError("negative bin count")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "bin_edges": list(self.bin_edges),
            "counts": list(self.counts),
        }

    def to_csv_rows(self) -> list[tuple[float, float, int]]:
        """(bin_low, bin_high, count) rows for CSV export."""
        return [
            (self.bin_edges[i], self.bin_edges[i + 1], self.counts[i])
            for i in range(len(self.counts))
        ]


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rank correlation: Pearson correlation of fractional ranks,
    with average ranks for ties."""
    if len(x) != len(y):
        raise UndefinedCorrelationError(
            f"length mismatch: {len(x)} vs {len(y)}"
        )
    if len(x) < 2:
        raise UndefinedCorrelationError("need at least 2 points")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    rx = rankdata(xa, method="average")
    ry = rankdata(ya, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(np.dot(rx, ry) / np.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))


def metric_target_pairs(
    dataset: DatasetBundle, evaluator: DiversityEvaluator, target: str
) -> tuple[list[float], list[float], int]:
    """Score every annotated response set once; returns (scores, targets,
    n_skipped). Items missing the target annotation are skipped with a
    warning."""
    if target not in CORRELATION_TARGETS:
        raise ValueError(f"unknown target {target!r}; expected one of {CORRELATION_TARGETS}")
    scores: list[float] = []
    targets: list[float] = []
    skipped = 0
    for conv, response_set in iter_response_sets(dataset):
        if target == "diversity_parameter":
            gold = response_set.diversity_parameter
        else:
            gold = response_set.mean_human_rating
        if gold is None:
            skipped += 1
            continue
        scores.append(evaluator.score(response_set.responses).value)
        targets.append(float(gold))
    if skipped:
        warnings.warn(
            f"skipped {skipped} response set(s) missing {target!r}", stacklevel=2
        )
    return scores, targets, skipped


def correlate_metric(
    dataset: DatasetBundle,
    evaluator: DiversityEvaluator,
    target: str,
    bootstrap: Optional[BootstrapSpec] = None,
) -> CorrelationReport:
    """Spearman correlation between a metric and a gold target over a
    dataset, with an optional bootstrap confidence interval."""
    scores, targets, _ = metric_target_pairs(dataset, evaluator, target)
    rho = spearman_rho(scores, targets)
    ci_low = ci_high = None
    if bootstrap is not None:
        ci_low, ci_high = bootstrap_ci(
            scores,
            targets,
            resample_size=bootstrap.resample_size,
            iterations=bootstrap.iterations,
            level=bootstrap.level,
            seed=bootstrap.seed,
        )
    return CorrelationReport(
        metric=evaluator.metric,
        dataset=dataset.name,
        target=target,
        rho=rho,
        n_items=len(scores),
        ci_low=ci_low,
        ci_high=ci_high,
    )


def bootstrap_ci(
    scores: Sequence[float],
    targets: Sequence[float],
    resample_size: int = 110,
    iterations: int = 1000,
    level: float = 0.05,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for Spearman's rho.

    Each iteration resamples ``resample_size`` (score, target) pairs with
    replacement. Degenerate resamples (constant on either side) are redrawn
    and counted; more than 10x ``iterations`` redraws is an error. The
    interval is the (level/2, 1 - level/2) percentile pair of the bootstrap
    distribution (linear interpolation), deterministic for a fixed seed.
    """
    if iterations < 100:
        raise ValueError(f"iterations must be >= 100, got {iterations}")
    if resample_size < 2:
        raise ValueError(f"resample_size must be >= 2, got {resample_size}")
    if len(scores) != len(targets) or len(scores) < 2:
        raise UndefinedCorrelationError("need matched score/target vectors of length >= 2")
    xs = np.asarray(scores, dtype=np.float64)
    ys = np.asarray(targets, dtype=np.float64)
    rng = np.random.default_rng(seed)
    rhos = np.empty(iterations, dtype=np.float64)
    redraws = 0
    max_redraws = 10 * iterations
    for it in range(iterations):
        while True:
            idx = rng.integers(0, len(xs), size=resample_size)
            rx, ry = xs[idx], ys[idx]
            if np.all(rx == rx[0]) or np.all(ry == ry[0]):
                redraws += 1
                if redraws > max_redraws:
                    raise UndefinedCorrelationError(
                        f"exceeded {max_redraws} degenerate bootstrap redraws"
                    )
                continue
            break
        rhos[it] = spearman_rho(rx, ry)
    low = float(np.percentile(rhos, 100.0 * (level / 2.0)))
    high = float(np.percentile(rhos, 100.0 * (1.0 - level / 2.0)))
    return low, high


def export_histogram(
    values: Sequence[float], bins: int | Sequence[float], label: str
) -> HistogramExport:
    """Bin values into a histogram with right-open bins (last bin closed).

    ``bins`` is either a bin count (edges span the data) or explicit,
    strictly increasing edges that must cover every value, so counts always
    sum to the input size.
    """
    if len(values) == 0:
        raise ValueError("cannot build a histogram of zero values")
    if not isinstance(bins, int):
        edges = np.asarray(bins, dtype=np.float64)
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("explicit bin edges must be strictly increasing")
        lo, hi = float(np.min(values)), float(np.max(values))
        if lo < edges[0] or hi > edges[-1]:
            raise ValueError(
                f"values span [{lo}, {hi}], outside the bin range [{edges[0]}, {edges[-1]}]"
            )
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins)
    return HistogramExport(
        label=label,
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
    )
