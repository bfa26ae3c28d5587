"""Set-level diversity metrics.

NLI-based metrics aggregate over all ordered response pairs:

  baseline:    +1 per contradiction, 0 per neutral, -1 per entailment
  neutral:     +1 per contradiction, +1 per neutral, -1 per entailment
  confidence:  signed probability mass of the predicted class
               (+p for contradiction, 0 for neutral, -p for entailment)

distinct-n measures lexical diversity (unique/total n-grams pooled over the
set); embedding diversity measures semantic diversity as the mean negative
cosine similarity over unordered response pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Protocol, Sequence

import numpy as np

from .backend import (
    EmbeddingBackend,
    NLILabel,
    NLIResult,
    PairwiseNLIMatrix,
    classify_all_ordered_pairs,
)
from .errors import (
    DegenerateEmbeddingError,
    InsufficientResponsesError,
    UndefinedMetricError,
)

METRIC_NAMES = ("baseline_nli", "neutral_nli", "confidence_nli", "distinct_n", "sent_embed")

DEFAULT_DISTINCT_N_VALUES = (1, 2, 3, 4, 5)


class LabelCounts(NamedTuple):
    contradiction: int
    neutral: int
    entailment: int


@dataclass(frozen=True)
class DiversityScore:
    metric: str
    value: float
    counts: Optional[LabelCounts] = None

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": self.value,
            "counts": None if self.counts is None else self.counts._asdict(),
        }


def nli_counts(matrix: PairwiseNLIMatrix) -> LabelCounts:
    """Count predicted labels over all ordered pairs; sums to n(n-1)."""
    contradiction = neutral = entailment = 0
    for result in matrix.entries.values():
        if result.predicted is NLILabel.CONTRADICTION:
            contradiction += 1
        elif result.predicted is NLILabel.NEUTRAL:
            neutral += 1
        else:
            entailment += 1
    return LabelCounts(contradiction, neutral, entailment)


def baseline_nli_diversity(matrix: PairwiseNLIMatrix) -> DiversityScore:
    counts = nli_counts(matrix)
    value = counts.contradiction - counts.entailment
    return DiversityScore(metric="baseline_nli", value=float(value), counts=counts)


def neutral_nli_diversity(matrix: PairwiseNLIMatrix) -> DiversityScore:
    counts = nli_counts(matrix)
    value = counts.contradiction + counts.neutral - counts.entailment
    return DiversityScore(metric="neutral_nli", value=float(value), counts=counts)


def confidence_contribution(result: NLIResult) -> float:
    """Signed predicted-class probability for one ordered pair."""
    if result.predicted is NLILabel.CONTRADICTION:
        return result.confidence
    if result.predicted is NLILabel.ENTAILMENT:
        return -result.confidence
    return 0.0


def confidence_nli_diversity(matrix: PairwiseNLIMatrix) -> DiversityScore:
    counts = nli_counts(matrix)
    # fsum: exact accumulation, so the score is permutation invariant bit-for-bit
    value = math.fsum(confidence_contribution(r) for r in matrix.results())
    return DiversityScore(metric="confidence_nli", value=value, counts=counts)


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def distinct_n(
    responses: Sequence[str], n_values: Sequence[int] = DEFAULT_DISTINCT_N_VALUES
) -> float:
    """Unique n-grams / total n-grams, pooled across the whole response set,
    averaged over ``n_values``.

    Tokenization is lowercase + whitespace split. Orders with zero total
    n-grams (responses shorter than n) are skipped; if every order is empty
    the metric is undefined.
    """
    if not responses:
        raise UndefinedMetricError("distinct-n needs at least one response")
    token_lists = [r.lower().split() for r in responses]
    ratios = []
    for n in n_values:
        pooled: list[tuple[str, ...]] = []
        for tokens in token_lists:
            pooled.extend(_ngrams(tokens, n))
        if not pooled:
            continue
        ratios.append(len(set(pooled)) / len(pooled))
    if not ratios:
        raise UndefinedMetricError(
            "distinct-n is undefined: no n-grams at any requested order"
        )
    return sum(ratios) / len(ratios)


def embedding_diversity(responses: Sequence[str], backend: EmbeddingBackend) -> float:
    """Mean negative cosine similarity over unordered response pairs."""
    if len(responses) < 2:
        raise InsufficientResponsesError(
            f"embedding diversity needs at least 2 responses, got {len(responses)}"
        )
    vectors = backend.embed(list(responses))
    norms = [float(np.linalg.norm(v)) for v in vectors]
    for idx, norm in enumerate(norms):
        if norm == 0.0 or not math.isfinite(norm):
            raise DegenerateEmbeddingError(
                f"embedding for response {idx} has zero or non-finite norm", index=idx
            )
    similarities = []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            similarities.append(
                float(np.dot(vectors[i], vectors[j])) / (norms[i] * norms[j])
            )
    return -math.fsum(similarities) / len(similarities)


def empirical_threshold(scores: Sequence[float], percentile: float) -> float:
    """Nearest-rank percentile of a score distribution: the
    ceil(p/100 * N)-th smallest score (1-indexed), no interpolation."""
    if not scores:
        raise UndefinedMetricError("cannot take a percentile of an empty score list")
    if not (0.0 < percentile < 100.0):
        raise ValueError(f"percentile must be in (0, 100), got {percentile}")
    ordered = sorted(scores)
    rank = math.ceil(percentile / 100.0 * len(ordered))
    return ordered[rank - 1]


class DiversityEvaluator(Protocol):
    """Anything that scores a response set: the greedy loop and the
    correlation harness both consume this."""

    metric: str

    def score(self, responses: Sequence[str]) -> DiversityScore: ...


_NLI_VARIANTS = {
    "baseline_nli": baseline_nli_diversity,
    "neutral_nli": neutral_nli_diversity,
    "confidence_nli": confidence_nli_diversity,
}


class NLIDiversityEvaluator:
    """Scores a set by classifying all ordered pairs with an NLI backend.

    Wrap the backend in CachingNLIBackend when using this inside the greedy
    loop: subsets and resampled sets then only pay for genuinely new pairs.
    """

    def __init__(self, backend, variant: str = "baseline_nli"):
        if variant not in _NLI_VARIANTS:
            raise ValueError(f"unknown NLI variant {variant!r}")
        self.backend = backend
        self.metric = variant

    def score(self, responses: Sequence[str]) -> DiversityScore:
        matrix = classify_all_ordered_pairs(self.backend, responses)
        return _NLI_VARIANTS[self.metric](matrix)


class DistinctNEvaluator:
    metric = "distinct_n"

    def __init__(self, n_values: Sequence[int] = DEFAULT_DISTINCT_N_VALUES):
        self.n_values = tuple(n_values)

    def score(self, responses: Sequence[str]) -> DiversityScore:
        return DiversityScore(metric=self.metric, value=distinct_n(responses, self.n_values))


class EmbeddingDiversityEvaluator:
    metric = "sent_embed"

    def __init__(self, backend: EmbeddingBackend):
        self.backend = backend

    def score(self, responses: Sequence[str]) -> DiversityScore:
        return DiversityScore(
            metric=self.metric, value=embedding_diversity(responses, self.backend)
        )
