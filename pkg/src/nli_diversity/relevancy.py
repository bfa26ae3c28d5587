"""Multi-reference relevancy scoring for response sets.

BLEU here is the standard sentence-level formulation: uniform weights over
n-gram orders 1..4 (restricted to orders the candidate is long enough to
have), counts clipped against the per-n-gram maximum over all references,
and a brevity penalty against the closest reference length. A zero n-gram
precision is replaced by epsilon (1e-9) so the geometric mean stays defined.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .backend import ScoringBackend
from .errors import InputError, ItemValidationError

BLEU_EPSILON = 1e-9
BLEU_MAX_ORDER = 4

RELEVANCY_PHASES = ("starting", "ending")


@dataclass(frozen=True)
class RelevancyReport:
    conversation_id: str
    phase: str
    bleu: float
    bertscore: float

    def __post_init__(self):
        if self.phase not in RELEVANCY_PHASES:
            raise ItemValidationError(f"unknown phase {self.phase!r}")
        for name, score in (("bleu", self.bleu), ("bertscore", self.bertscore)):
            if not (0.0 <= score <= 1.0):
                raise ItemValidationError(f"{name} score {score} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "phase": self.phase,
            "bleu": self.bleu,
            "bertscore": self.bertscore,
        }


def _tokenize(text: str) -> list[str]:
    return text.lower().split()


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _closest_reference_length(candidate_len: int, reference_lens: Sequence[int]) -> int:
    # ties go to the shorter reference
    return min(reference_lens, key=lambda r: (abs(r - candidate_len), r))


def bleu_multi_ref(candidate: str, references: Sequence[str]) -> float:
    """Multi-reference BLEU in [0, 1]. An empty candidate scores 0.0 with a
    warning rather than raising."""
    reference_tokens = [_tokenize(r) for r in references]
    reference_tokens = [t for t in reference_tokens if t]
    if not reference_tokens:
        raise InputError("bleu requires at least one non-empty reference")
    candidate_tokens = _tokenize(candidate)
    if not candidate_tokens:
        warnings.warn("empty candidate scored 0.0", stacklevel=2)
        return 0.0

    orders = range(1, min(BLEU_MAX_ORDER, len(candidate_tokens)) + 1)
    log_precision_sum = 0.0
    for n in orders:
        counts = _ngram_counts(candidate_tokens, n)
        max_ref_counts: Counter = Counter()
        for ref in reference_tokens:
            ref_counts = _ngram_counts(ref, n)
            for ngram in counts:
                max_ref_counts[ngram] = max(max_ref_counts[ngram], ref_counts[ngram])
        clipped = sum(min(count, max_ref_counts[ngram]) for ngram, count in counts.items())
        precision = clipped / sum(counts.values())
        if precision == 0.0:
            precision = BLEU_EPSILON
        log_precision_sum += math.log(precision)

    geometric_mean = math.exp(log_precision_sum / len(orders))
    c = len(candidate_tokens)
    r = _closest_reference_length(c, [len(t) for t in reference_tokens])
    brevity_penalty = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity_penalty * geometric_mean


def set_relevancy(
    responses: Sequence[str],
    references: Sequence[str],
    backend: ScoringBackend,
    conversation_id: str = "",
    phase: str = "starting",
) -> RelevancyReport:
    """Average per-response BLEU and BERTScore of a response set against the
    shared references."""
    if not responses:
        raise InputError("set_relevancy requires at least one response")
    bleu = sum(bleu_multi_ref(r, references) for r in responses) / len(responses)
    bert = sum(backend.bertscore(r, references) for r in responses) / len(responses)
    return RelevancyReport(
        conversation_id=conversation_id, phase=phase, bleu=bleu, bertscore=bert
    )
