"""Diversity Threshold Generation: sample a set of n responses, then while
the diversity target is unmet, evict the response whose removal maximizes the
remaining set's score and sample a replacement, stopping at a total budget of
S sampled utterances (the initial n count toward S).

The loop keeps the last state at termination, not the best-seen one; the
best-seen score is recorded in the trace for analysis.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .corpus import Conversation, DatasetBundle
from .errors import (
    ConfigError,
    DiversityError,
    InsufficientResponsesError,
    ItemValidationError,
    PoolExhaustedError,
)
from .metrics import DiversityEvaluator, DiversityScore

PREDICATES = ("count_contradictions_gt", "value_ge")


@dataclass(frozen=True)
class ThresholdSpec:
    """Target and budget for one threshold-generation run.

    ``count_contradictions_gt`` is satisfied when the number of contradiction
    predictions strictly exceeds the threshold; ``value_ge`` when the metric
    value is at or above it.
    """

    metric: str
    predicate: str
    threshold: float
    set_size: int
    max_samples: int
    trials: int = 1

    def __post_init__(self):
        if self.predicate not in PREDICATES:
            raise ItemValidationError(f"unknown predicate {self.predicate!r}")
        if self.set_size < 2:
            raise ItemValidationError(f"set_size must be >= 2, got {self.set_size}")
        if self.max_samples < self.set_size:
            raise ItemValidationError(
                f"max_samples ({self.max_samples}) must be >= set_size ({self.set_size})"
            )
        if self.trials < 1:
            raise ItemValidationError(f"trials must be >= 1, got {self.trials}")

    def satisfied_by(self, score: DiversityScore) -> bool:
        if self.predicate == "count_contradictions_gt":
            if score.counts is None:
                raise ConfigError(
                    f"predicate {self.predicate!r} needs label counts, but metric "
                    f"{score.metric!r} does not produce them"
                )
            return score.counts.contradiction > self.threshold
        return score.value >= self.threshold

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "predicate": self.predicate,
            "threshold": self.threshold,
            "set_size": self.set_size,
            "max_samples": self.max_samples,
            "trials": self.trials,
        }


@dataclass(frozen=True)
class GenerationStep:
    removed: str
    removed_index: int
    replacement: str
    score_after: float

    def to_dict(self) -> dict:
        return {
            "removed": self.removed,
            "removed_index": self.removed_index,
            "replacement": self.replacement,
            "score_after": self.score_after,
        }


@dataclass(frozen=True)
class GenerationTrace:
    """Full record of one threshold-generation run."""

    conversation_id: str
    initial_set: tuple[str, ...]
    steps: tuple[GenerationStep, ...]
    final_set: tuple[str, ...]
    starting_score: float
    ending_score: float
    num_sampled: int
    threshold_met: bool
    overlap: int
    best_score: float
    sampler_exhausted: bool = False
    trial: int = 0

    def __post_init__(self):
        if len(self.initial_set) != len(self.final_set):
            raise ItemValidationError("initial and final sets must have the same size")
        if self.num_sampled != len(self.initial_set) + len(self.steps):
            raise ItemValidationError(
                "num_sampled must equal the initial set size plus one per step"
            )

    def to_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "trial": self.trial,
            "initial_set": list(self.initial_set),
            "steps": [s.to_dict() for s in self.steps],
            "final_set": list(self.final_set),
            "starting_score": self.starting_score,
            "ending_score": self.ending_score,
            "num_sampled": self.num_sampled,
            "threshold_met": self.threshold_met,
            "overlap": self.overlap,
            "best_score": self.best_score,
            "sampler_exhausted": self.sampler_exhausted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationTrace":
        return cls(
            conversation_id=d["conversation_id"],
            trial=d.get("trial", 0),
            initial_set=tuple(d["initial_set"]),
            steps=tuple(GenerationStep(**s) for s in d["steps"]),
            final_set=tuple(d["final_set"]),
            starting_score=d["starting_score"],
            ending_score=d["ending_score"],
            num_sampled=d["num_sampled"],
            threshold_met=d["threshold_met"],
            overlap=d["overlap"],
            best_score=d["best_score"],
            sampler_exhausted=d.get("sampler_exhausted", False),
        )


@dataclass(frozen=True)
class FailureRecord:
    conversation_id: str
    trial: int
    error: str

    def to_dict(self) -> dict:
        return {"conversation_id": self.conversation_id, "trial": self.trial, "error": self.error}


@dataclass(frozen=True)
class CorpusSummary:
    mean_starting_score: float
    mean_ending_score: float
    mean_num_sampled: float
    mean_overlap: float
    threshold_met_fraction: float
    n_traces: int
    failures: tuple[FailureRecord, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        def jsonable(value: float):
            # means over zero traces are NaN; emit null, not bare NaN tokens
            return None if value != value else value

        return {
            "mean_starting_score": jsonable(self.mean_starting_score),
            "mean_ending_score": jsonable(self.mean_ending_score),
            "mean_num_sampled": jsonable(self.mean_num_sampled),
            "mean_overlap": jsonable(self.mean_overlap),
            "threshold_met_fraction": jsonable(self.threshold_met_fraction),
            "n_traces": self.n_traces,
            "failures": [f.to_dict() for f in self.failures],
        }


def multiset_overlap(a: Sequence[str], b: Sequence[str]) -> int:
    """Size of the multiset intersection: duplicates count with multiplicity."""
    return sum((Counter(a) & Counter(b)).values())


def least_contributing_index(
    responses: Sequence[str], evaluator: DiversityEvaluator
) -> int:
    """Index whose removal leaves the highest-scoring (n-1)-subset.

    Evaluates every leave-one-out subset exhaustively; ties go to the lowest
    index. Needs n >= 3 so the subsets themselves are scoreable.
    """
    n = len(responses)
    if n < 3:
        raise InsufficientResponsesError(
            f"leave-one-out eviction needs at least 3 responses, got {n}"
        )
    best_index = 0
    best_value = None
    for i in range(n):
        subset = list(responses[:i]) + list(responses[i + 1 :])
        value = evaluator.score(subset).value
        if best_value is None or value > best_value:
            best_index, best_value = i, value
    return best_index


def run_threshold_generation(
    conv: Conversation,
    sampler,
    spec: ThresholdSpec,
    evaluator: DiversityEvaluator,
    trial: int = 0,
) -> GenerationTrace:
    """One full generation loop for one conversation.

    Sampler exhaustion during resampling ends the loop and is flagged on the
    trace; exhaustion during the initial draw propagates, since no legal
    trace exists without n responses.
    """
    current = [sampler.sample(conv) for _ in range(spec.set_size)]
    initial = tuple(current)
    num_sampled = spec.set_size
    score = evaluator.score(current)
    starting = score.value
    best = score.value
    met = spec.satisfied_by(score)
    steps: list[GenerationStep] = []
    exhausted = False

    while not met and num_sampled < spec.max_samples:
        evict = least_contributing_index(current, evaluator)
        try:
            replacement = sampler.sample(conv)
        except PoolExhaustedError:
            exhausted = True
            break
        removed = current[evict]
        current[evict] = replacement
        num_sampled += 1
        score = evaluator.score(current)
        best = max(best, score.value)
        steps.append(
            GenerationStep(
                removed=removed,
                removed_index=evict,
                replacement=replacement,
                score_after=score.value,
            )
        )
        met = spec.satisfied_by(score)

    final = tuple(current)
    return GenerationTrace(
        conversation_id=conv.id,
        trial=trial,
        initial_set=initial,
        steps=tuple(steps),
        final_set=final,
        starting_score=starting,
        ending_score=score.value,
        num_sampled=num_sampled,
        threshold_met=met,
        overlap=multiset_overlap(initial, final),
        best_score=best,
        sampler_exhausted=exhausted,
    )


def beam_mode_run(
    conv: Conversation,
    ranked_list: Sequence[str],
    spec: ThresholdSpec,
    evaluator: DiversityEvaluator,
    trial: int = 0,
) -> GenerationTrace:
    """Threshold generation over a pre-ranked candidate list: the initial set
    is the top n, replacements continue down the ranking."""
    from .backend import RankedListSampler

    return run_threshold_generation(
        conv, RankedListSampler(ranked_list), spec, evaluator, trial=trial
    )


def derive_seed(base_seed: int, trial: int, conversation_id: str) -> int:
    """Stable per-(trial, conversation) seed: the first 8 bytes of
    sha256(f"{base_seed}:{trial}:{conversation_id}") as a big-endian int."""
    digest = hashlib.sha256(f"{base_seed}:{trial}:{conversation_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else float("nan")


def summarize_traces(
    traces: Sequence[GenerationTrace], failures: Sequence[FailureRecord] = ()
) -> CorpusSummary:
    return CorpusSummary(
        mean_starting_score=_mean([t.starting_score for t in traces]),
        mean_ending_score=_mean([t.ending_score for t in traces]),
        mean_num_sampled=_mean([float(t.num_sampled) for t in traces]),
        mean_overlap=_mean([float(t.overlap) for t in traces]),
        threshold_met_fraction=_mean([float(t.threshold_met) for t in traces]),
        n_traces=len(traces),
        failures=tuple(failures),
    )


def run_corpus(
    dataset: DatasetBundle,
    sampler_factory: Callable[[Conversation, int], object],
    spec: ThresholdSpec,
    evaluator: DiversityEvaluator,
    base_seed: int = 0,
    jobs: int = 1,
) -> tuple[list[GenerationTrace], CorpusSummary]:
    """Run the loop over every conversation for ``spec.trials`` trials.

    ``sampler_factory(conv, seed)`` builds a fresh sampler per
    (trial, conversation); seeds come from derive_seed so trials are
    independent but reproducible. Per-conversation failures are isolated
    and reported in the summary; the means cover completed traces only.
    """
    tasks = [
        (trial, conv)
        for trial in range(spec.trials)
        for conv in dataset.conversations()
    ]

    def run_one(task: tuple[int, Conversation]) -> GenerationTrace:
        trial, conv = task
        sampler = sampler_factory(conv, derive_seed(base_seed, trial, conv.id))
        return run_threshold_generation(conv, sampler, spec, evaluator, trial=trial)

    traces: list[GenerationTrace] = []
    failures: list[FailureRecord] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_guarded(run_one), tasks))
    else:
        outcomes = [_guarded(run_one)(task) for task in tasks]
    for (trial, conv), outcome in zip(tasks, outcomes):
        if isinstance(outcome, GenerationTrace):
            traces.append(outcome)
        else:
            failures.append(
                FailureRecord(conversation_id=conv.id, trial=trial, error=str(outcome))
            )
    return traces, summarize_traces(traces, failures)


def _guarded(fn):
    def wrapper(task):
        try:
            return fn(task)
        except DiversityError as e:
            return e

    return wrapper
