"""Backends for NLI classification, sentence embedding, BERTScore-style
scoring, and response sampling.

Mock backends are pure functions of their configuration, so every downstream
result is exactly reproducible in tests. The remote backend speaks the
sidecar wire protocol (JSON over HTTP, see README) with a bounded retry
policy.
"""

from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np
import requests

from .corpus import Conversation
from .errors import (
    BackendError,
    InputError,
    InsufficientResponsesError,
    ItemValidationError,
    PoolExhaustedError,
)


class NLILabel(Enum):
    CONTRADICTION = "contradiction"
    NEUTRAL = "neutral"
    ENTAILMENT = "entailment"


# Tie-break priority for argmax: contradiction > neutral > entailment.
LABEL_ORDER = (NLILabel.CONTRADICTION, NLILabel.NEUTRAL, NLILabel.ENTAILMENT)


def _argmax_label(probs: Mapping[NLILabel, float]) -> NLILabel:
    best = LABEL_ORDER[0]
    for label in LABEL_ORDER[1:]:
        if probs[label] > probs[best]:
            best = label
    return best


@dataclass(frozen=True)
class NLIResult:
    """A 3-class probability distribution plus its argmax label."""

    probs: dict[NLILabel, float]
    predicted: NLILabel

    def __post_init__(self):
        if set(self.probs) != set(LABEL_ORDER):
            raise ItemValidationError("probs must cover exactly the three NLI labels")
        for label, p in self.probs.items():
            if not (0.0 <= p <= 1.0):
                raise ItemValidationError(f"probability {p} for {label.value} outside [0, 1]")
        if abs(sum(self.probs.values()) - 1.0) > 1e-6:
            raise ItemValidationError(f"probabilities sum to {sum(self.probs.values())}, not 1")
        if self.predicted is not _argmax_label(self.probs):
            raise ItemValidationError("predicted label is not the argmax of probs")

    @classmethod
    def from_probs(
        cls, contradiction: float, neutral: float, entailment: float
    ) -> "NLIResult":
        probs = {
            NLILabel.CONTRADICTION: contradiction,
            NLILabel.NEUTRAL: neutral,
            NLILabel.ENTAILMENT: entailment,
        }
        return cls(probs=probs, predicted=_argmax_label(probs))

    @classmethod
    def from_label(cls, label: NLILabel | str, confidence: float) -> "NLIResult":
        """Build a distribution that puts ``confidence`` on ``label`` and
        splits the remainder evenly between the other two classes."""
        if isinstance(label, str):
            label = NLILabel(label)
        rest = (1.0 - confidence) / 2.0
        probs = {l: (confidence if l is label else rest) for l in LABEL_ORDER}
        return cls(probs=probs, predicted=_argmax_label(probs))

    @property
    def confidence(self) -> float:
        """Probability mass on the predicted class."""
        return self.probs[self.predicted]

    def probs_by_tag(self) -> dict[str, float]:
        return {label.value: self.probs[label] for label in LABEL_ORDER}

    @classmethod
    def from_tag_probs(cls, tags: Mapping[str, float]) -> "NLIResult":
        return cls.from_probs(
            contradiction=tags["contradiction"],
            neutral=tags["neutral"],
            entailment=tags["entailment"],
        )


@dataclass(frozen=True)
class PairwiseNLIMatrix:
    """NLI results for every ordered pair (i, j), i != j, of an n-response set."""

    n: int
    entries: dict[tuple[int, int], NLIResult]

    def __post_init__(self):
        if self.n < 2:
            raise InsufficientResponsesError(f"need at least 2 responses, got {self.n}")
        expected = {(i, j) for i in range(self.n) for j in range(self.n) if i != j}
        if set(self.entries) != expected:
            raise ItemValidationError(
                f"matrix for n={self.n} must have exactly the {len(expected)} "
                f"off-diagonal ordered pairs"
            )

    def __len__(self) -> int:
        return len(self.entries)

    def results(self) -> list[NLIResult]:
        """Entries in fixed (i, j) lexicographic order."""
        return [self.entries[key] for key in sorted(self.entries)]


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # "mock" | "remote"
    model_id: str
    endpoint: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("mock", "remote"):
            raise ItemValidationError(f"unknown backend kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ItemValidationError("remote backend requires an endpoint")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "model_id": self.model_id, "endpoint": self.endpoint}


class NLIBackend(Protocol):
    model_id: str

    def classify(self, premise: str, hypothesis: str) -> NLIResult: ...


class EmbeddingBackend(Protocol):
    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class ScoringBackend(Protocol):
    def bertscore(self, candidate: str, references: Sequence[str]) -> float: ...


class Sampler(Protocol):
    def sample(self, context: Conversation) -> str: ...


def _require_nonempty(**fields: str) -> None:
    for name, value in fields.items():
        if not value:
            raise InputError(f"{name} must be a non-empty string")


class MockNLIBackend:
    """Table-driven NLI classifier for tests.

    Lookup order per ordered pair (premise, hypothesis):
      1. explicit table entry,
      2. identical strings -> entailment @ 0.95,
      3. anything else -> neutral with probs (0.1, 0.8, 0.1).
    """

    def __init__(
        self,
        table: Optional[Mapping[tuple[str, str], tuple[NLILabel | str, float]]] = None,
        model_id: str = "mock-nli",
    ):
        self.model_id = model_id
        self.table = {
            pair: NLIResult.from_label(label, conf)
            for pair, (label, conf) in (table or {}).items()
        }
        self.classify_calls = 0

    def classify(self, premise: str, hypothesis: str) -> NLIResult:
        _require_nonempty(premise=premise, hypothesis=hypothesis)
        self.classify_calls += 1
        hit = self.table.get((premise, hypothesis))
        if hit is not None:
            return hit
        if premise == hypothesis:
            return NLIResult.from_label(NLILabel.ENTAILMENT, 0.95)
        return NLIResult.from_probs(0.1, 0.8, 0.1)


def mock_embedding_vector(text: str, dim: int) -> np.ndarray:
    """The deterministic mock embedding rule.

    Component i is derived from sha256 of the text and the component index::

        digest = sha256(f"{text}\\x00{i}".encode("utf-8")).digest()
        v[i] = int.from_bytes(digest[:8], "big") / 2**63 - 1.0

    giving values in [-1, 1). Exposed so tests can recompute vectors.
    """
    components = []
    for i in range(dim):
        digest = hashlib.sha256(f"{text}\x00{i}".encode("utf-8")).digest()
        components.append(int.from_bytes(digest[:8], "big") / 2**63 - 1.0)
    return np.asarray(components, dtype=np.float64)


class MockEmbeddingBackend:
    """Hash-seeded deterministic embeddings, with an optional override table
    for engineering exact cosine values in fixtures."""

    def __init__(
        self,
        dim: int = 8,
        vector_table: Optional[Mapping[str, Sequence[float]]] = None,
    ):
        self.dim = dim
        self.vector_table = {
            text: np.asarray(vec, dtype=np.float64) for text, vec in (vector_table or {}).items()
        }

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise InputError("embed requires at least one text")
        out = []
        for text in texts:
            hit = self.vector_table.get(text)
            out.append(hit if hit is not None else mock_embedding_vector(text, self.dim))
        return out


def token_overlap_f1(candidate: str, reference: str) -> float:
    """Set-F1 of lowercased whitespace tokens; the mock BERTScore proxy."""
    cand = set(candidate.lower().split())
    ref = set(reference.lower().split())
    overlap = len(cand & ref)
    if overlap == 0:
        return 0.0
    precision = overlap / len(cand)
    recall = overlap / len(ref)
    return 2 * precision * recall / (precision + recall)


class MockScoringBackend:
    """BERTScore stand-in: max token-overlap F1 over the references."""

    def bertscore(self, candidate: str, references: Sequence[str]) -> float:
        if not references:
            raise InputError("bertscore requires at least one reference")
        return max(token_overlap_f1(candidate, ref) for ref in references)


class MockBackend(MockNLIBackend, MockEmbeddingBackend, MockScoringBackend):
    """All three scoring capabilities behind one object, for convenience."""

    def __init__(
        self,
        table: Optional[Mapping[tuple[str, str], tuple[NLILabel | str, float]]] = None,
        dim: int = 8,
        vector_table: Optional[Mapping[str, Sequence[float]]] = None,
        model_id: str = "mock-nli",
    ):
        MockNLIBackend.__init__(self, table=table, model_id=model_id)
        MockEmbeddingBackend.__init__(self, dim=dim, vector_table=vector_table)


@dataclass(frozen=True)
class SamplingParams:
    p: float = 0.9
    max_new_tokens: int = 64
    seed: int = 0
    model: str = ""
    truncate_tokens: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "max_new_tokens": self.max_new_tokens,
            "seed": self.seed,
            "model": self.model,
            "truncate_tokens": self.truncate_tokens,
        }


class MockPoolSampler:
    """Draws responses without replacement from a fixed pool, in an order
    given by seeding ``random.Random(seed)`` and shuffling the pool once."""

    def __init__(self, pool: Sequence[str], seed: int = 0):
        if not pool:
            raise InputError("sampler pool is empty")
        order = list(pool)
        random.Random(seed).shuffle(order)
        self._order = order
        self._next = 0

    def sample(self, context: Conversation) -> str:
        if self._next >= len(self._order):
            raise PoolExhaustedError(
                f"mock pool of {len(self._order)} responses exhausted"
            )
        response = self._order[self._next]
        self._next += 1
        return response


class RankedListSampler:
    """Emits a fixed candidate list from highest to lowest rank, consuming
    each candidate once (beam-search comparison mode)."""

    def __init__(self, ranked: Sequence[str]):
        if not ranked:
            raise InputError("ranked candidate list is empty")
        self._ranked = list(ranked)
        self._next = 0

    @property
    def remaining(self) -> int:
        return len(self._ranked) - self._next

    def next_ranked(self) -> str:
        if self._next >= len(self._ranked):
            raise PoolExhaustedError(
                f"ranked list of {len(self._ranked)} candidates exhausted"
            )
        candidate = self._ranked[self._next]
        self._next += 1
        return candidate

    def sample(self, context: Conversation) -> str:
        return self.next_ranked()


class RemoteBackend:
    """Client for the inference sidecar.

    Transient transport failures are retried ``max_attempts`` times with
    exponential backoff before raising BackendError with the attempt count.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        session=None,
        max_attempts: int = 3,
        backoff_seconds: float = 0.5,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.session = session if session is not None else requests.Session()
        self.max_attempts = max_attempts
        self.backoff_seconds = backoff_seconds

    def describe(self) -> BackendDescriptor:
        return BackendDescriptor(kind="remote", model_id=self.model_id, endpoint=self.endpoint)

    def _post(self, route: str, payload: dict) -> dict:
        url = f"{self.endpoint}{route}"
        last_error: Optional[Exception] = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                response = self.session.post(url, json=payload, timeout=60)
                response.raise_for_status()
                return response.json()
            except Exception as e:  # transport + HTTP errors are both retryable
                last_error = e
                if attempt < self.max_attempts:
                    time.sleep(self.backoff_seconds * 2 ** (attempt - 1))
        raise BackendError(
            f"POST {url} failed after {self.max_attempts} attempts: {last_error}",
            attempts=self.max_attempts,
        )

    def classify(self, premise: str, hypothesis: str) -> NLIResult:
        _require_nonempty(premise=premise, hypothesis=hypothesis)
        body = self._post(
            "/v1/nli",
            {"premise": premise, "hypothesis": hypothesis, "model": self.model_id},
        )
        return NLIResult.from_tag_probs(body["probs"])

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise InputError("embed requires at least one text")
        body = self._post("/v1/embed", {"texts": list(texts)})
        return [np.asarray(v, dtype=np.float64) for v in body["vectors"]]

    def bertscore(self, candidate: str, references: Sequence[str]) -> float:
        if not references:
            raise InputError("bertscore requires at least one reference")
        body = self._post(
            "/v1/bertscore", {"candidate": candidate, "references": list(references)}
        )
        return float(body["f1"])

    def sample_response(self, context: Conversation, params: SamplingParams) -> str:
        body = self._post(
            "/v1/sample",
            {
                "turns": [{"speaker": t.speaker, "text": t.text} for t in context.turns],
                "params": params.to_dict(),
            },
        )
        return body["text"]


@dataclass
class RemoteSampler:
    """Sampler facade over RemoteBackend: each call bumps the request seed so
    repeated draws differ but the whole sequence stays reproducible."""

    backend: RemoteBackend
    params: SamplingParams
    _calls: int = field(default=0, init=False)

    def sample(self, context: Conversation) -> str:
        params = SamplingParams(
            p=self.params.p,
            max_new_tokens=self.params.max_new_tokens,
            seed=self.params.seed + self._calls,
            model=self.params.model,
            truncate_tokens=self.params.truncate_tokens,
        )
        self._calls += 1
        return self.backend.sample_response(context, params)


def classify_all_ordered_pairs(
    backend: NLIBackend, responses: Sequence[str]
) -> PairwiseNLIMatrix:
    """Classify every ordered pair (i, j), i != j, yielding n(n-1) entries."""
    n = len(responses)
    if n < 2:
        raise InsufficientResponsesError(f"need at least 2 responses, got {n}")
    for idx, response in enumerate(responses):
        if not response:
            raise InputError(f"response {idx} is empty")
    entries = {
        (i, j): backend.classify(responses[i], responses[j])
        for i in range(n)
        for j in range(n)
        if i != j
    }
    return PairwiseNLIMatrix(n=n, entries=entries)
