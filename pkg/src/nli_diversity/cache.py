"""Persistent cache for pairwise NLI predictions.

The greedy resampling loop re-scores heavily overlapping response sets, so
caching turns each resample into O(new pairs) backend calls. Keys are
(model id, premise, hypothesis); values are the raw probability
distributions, which JSON round-trips bit-exactly.

File format: JSON lines, one record per entry:

    {"model": str, "premise": str, "hypothesis": str, "probs": {...}}

Loading applies last-write-wins on duplicate keys; values for a given key
are idempotent, so concurrent writers only ever duplicate lines.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from .backend import NLIResult


class PairwiseCache:
    """In-memory cache with optional JSON-lines persistence."""

    def __init__(self, path: Optional[str | Path] = None):
        self._lock = threading.Lock()
        self._mem: dict[tuple[str, str, str], NLIResult] = {}
        self._path = Path(path) if path is not None else None
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self) -> None:
        with self._path.open(encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                record = json.loads(line)
                key = (record["model"], record["premise"], record["hypothesis"])
                self._mem[key] = NLIResult.from_tag_probs(record["probs"])

    def __len__(self) -> int:
        return len(self._mem)

    def get(self, model: str, premise: str, hypothesis: str) -> Optional[NLIResult]:
        with self._lock:
            return self._mem.get((model, premise, hypothesis))

    def put(self, model: str, premise: str, hypothesis: str, result: NLIResult) -> None:
        record = {
            "model": model,
            "premise": premise,
            "hypothesis": hypothesis,
            "probs": result.probs_by_tag(),
        }
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._lock:
            self._mem[(model, premise, hypothesis)] = result
            if self._path is not None:
                with self._path.open("a", encoding="utf-8") as f:
                    f.write(line)
                    f.flush()


class CachingNLIBackend:
    """NLI backend wrapper that consults a PairwiseCache before the inner
    backend. Cached results are bit-identical to fresh ones."""

    def __init__(self, inner, cache: Optional[PairwiseCache] = None):
        self.inner = inner
        self.cache = cache if cache is not None else PairwiseCache()

    @property
    def model_id(self) -> str:
        return self.inner.model_id

    def classify(self, premise: str, hypothesis: str) -> NLIResult:
        hit = self.cache.get(self.model_id, premise, hypothesis)
        if hit is not None:
            return hit
        result = self.inner.classify(premise, hypothesis)
        self.cache.put(self.model_id, premise, hypothesis, result)
        return result
