"""Conversations, response sets, and dataset loaders.

The on-disk interchange format is JSON lines, one conversation per line:

    {"id": str,
     "turns": [{"speaker": str, "text": str}],
     "response_sets": [{"source": str,
                        "responses": [str],
                        "diversity_parameter": num|null,
                        "human_ratings": [num]|null}]}

All loaders preserve response text byte-for-byte; validation trims copies,
never the stored strings.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import (
    CannotSplitError,
    ItemValidationError,
    RowValidationError,
    SchemaError,
)

RESPONSE_SOURCES = ("human", "model", "sampler")
BUNDLE_KINDS = ("diversity_eval", "multi_reference", "generation_context")


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ItemValidationError("turn text is empty")


@dataclass(frozen=True)
class Conversation:
    """A dialogue context: an id plus an ordered, non-empty list of turns."""

    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if not self.id:
            raise ItemValidationError("conversation id is empty")
        if not self.turns:
            raise ItemValidationError(f"conversation {self.id!r} has no turns")
        object.__setattr__(self, "turns", tuple(self.turns))

    @property
    def text(self) -> str:
        """All turn texts joined by single spaces."""
        return " ".join(t.text for t in self.turns)


@dataclass(frozen=True)
class ResponseSet:
    """An ordered set of candidate responses for one conversation.

    ``diversity_parameter`` is the gold knob used to generate the set (a
    nucleus/temperature value, or 0/1 for low/high crowdworker instruction).
    ``human_ratings`` are per-annotator diversity ratings on a 1-5 scale with
    half-point granularity.
    """

    conversation_id: str
    responses: tuple[str, ...]
    source: str
    diversity_parameter: Optional[float] = None
    human_ratings: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.source not in RESPONSE_SOURCES:
            raise ItemValidationError(
                f"unknown response source {self.source!r}; expected one of {RESPONSE_SOURCES}"
            )
        object.__setattr__(self, "responses", tuple(self.responses))
        if self.human_ratings is not None:
            ratings = tuple(float(r) for r in self.human_ratings)
            for r in ratings:
                if not (1.0 <= r <= 5.0) or (2 * r) != round(2 * r):
                    raise ItemValidationError(
                        f"rating {r} outside the 1.0-5.0 half-point scale"
                    )
            object.__setattr__(self, "human_ratings", ratings)

    def __len__(self) -> int:
        return len(self.responses)

    @property
    def mean_human_rating(self) -> Optional[float]:
        """Arithmetic mean of the annotator ratings, or None if unrated."""
        if not self.human_ratings:
            return None
        return sum(self.human_ratings) / len(self.human_ratings)


@dataclass(frozen=True)
class DatasetBundle:
    """A named collection of (conversation, response sets) items."""

    name: str
    kind: str
    items: tuple[tuple[Conversation, tuple[ResponseSet, ...]], ...]

    def __post_init__(self):
        if self.kind not in BUNDLE_KINDS:
            raise ItemValidationError(
                f"unknown bundle kind {self.kind!r}; expected one of {BUNDLE_KINDS}"
            )
        items = tuple((conv, tuple(sets)) for conv, sets in self.items)
        object.__setattr__(self, "items", items)
        seen: set[str] = set()
        for conv, _ in items:
            if conv.id in seen:
                raise ItemValidationError(f"duplicate conversation id {conv.id!r}")
            seen.add(conv.id)

    def __len__(self) -> int:
        return len(self.items)

    def conversations(self) -> list[Conversation]:
        return [conv for conv, _ in self.items]


@dataclass(frozen=True)
class CsvSchema:
    """Column-name mapping for the diversity-evaluation CSV layout.

    The released files' layout is not authoritative here, so the mapping is
    explicit; ``CsvSchema.default()`` ships a guess that must be validated
    against real files before use.
    """

    context_column: str
    response_columns: tuple[str, ...]
    id_column: Optional[str] = None
    diversity_parameter_column: Optional[str] = None
    rating_columns: tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def default(cls, n_responses: int = 5, n_ratings: int = 10) -> "CsvSchema":
        return cls(
            context_column="context",
            response_columns=tuple(f"response_{i}" for i in range(n_responses)),
            diversity_parameter_column="diversity_parameter",
            rating_columns=tuple(f"rating_{i}" for i in range(n_ratings)),
        )

    @classmethod
    def from_dict(cls, d: dict) -> "CsvSchema":
        try:
            return cls(
                context_column=d["context_column"],
                response_columns=tuple(d["response_columns"]),
                id_column=d.get("id_column"),
                diversity_parameter_column=d.get("diversity_parameter_column"),
                rating_columns=tuple(d.get("rating_columns", ())),
            )
        except KeyError as e:
            raise SchemaError(f"schema map missing key {e.args[0]!r}") from None

    def required_columns(self) -> list[str]:
        cols = [self.context_column, *self.response_columns]
        if self.id_column:
            cols.append(self.id_column)
        if self.diversity_parameter_column:
            cols.append(self.diversity_parameter_column)
        cols.extend(self.rating_columns)
        return cols


def load_diversity_eval_csv(
    path: str | Path, schema_map: CsvSchema, name: Optional[str] = None
) -> DatasetBundle:
    """Load a conTest/decTest-style CSV: one row = one conversation with its
    response set, diversity parameter, and per-annotator ratings.

    Raises SchemaError if a mapped column is absent, RowValidationError if a
    rating falls outside [1, 5].
    """
    path = Path(path)
    name = name or path.stem
    items: list[tuple[Conversation, tuple[ResponseSet, ...]]] = []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in schema_map.required_columns() if c not in header]
        if missing:
            raise SchemaError(
                f"{path.name}: missing column(s) {', '.join(repr(c) for c in missing)}"
            )
        for row_idx, row in enumerate(reader):
            conv_id = (
                row[schema_map.id_column] if schema_map.id_column else f"{name}-{row_idx:04d}"
            )
            conv = Conversation(
                id=conv_id, turns=(Turn(speaker="context", text=row[schema_map.context_column]),)
            )
            responses = tuple(row[c] for c in schema_map.response_columns)
            diversity_parameter = None
            if schema_map.diversity_parameter_column:
                diversity_parameter = float(row[schema_map.diversity_parameter_column])
            ratings: Optional[tuple[float, ...]] = None
            if schema_map.rating_columns:
                try:
                    ratings = tuple(float(row[c]) for c in schema_map.rating_columns)
                except ValueError as e:
                    raise RowValidationError(f"unparseable rating ({e})", row=row_idx) from None
                for r in ratings:
                    if not (1.0 <= r <= 5.0):
                        raise RowValidationError(
                            f"rating {r} outside [1, 5]", row=row_idx
                        )
            try:
                response_set = ResponseSet(
                    conversation_id=conv_id,
                    responses=responses,
                    source="human",
                    diversity_parameter=diversity_parameter,
                    human_ratings=ratings,
                )
            except ItemValidationError as e:
                raise RowValidationError(str(e), row=row_idx) from None
            items.append((conv, (response_set,)))
    return DatasetBundle(name=name, kind="diversity_eval", items=tuple(items))


def _conversation_to_dict(conv: Conversation, sets: Sequence[ResponseSet]) -> dict:
    return {
        "id": conv.id,
        "turns": [{"speaker": t.speaker, "text": t.text} for t in conv.turns],
        "response_sets": [
            {
                "source": rs.source,
                "responses": list(rs.responses),
                "diversity_parameter": rs.diversity_parameter,
                "human_ratings": list(rs.human_ratings) if rs.human_ratings else None,
            }
            for rs in sets
        ],
    }


def _item_from_dict(obj: dict) -> tuple[Conversation, tuple[ResponseSet, ...]]:
    conv = Conversation(
        id=obj["id"],
        turns=tuple(Turn(speaker=t["speaker"], text=t["text"]) for t in obj["turns"]),
    )
    sets = tuple(
        ResponseSet(
            conversation_id=conv.id,
            responses=tuple(rs["responses"]),
            source=rs["source"],
            diversity_parameter=rs.get("diversity_parameter"),
            human_ratings=tuple(rs["human_ratings"]) if rs.get("human_ratings") else None,
        )
        for rs in obj["response_sets"]
    )
    return conv, sets


def write_normalized(bundle: DatasetBundle, path: str | Path) -> None:
    """Write a bundle in the JSON-lines interchange format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for conv, sets in bundle.items:
            f.write(json.dumps(_conversation_to_dict(conv, sets), ensure_ascii=False))
            f.write("\n")


def load_normalized(
    path: str | Path, kind: str, name: Optional[str] = None
) -> DatasetBundle:
    """Load a bundle from the JSON-lines interchange format."""
    path = Path(path)
    items = []
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise RowValidationError(f"invalid JSON ({e})", row=line_no) from None
            items.append(_item_from_dict(obj))
    return DatasetBundle(name=name or path.stem, kind=kind, items=tuple(items))


def load_multi_reference(
    path: str | Path, strict: bool = True, name: Optional[str] = None
) -> DatasetBundle:
    """Load a multi-reference dataset (DailyDialog++-style, 5 references each).

    Every item must carry exactly one human response set; in strict mode that
    set must hold exactly 5 references.
    """
    bundle = load_normalized(path, kind="multi_reference", name=name)
    for conv, sets in bundle.items:
        human = [rs for rs in sets if rs.source == "human"]
        if len(human) != 1:
            raise ItemValidationError(
                f"conversation {conv.id!r} has {len(human)} human response sets, expected 1"
            )
        if strict and len(human[0]) != 5:
            raise ItemValidationError(
                f"conversation {conv.id!r} has {len(human[0])} references, expected 5"
            )
    return bundle


def split_at_random_turn(
    conv: Conversation, seed_namespace: str
) -> tuple[Conversation, tuple[Turn, ...]]:
    """Split a conversation into (context, held-out suffix) at a deterministic
    pseudo-random turn.

    The split index is derived as::

        digest = sha256(f"{seed_namespace}:{conv.id}".encode("utf-8"))
        index  = 1 + int.from_bytes(digest[:8], "big") % (len(turns) - 1)

    so the same (namespace, conversation) always splits identically. The
    context keeps turns [0, index), the suffix gets turns [index, end).
    """
    if len(conv.turns) < 2:
        raise CannotSplitError(
            f"conversation {conv.id!r} has {len(conv.turns)} turn(s); need at least 2"
        )
    digest = hashlib.sha256(f"{seed_namespace}:{conv.id}".encode("utf-8")).digest()
    index = 1 + int.from_bytes(digest[:8], "big") % (len(conv.turns) - 1)
    context = Conversation(id=conv.id, turns=conv.turns[:index])
    return context, conv.turns[index:]


def truncate_context(context: Conversation, max_tokens: int) -> Conversation:
    """Keep only the last ``max_tokens`` whitespace tokens of a conversation.

    Turn boundaries are preserved for surviving turns; the oldest surviving
    turn may be cut to its final tokens (rejoined with single spaces). Turns
    losing all their tokens are dropped. Contexts already under the limit
    pass through unchanged.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    total = sum(len(t.text.split()) for t in context.turns)
    if total <= max_tokens:
        return context
    kept: list[Turn] = []
    budget = max_tokens
    for turn in reversed(context.turns):
        tokens = turn.text.split()
        if budget >= len(tokens):
            kept.append(turn)
            budget -= len(tokens)
        else:
            if budget > 0:
                kept.append(Turn(speaker=turn.speaker, text=" ".join(tokens[-budget:])))
            break
        if budget == 0:
            break
    return Conversation(id=context.id, turns=tuple(reversed(kept)))


def load_schema_map(path: str | Path) -> CsvSchema:
    """Read a schema map from a JSON file (see CsvSchema.from_dict)."""
    with Path(path).open(encoding="utf-8") as f:
        return CsvSchema.from_dict(json.load(f))


def iter_response_sets(bundle: DatasetBundle) -> Iterable[tuple[Conversation, ResponseSet]]:
    """Flatten a bundle into (conversation, response set) pairs."""
    for conv, sets in bundle.items:
        for rs in sets:
            yield conv, rs
