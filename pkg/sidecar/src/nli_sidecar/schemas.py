"""Pydantic models for the wire protocol. FastAPI validates every response
against these on the way out, so a contract violation can never leave the
process silently.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, model_validator

NLI_TAGS = ("contradiction", "neutral", "entailment")
SIMPLEX_TOLERANCE = 1e-6


class NLIRequest(BaseModel):
    premise: str = Field(min_length=1)
    hypothesis: str = Field(min_length=1)
    model: str = Field(min_length=1)


class NLIResponse(BaseModel):
    probs: dict[str, float]

    @model_validator(mode="after")
    def check_simplex(self):
        if set(self.probs) != set(NLI_TAGS):
            raise ValueError(f"probs must have exactly the keys {NLI_TAGS}")
        total = sum(self.probs.values())
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"probs sum to {total}, not 1")
        if any(p < 0.0 or p > 1.0 for p in self.probs.values()):
            raise ValueError("probabilities must lie in [0, 1]")
        return self


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


class EmbedResponse(BaseModel):
    vectors: list[list[float]]

    @model_validator(mode="after")
    def check_uniform_dimension(self):
        if not self.vectors:
            raise ValueError("at least one vector required")
        dims = {len(v) for v in self.vectors}
        if len(dims) != 1:
            raise ValueError(f"vectors have mixed dimensions {sorted(dims)}")
        return self


class BertscoreRequest(BaseModel):
    candidate: str
    references: list[str] = Field(min_length=1)


class BertscoreResponse(BaseModel):
    f1: float = Field(ge=0.0, le=1.0)


class TurnPayload(BaseModel):
    speaker: str
    text: str = Field(min_length=1)


class SampleParams(BaseModel):
    p: float = Field(default=0.9, gt=0.0, le=1.0)
    max_new_tokens: int = Field(default=64, ge=1)
    seed: int = 0
    model: str = Field(min_length=1)
    truncate_tokens: Optional[int] = Field(default=None, ge=1)


class SampleRequest(BaseModel):
    turns: list[TurnPayload] = Field(min_length=1)
    params: SampleParams


class SampleResponse(BaseModel):
    text: str


class ModelInfo(BaseModel):
    name: str
    task: str
    max_context_tokens: Optional[int] = None
    loaded: bool


class HealthResponse(BaseModel):
    status: str
    models: list[ModelInfo]
