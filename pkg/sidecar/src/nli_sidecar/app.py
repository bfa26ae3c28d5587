"""FastAPI application implementing the wire protocol:

    POST /v1/nli       {"premise", "hypothesis", "model"} -> {"probs": {...}}
    POST /v1/embed     {"texts": [...]}                   -> {"vectors": [[...]]}
    POST /v1/bertscore {"candidate", "references"}        -> {"f1": ...}
    POST /v1/sample    {"turns": [...], "params": {...}}  -> {"text": ...}
    GET  /v1/health                                       -> {"status", "models"}

The service is stateless; generation randomness is owned by the caller via
the per-request seed. Response models re-validate every payload on the way
out (probability simplex, uniform embedding dimensions, score ranges).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .providers import ModelLoadError, normalize_probs
from .registry import ModelRegistry, UnknownModelError, default_registry
from .schemas import (
    BertscoreRequest,
    BertscoreResponse,
    EmbedRequest,
    EmbedResponse,
    HealthResponse,
    ModelInfo,
    NLIRequest,
    NLIResponse,
    SampleRequest,
    SampleResponse,
)


def create_app(registry: ModelRegistry | None = None) -> FastAPI:
    registry = registry if registry is not None else default_registry()
    app = FastAPI(title="nli-diversity sidecar", version="0.1.0")

    def resolve(name: str, task: str):
        try:
            entry = registry.get(name, task)
        except UnknownModelError as e:
            raise HTTPException(status_code=404, detail=str(e)) from None
        try:
            return entry, entry.resolve()
        except ModelLoadError as e:
            raise HTTPException(status_code=503, detail=str(e)) from None

    @app.post("/v1/nli", response_model=NLIResponse)
    def nli(request: NLIRequest) -> NLIResponse:
        _, provider = resolve(request.model, "nli")
        probs = provider.classify(request.premise, request.hypothesis)
        return NLIResponse(probs=normalize_probs(probs))

    @app.post("/v1/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest) -> EmbedResponse:
        _, provider = resolve(registry.default_name("embed"), "embed")
        return EmbedResponse(vectors=provider.embed(request.texts))

    @app.post("/v1/bertscore", response_model=BertscoreResponse)
    def bertscore(request: BertscoreRequest) -> BertscoreResponse:
        _, provider = resolve(registry.default_name("bertscore"), "bertscore")
        return BertscoreResponse(f1=provider.score(request.candidate, request.references))

    @app.post("/v1/sample", response_model=SampleResponse)
    def sample(request: SampleRequest) -> SampleResponse:
        entry, provider = resolve(request.params.model, "generate")
        truncate = request.params.truncate_tokens
        if truncate is None:
            truncate = entry.max_context_tokens
        elif entry.max_context_tokens is not None:
            truncate = min(truncate, entry.max_context_tokens)
        prompt = " ".join(turn.text for turn in request.turns)
        text = provider.generate(
            prompt,
            p=request.params.p,
            max_new_tokens=request.params.max_new_tokens,
            seed=request.params.seed,
            truncate_tokens=truncate,
        )
        return SampleResponse(text=text)

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            models=[
                ModelInfo(name=e.name, task=e.task,
                          max_context_tokens=e.max_context_tokens, loaded=e.loaded)
                for e in registry.entries()
            ],
        )

    return app
