"""Model registry: maps serving names to lazily constructed providers.

Stub models are always registered so the contract suite and local
development run without ML dependencies. Hugging Face entries construct on
first use and raise ModelLoadError if their stack is unavailable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .providers import (
    HFBertscore,
    HFEmbed,
    HFGenerate,
    HFNLI,
    StubBertscore,
    StubEmbed,
    StubGenerate,
    StubNLI,
)

TASKS = ("nli", "embed", "bertscore", "generate")


class UnknownModelError(KeyError):
    pass


@dataclass
class RegistryEntry:
    name: str
    task: str
    factory: Callable[[], object]
    max_context_tokens: Optional[int] = None
    _instance: object = field(default=None, repr=False)

    def resolve(self):
        if self._instance is None:
            self._instance = self.factory()
        return self._instance

    @property
    def loaded(self) -> bool:
        return self._instance is not None


class ModelRegistry:
    def __init__(self):
        self._entries: dict[str, RegistryEntry] = {}
        self._defaults: dict[str, str] = {}

    def register(self, name: str, task: str, factory: Callable[[], object],
                 max_context_tokens: Optional[int] = None,
                 default: bool = False) -> None:
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
        self._entries[name] = RegistryEntry(
            name=name, task=task, factory=factory,
            max_context_tokens=max_context_tokens)
        if default or task not in self._defaults:
            self._defaults[task] = name

    def get(self, name: str, task: str) -> RegistryEntry:
        entry = self._entries.get(name)
        if entry is None or entry.task != task:
            raise UnknownModelError(
                f"no {task} model named {name!r}; registered: "
                f"{sorted(n for n, e in self._entries.items() if e.task == task)}")
        return entry

    def default_name(self, task: str) -> str:
        if task not in self._defaults:
            raise UnknownModelError(f"no default model for task {task!r}")
        return self._defaults[task]

    def entries(self) -> list[RegistryEntry]:
        return list(self._entries.values())


# Friendly-name -> checkpoint defaults for the HF entries. BlenderBot 1.0
# caps at 128 positional embeddings, so its entry declares the limit.
HF_MODEL_IDS = {
    "mnli": "roberta-large-mnli",
    "combined": "ynie/roberta-large-snli_mnli_fever_anli_R1_R2_R3-nli",
    "sent-embed": "sentence-transformers/bert-base-nli-mean-tokens",
    "bertscore": "roberta-large",
    "dialogpt": "microsoft/DialoGPT-large",
    "blenderbot": "facebook/blenderbot-400M-distill",
}


def default_registry(device: str = "cpu",
                     overrides: Optional[dict[str, str]] = None) -> ModelRegistry:
    """Stubs plus the standard HF lineup. ``overrides`` remaps friendly
    names to different checkpoints (e.g. {"mnli": "/local/path"})."""
    ids = dict(HF_MODEL_IDS)
    ids.update(overrides or {})
    registry = ModelRegistry()

    registry.register("stub-nli", "nli", StubNLI)
    registry.register("stub-embed", "embed", StubEmbed)
    registry.register("stub-bertscore", "bertscore", StubBertscore)
    registry.register("stub-generate", "generate", StubGenerate)

    registry.register("mnli", "nli",
                      lambda: HFNLI(ids["mnli"], device), default=True)
    registry.register("combined", "nli",
                      lambda: HFNLI(ids["combined"], device))
    registry.register("sent-embed", "embed",
                      lambda: HFEmbed(ids["sent-embed"], device), default=True)
    registry.register("bertscore", "bertscore",
                      lambda: HFBertscore(ids["bertscore"], device), default=True)
    registry.register("dialogpt", "generate",
                      lambda: HFGenerate(ids["dialogpt"], device))
    registry.register("blenderbot", "generate",
                      lambda: HFGenerate(ids["blenderbot"], device),
                      max_context_tokens=128)
    return registry


def stub_registry() -> ModelRegistry:
    """Stubs only; every task defaults to its stub. Used by the contract
    suite and available via --stub-only for local development."""
    registry = ModelRegistry()
    registry.register("stub-nli", "nli", StubNLI, default=True)
    registry.register("stub-embed", "embed", StubEmbed, default=True)
    registry.register("stub-bertscore", "bertscore", StubBertscore, default=True)
    registry.register("stub-generate", "generate", StubGenerate,
                      max_context_tokens=None, default=True)
    return registry
