"""Model providers.

Two families: deterministic stubs (no ML dependencies, used for contract
tests and local development) and Hugging Face providers (torch/transformers,
imported lazily so the service starts without them installed).

Every NLI provider returns a probability dict over
contradiction/neutral/entailment that the route renormalizes before the
response schema enforces the simplex.
"""

from __future__ import annotations

import hashlib
import math
import random
from typing import Optional, Protocol, Sequence


class ModelLoadError(RuntimeError):
    """The requested model could not be constructed (missing deps, no
    network for weights, bad name)."""


class NLIProvider(Protocol):
    def classify(self, premise: str, hypothesis: str) -> dict[str, float]: ...


class EmbedProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


class BertscoreProvider(Protocol):
    def score(self, candidate: str, references: Sequence[str]) -> float: ...


class GenerateProvider(Protocol):
    def generate(self, prompt: str, p: float, max_new_tokens: int, seed: int,
                 truncate_tokens: Optional[int]) -> str: ...


def _stable_int(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


# ---------------------------------------------------------------------------
# stubs

NEGATORS = {"not", "no", "never", "nothing", "cannot"}


class StubNLI:
    """Rule-based stand-in: identical texts entail; a negator on exactly one
    side of an otherwise-overlapping pair contradicts; everything else is
    neutral. Deterministic for fixed inputs."""

    def classify(self, premise: str, hypothesis: str) -> dict[str, float]:
        p_tokens = premise.lower().split()
        h_tokens = hypothesis.lower().split()
        if p_tokens == h_tokens:
            return {"contradiction": 0.02, "neutral": 0.03, "entailment": 0.95}
        p_neg = bool(NEGATORS & set(p_tokens))
        h_neg = bool(NEGATORS & set(h_tokens))
        content_p = set(p_tokens) - NEGATORS
        content_h = set(h_tokens) - NEGATORS
        overlap = len(content_p & content_h) / max(len(content_p | content_h), 1)
        if p_neg != h_neg and overlap >= 0.5:
            return {"contradiction": 0.9, "neutral": 0.07, "entailment": 0.03}
        return {"contradiction": 0.1, "neutral": 0.8, "entailment": 0.1}


class StubEmbed:
    """sha256-derived unit-free vectors; identical texts embed identically."""

    def __init__(self, dim: int = 16):
        self.dim = dim

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        vectors = []
        for text in texts:
            components = []
            for i in range(self.dim):
                digest = hashlib.sha256(f"{text}\x00{i}".encode("utf-8")).digest()
                components.append(int.from_bytes(digest[:8], "big") / 2**63 - 1.0)
            vectors.append(components)
        return vectors


class StubBertscore:
    """Token-set F1, max over references."""

    def score(self, candidate: str, references: Sequence[str]) -> float:
        cand = set(candidate.lower().split())
        best = 0.0
        for reference in references:
            ref = set(reference.lower().split())
            overlap = len(cand & ref)
            if overlap == 0 or not cand or not ref:
                continue
            precision = overlap / len(cand)
            recall = overlap / len(ref)
            best = max(best, 2 * precision * recall / (precision + recall))
        return best


class StubGenerate:
    """Deterministic word-salad generator with whitespace tokenization.

    Records the token count of the prompt it actually saw, so tests can
    assert the truncation contract.
    """

    VOCABULARY = ("maybe", "sure", "right", "okay", "well", "indeed",
                  "honestly", "真的", "totally", "hmm")

    def __init__(self):
        self.last_prompt_tokens: Optional[int] = None

    def generate(self, prompt: str, p: float, max_new_tokens: int, seed: int,
                 truncate_tokens: Optional[int]) -> str:
        tokens = prompt.split()
        if truncate_tokens is not None:
            tokens = tokens[-truncate_tokens:]
        self.last_prompt_tokens = len(tokens)
        rng = random.Random(seed ^ _stable_int(" ".join(tokens)) ^ _stable_int(f"p={p}"))
        length = rng.randint(1, max_new_tokens)
        return " ".join(rng.choice(self.VOCABULARY) for _ in range(length))


# ---------------------------------------------------------------------------
# Hugging Face providers (lazy imports)

def _import_torch_stack():
    try:
        import torch  # noqa: F401
        import transformers  # noqa: F401
    except ImportError as e:
        raise ModelLoadError(
            f"torch/transformers not installed (sidecar [models] extra): {e}"
        ) from None
    return torch, transformers


NLI_LABEL_ALIASES = {
    "contradiction": "contradiction",
    "neutral": "neutral",
    "entailment": "entailment",
}


class HFNLI:
    """Sequence-pair classifier (e.g. roberta-large-mnli). Deterministic:
    eval mode, no dropout, no sampling."""

    def __init__(self, model_name: str, device: str = "cpu"):
        torch, transformers = _import_torch_stack()
        try:
            self.tokenizer = transformers.AutoTokenizer.from_pretrained(model_name)
            self.model = transformers.AutoModelForSequenceClassification.from_pretrained(
                model_name)
        except Exception as e:
            raise ModelLoadError(f"cannot load NLI model {model_name!r}: {e}") from None
        self.model.eval().to(device)
        self.device = device
        self.torch = torch
        self.label_map = {}
        for idx, raw in self.model.config.id2label.items():
            tag = NLI_LABEL_ALIASES.get(raw.lower())
            if tag:
                self.label_map[int(idx)] = tag
        if set(self.label_map.values()) != {"contradiction", "neutral", "entailment"}:
            raise ModelLoadError(
                f"{model_name!r} labels {self.model.config.id2label} are not a "
                f"3-way NLI head")

    def classify(self, premise: str, hypothesis: str) -> dict[str, float]:
        inputs = self.tokenizer(premise, hypothesis, return_tensors="pt",
                                truncation=True).to(self.device)
        with self.torch.no_grad():
            logits = self.model(**inputs).logits[0]
        probs = logits.softmax(dim=-1).tolist()
        return {tag: probs[idx] for idx, tag in self.label_map.items()}


class HFEmbed:
    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise ModelLoadError(f"sentence-transformers not installed: {e}") from None
        try:
            self.model = SentenceTransformer(model_name, device=device)
        except Exception as e:
            raise ModelLoadError(f"cannot load embedding model {model_name!r}: {e}") from None

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [v.tolist() for v in self.model.encode(list(texts), convert_to_numpy=True)]


class HFBertscore:
    """Greedy-matching token F1 over contextual embeddings, max over
    references, clamped to [0, 1] (no idf weighting or baseline rescaling)."""

    def __init__(self, model_name: str, device: str = "cpu"):
        torch, transformers = _import_torch_stack()
        try:
            self.tokenizer = transformers.AutoTokenizer.from_pretrained(model_name)
            self.model = transformers.AutoModel.from_pretrained(model_name)
        except Exception as e:
            raise ModelLoadError(f"cannot load scorer model {model_name!r}: {e}") from None
        self.model.eval().to(device)
        self.device = device
        self.torch = torch

    def _token_matrix(self, text: str):
        inputs = self.tokenizer(text, return_tensors="pt", truncation=True).to(self.device)
        with self.torch.no_grad():
            hidden = self.model(**inputs).last_hidden_state[0]
        return self.torch.nn.functional.normalize(hidden, dim=-1)

    def score(self, candidate: str, references: Sequence[str]) -> float:
        cand = self._token_matrix(candidate)
        best = 0.0
        for reference in references:
            ref = self._token_matrix(reference)
            similarity = cand @ ref.T
            precision = similarity.max(dim=1).values.mean().item()
            recall = similarity.max(dim=0).values.mean().item()
            if precision + recall > 0:
                best = max(best, 2 * precision * recall / (precision + recall))
        return min(max(best, 0.0), 1.0)


class HFGenerate:
    """Nucleus-sampled generation for causal (DialoGPT-class) or seq2seq
    (BlenderBot-class) dialogue models. Seeded per request; the context is
    truncated to the last ``truncate_tokens`` model-native tokens."""

    def __init__(self, model_name: str, device: str = "cpu"):
        torch, transformers = _import_torch_stack()
        try:
            config = transformers.AutoConfig.from_pretrained(model_name)
            self.tokenizer = transformers.AutoTokenizer.from_pretrained(model_name)
            cls = (transformers.AutoModelForSeq2SeqLM if config.is_encoder_decoder
                   else transformers.AutoModelForCausalLM)
            self.model = cls.from_pretrained(model_name)
        except Exception as e:
            raise ModelLoadError(f"cannot load dialogue model {model_name!r}: {e}") from None
        self.model.eval().to(device)
        self.is_encoder_decoder = config.is_encoder_decoder
        self.device = device
        self.torch = torch

    def generate(self, prompt: str, p: float, max_new_tokens: int, seed: int,
                 truncate_tokens: Optional[int]) -> str:
        ids = self.tokenizer(prompt, return_tensors="pt").input_ids
        if truncate_tokens is not None:
            ids = ids[:, -truncate_tokens:]
        ids = ids.to(self.device)
        self.torch.manual_seed(seed)
        with self.torch.no_grad():
            output = self.model.generate(
                ids,
                do_sample=True,
                top_p=p,
                max_new_tokens=max_new_tokens,
                pad_token_id=self.tokenizer.pad_token_id or self.tokenizer.eos_token_id,
            )
        if self.is_encoder_decoder:
            new_tokens = output[0]
        else:
            new_tokens = output[0, ids.shape[1]:]
        return self.tokenizer.decode(new_tokens, skip_special_tokens=True).strip()


def normalize_probs(probs: dict[str, float]) -> dict[str, float]:
    """Clamp tiny negatives and renormalize so the simplex contract holds."""
    cleaned = {tag: max(0.0, float(p)) for tag, p in probs.items()}
    total = math.fsum(cleaned.values())
    if total <= 0:
        raise ValueError(f"degenerate probability mass {probs}")
    return {tag: p / total for tag, p in cleaned.items()}
