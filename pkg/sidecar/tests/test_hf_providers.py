"""HF provider plumbing, exercised with tiny random-weight checkpoints built
locally (no hub access). Predictions are meaningless; what these tests pin
down is loading, label mapping, tokenization, truncation, seeding, and the
probability contract.
"""

import pytest

transformers = pytest.importorskip("transformers")
torch = pytest.importorskip("torch")

from tokenizers import Tokenizer, models, pre_tokenizers  # noqa: E402

from nli_sidecar.providers import HFBertscore, HFGenerate, HFNLI, ModelLoadError  # noqa: E402

WORDS = ["a", "man", "is", "sleeping", "awake", "the", "dog", "barked",
         "sound", "hello", "there", "friend", "w1", "w2", "w3", "w4", "w5"]


def build_tokenizer():
    vocab = {"<s>": 0, "</s>": 1, "<unk>": 2, "<pad>": 3}
    for i, word in enumerate(WORDS):
        vocab[word] = 4 + i
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    return transformers.PreTrainedTokenizerFast(
        tokenizer_object=tokenizer, unk_token="<unk>", pad_token="<pad>",
        bos_token="<s>", eos_token="</s>"), len(vocab)


@pytest.fixture(scope="module")
def tiny_nli_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny-nli")
    fast, vocab_size = build_tokenizer()
    config = transformers.RobertaConfig(
        vocab_size=vocab_size, hidden_size=32, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=64, max_position_embeddings=64,
        num_labels=3,
        id2label={0: "CONTRADICTION", 1: "NEUTRAL", 2: "ENTAILMENT"},
        label2id={"CONTRADICTION": 0, "NEUTRAL": 1, "ENTAILMENT": 2},
        pad_token_id=3, bos_token_id=0, eos_token_id=1)
    torch.manual_seed(0)
    transformers.RobertaForSequenceClassification(config).save_pretrained(path)
    fast.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="module")
def tiny_causal_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny-causal")
    fast, vocab_size = build_tokenizer()
    config = transformers.GPT2Config(
        vocab_size=vocab_size, n_positions=64, n_embd=32, n_layer=2, n_head=2,
        bos_token_id=0, eos_token_id=1)
    torch.manual_seed(0)
    transformers.GPT2LMHeadModel(config).save_pretrained(path)
    fast.save_pretrained(path)
    return str(path)


class TestHFNLI:
    def test_label_mapping_and_simplex(self, tiny_nli_dir):
        provider = HFNLI(tiny_nli_dir)
        probs = provider.classify("a man is sleeping", "a man is awake")
        assert set(probs) == {"contradiction", "neutral", "entailment"}
        assert abs(sum(probs.values()) - 1.0) <= 1e-6

    def test_deterministic(self, tiny_nli_dir):
        provider = HFNLI(tiny_nli_dir)
        pair = ("the dog barked", "a sound")
        assert provider.classify(*pair) == provider.classify(*pair)

    def test_bad_path_raises_model_load_error(self):
        with pytest.raises(ModelLoadError):
            HFNLI("/nonexistent/checkpoint")


class TestHFGenerate:
    def test_seeded_sampling_reproducible(self, tiny_causal_dir):
        provider = HFGenerate(tiny_causal_dir)
        first = provider.generate("hello there friend", p=0.9, max_new_tokens=8,
                                  seed=11, truncate_tokens=None)
        second = provider.generate("hello there friend", p=0.9, max_new_tokens=8,
                                   seed=11, truncate_tokens=None)
        assert first == second

    def test_truncation_uses_model_native_tokens(self, tiny_causal_dir):
        provider = HFGenerate(tiny_causal_dir)
        long_prompt = " ".join(["w1", "w2", "w3", "w4", "w5"] * 6)
        suffix_prompt = " ".join(long_prompt.split()[-7:])
        truncated = provider.generate(long_prompt, p=0.9, max_new_tokens=6,
                                      seed=4, truncate_tokens=7)
        direct = provider.generate(suffix_prompt, p=0.9, max_new_tokens=6,
                                   seed=4, truncate_tokens=None)
        assert truncated == direct

    def test_max_new_tokens_cap(self, tiny_causal_dir):
        provider = HFGenerate(tiny_causal_dir)
        text = provider.generate("hello there", p=0.9, max_new_tokens=5,
                                 seed=2, truncate_tokens=None)
        assert len(text.split()) <= 5


class TestHFBertscore:
    def test_identity_scores_near_one(self, tiny_nli_dir):
        provider = HFBertscore(tiny_nli_dir)
        score = provider.score("a man is sleeping", ["a man is sleeping", "hello"])
        assert score == pytest.approx(1.0, abs=1e-5)

    def test_score_in_unit_interval(self, tiny_nli_dir):
        provider = HFBertscore(tiny_nli_dir)
        score = provider.score("hello there friend", ["the dog barked"])
        assert 0.0 <= score <= 1.0
