import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nli_diversity.backend import MockEmbeddingBackend, MockNLIBackend, NLILabel, NLIResult, PairwiseNLIMatrix
from nli_diversity.cache import CachingNLIBackend
from nli_diversity.errors import (
    DegenerateEmbeddingError,
    InsufficientResponsesError,
    ItemValidationError,
    UndefinedMetricError,
)
from nli_diversity.metrics import (
    DistinctNEvaluator,
    EmbeddingDiversityEvaluator,
    NLIDiversityEvaluator,
    baseline_nli_diversity,
    confidence_contribution,
    confidence_nli_diversity,
    distinct_n,
    embedding_diversity,
    empirical_threshold,
    neutral_nli_diversity,
    nli_counts,
)

from conftest import matrix_from_labels, random_matrix, random_table

C, N, E = NLILabel.CONTRADICTION, NLILabel.NEUTRAL, NLILabel.ENTAILMENT


class TestMatrixValidation:
    def test_missing_pair_rejected(self):
        entries = {(0, 1): NLIResult.from_label(C, 0.9)}
        with pytest.raises(ItemValidationError):
            PairwiseNLIMatrix(n=2, entries=entries)

    def test_diagonal_rejected(self):
        entries = {
            (0, 1): NLIResult.from_label(C, 0.9),
            (1, 0): NLIResult.from_label(C, 0.9),
            (0, 0): NLIResult.from_label(E, 0.9),
        }
        with pytest.raises(ItemValidationError):
            PairwiseNLIMatrix(n=2, entries=entries)


class TestNLIMetrics:
    def test_worked_example_counts(self, fig1_matrix):
        assert nli_counts(fig1_matrix) == (2, 3, 1)

    def test_worked_example_baseline(self, fig1_matrix):
        # (2 x 1) + (3 x 0) + (1 x -1) = 1
        assert baseline_nli_diversity(fig1_matrix).value == 1.0

    def test_worked_example_neutral_variant(self, fig1_matrix):
        # weights (+1, +1, -1): 2 + 3 - 1 = 4
        assert neutral_nli_diversity(fig1_matrix).value == 4.0

    def test_all_entailment_lower_bound(self):
        matrix = matrix_from_labels([E] * 20)
        assert matrix.n == 5
        assert baseline_nli_diversity(matrix).value == -20.0
        assert nli_counts(matrix) == (0, 0, 20)

    def test_all_neutral_upper_bound_for_neutral_variant(self):
        matrix = matrix_from_labels([N] * 20)
        assert neutral_nli_diversity(matrix).value == 20.0

    def test_three_response_fixture(self):
        matrix = matrix_from_labels([C, C, N, E, N, C])
        counts = nli_counts(matrix)
        assert counts == (3, 2, 1)
        assert baseline_nli_diversity(matrix).value == 2.0  # 3 - 1
        assert neutral_nli_diversity(matrix).value == 4.0  # 3 + 2 - 1

    def test_counts_attached_to_scores(self, fig1_matrix):
        for scorer in (baseline_nli_diversity, neutral_nli_diversity, confidence_nli_diversity):
            score = scorer(fig1_matrix)
            assert score.counts == (2, 3, 1)
            total = score.counts.contradiction + score.counts.neutral + score.counts.entailment
            assert total == fig1_matrix.n * (fig1_matrix.n - 1)


class TestConfidenceMetric:
    def test_single_pair_contribution(self):
        result = NLIResult.from_probs(0.6, 0.3, 0.1)
        assert result.predicted is C
        assert confidence_contribution(result) == 0.6

    def test_all_neutral_is_zero_regardless_of_confidence(self):
        entries = {}
        rng = random.Random(0)
        for i in range(4):
            for j in range(4):
                if i != j:
                    entries[(i, j)] = NLIResult.from_label(N, rng.uniform(0.5, 0.99))
        matrix = PairwiseNLIMatrix(n=4, entries=entries)
        assert confidence_nli_diversity(matrix).value == 0.0

    def test_two_response_hand_sum(self):
        entries = {
            (0, 1): NLIResult.from_label(C, 0.9),
            (1, 0): NLIResult.from_label(E, 0.8),
        }
        matrix = PairwiseNLIMatrix(n=2, entries=entries)
        assert confidence_nli_diversity(matrix).value == pytest.approx(0.1, abs=1e-12)

    def test_sign_coupling_and_magnitude(self):
        rng = random.Random(42)
        for _ in range(100):
            matrix = random_matrix(rng, rng.randint(2, 6))
            for result in matrix.entries.values():
                contribution = confidence_contribution(result)
                if result.predicted is N:
                    assert contribution == 0.0
                elif result.predicted is C:
                    assert 1 / 3 - 1e-9 <= contribution <= 1.0
                else:
                    assert -1.0 <= contribution <= -(1 / 3) + 1e-9

    def test_monotonicity_flip_entailment_to_contradiction(self):
        rng = random.Random(7)
        matrix = random_matrix(rng, 4)
        flip_key = next(iter(sorted(matrix.entries)))
        entries_e = dict(matrix.entries)
        entries_e[flip_key] = NLIResult.from_label(E, 0.9)
        entries_c = dict(matrix.entries)
        entries_c[flip_key] = NLIResult.from_label(C, 0.9)
        low = baseline_nli_diversity(PairwiseNLIMatrix(n=4, entries=entries_e)).value
        high = baseline_nli_diversity(PairwiseNLIMatrix(n=4, entries=entries_c)).value
        assert high - low == 2.0


label_lists = st.integers(min_value=2, max_value=7).flatmap(
    lambda n: st.lists(
        st.sampled_from([C, N, E]), min_size=n * (n - 1), max_size=n * (n - 1)
    )
)


class TestNLIProperties:
    @given(label_lists)
    @settings(max_examples=200, deadline=None)
    def test_identities_hold_exactly(self, labels):
        matrix = matrix_from_labels(labels)
        counts = nli_counts(matrix)
        assert baseline_nli_diversity(matrix).value == counts.contradiction - counts.entailment
        assert (
            neutral_nli_diversity(matrix).value
            == counts.contradiction + counts.neutral - counts.entailment
        )

    @given(label_lists)
    @settings(max_examples=100, deadline=None)
    def test_bounds(self, labels):
        matrix = matrix_from_labels(labels)
        cap = matrix.n * (matrix.n - 1)
        for scorer in (baseline_nli_diversity, neutral_nli_diversity, confidence_nli_diversity):
            assert -cap <= scorer(matrix).value <= cap

    def test_permutation_invariance_of_evaluator(self):
        rng = random.Random(11)
        responses = [f"resp {i}" for i in range(5)]
        evaluator = NLIDiversityEvaluator(
            CachingNLIBackend(MockNLIBackend(random_table(rng, responses))),
            variant="confidence_nli",
        )
        reference = evaluator.score(responses).value
        for _ in range(10):
            shuffled = responses[:]
            rng.shuffle(shuffled)
            assert evaluator.score(shuffled).value == reference


class TestDistinctN:
    def test_all_distinct(self):
        assert distinct_n(["a b", "c d"]) == 1.0

    def test_repeats_hand_count(self):
        # unigrams 2/4, bigrams 1/2, orders 3..5 empty and skipped
        assert distinct_n(["a b", "a b"]) == 0.5

    def test_lowercasing(self):
        assert distinct_n(["A B", "a b"]) == 0.5

    def test_custom_orders(self):
        # unigrams 2/4 only
        assert distinct_n(["x y", "x y"], n_values=(1,)) == 0.5

    def test_empty_responses_undefined(self):
        with pytest.raises(UndefinedMetricError):
            distinct_n([])
        with pytest.raises(UndefinedMetricError):
            distinct_n(["", "  "])

    def test_all_orders_empty_undefined(self):
        with pytest.raises(UndefinedMetricError):
            distinct_n(["a b"], n_values=(5,))

    @given(st.lists(st.text(alphabet="ab ", min_size=1, max_size=12), min_size=1, max_size=6))
    @settings(max_examples=100, deadline=None)
    def test_bounds_and_permutation_invariance(self, responses):
        try:
            value = distinct_n(responses)
        except UndefinedMetricError:
            return
        assert 0.0 < value <= 1.0
        shuffled = responses[:]
        random.Random(0).shuffle(shuffled)
        assert distinct_n(shuffled) == value


class TestEmbeddingDiversity:
    def test_identical_responses_score_minus_one(self):
        backend = MockEmbeddingBackend(dim=8)
        assert embedding_diversity(["same", "same", "same"], backend) == pytest.approx(-1.0)

    def test_orthogonal_vectors_score_zero(self):
        backend = MockEmbeddingBackend(
            vector_table={"x": [1.0, 0.0], "y": [0.0, 2.0]}
        )
        assert embedding_diversity(["x", "y"], backend) == 0.0

    def test_three_vector_hand_computation(self):
        backend = MockEmbeddingBackend(
            vector_table={"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [1.0, 1.0]}
        )
        # cosines: (a,b) = 0, (a,c) = (b,c) = 1/sqrt(2); mean negative = -sqrt(2)/3
        expected = -(0.0 + 2 / math.sqrt(2)) / 3
        assert embedding_diversity(["a", "b", "c"], backend) == pytest.approx(expected, abs=1e-12)

    def test_range(self):
        backend = MockEmbeddingBackend(dim=16)
        value = embedding_diversity([f"text {i}" for i in range(6)], backend)
        assert -1.0 <= value <= 1.0

    def test_zero_norm_names_index(self):
        backend = MockEmbeddingBackend(vector_table={"bad": [0.0, 0.0]})
        with pytest.raises(DegenerateEmbeddingError) as err:
            embedding_diversity(["fine", "bad"], backend)
        assert err.value.index == 1

    def test_needs_two_responses(self):
        with pytest.raises(InsufficientResponsesError):
            embedding_diversity(["solo"], MockEmbeddingBackend())


class TestEmpiricalThreshold:
    def test_constant_list(self):
        assert empirical_threshold([0.7] * 9, 90) == 0.7

    def test_nearest_rank_rule(self):
        # ceil(0.9 * 10) = 9 -> 9th order statistic
        assert empirical_threshold(list(range(1, 11)), 90) == 9
        # ceil(0.25 * 10) = 3 -> 3rd order statistic
        assert empirical_threshold(list(range(1, 11)), 25) == 3

    def test_unsorted_input(self):
        assert empirical_threshold([5, 1, 4, 2, 3], 60) == 3

    def test_invalid_inputs(self):
        with pytest.raises(UndefinedMetricError):
            empirical_threshold([], 90)
        with pytest.raises(ValueError):
            empirical_threshold([1.0], 100)


class TestEvaluators:
    def test_nli_evaluator_variants(self, fig1_matrix):
        responses = ["r0", "r1", "r2"]
        table = {}
        for (i, j), result in fig1_matrix.entries.items():
            table[(responses[i], responses[j])] = (result.predicted, result.confidence)
        evaluator = NLIDiversityEvaluator(MockNLIBackend(table), variant="baseline_nli")
        assert evaluator.score(responses).value == 1.0
        assert evaluator.metric == "baseline_nli"

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            NLIDiversityEvaluator(MockNLIBackend(), variant="bogus")

    def test_distinct_evaluator(self):
        score = DistinctNEvaluator().score(["a b", "a b"])
        assert score.value == 0.5
        assert score.counts is None

    def test_embedding_evaluator(self):
        evaluator = EmbeddingDiversityEvaluator(MockEmbeddingBackend())
        assert evaluator.score(["q", "q"]).value == pytest.approx(-1.0)
