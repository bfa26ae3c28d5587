import json
import random

import pytest

from nli_diversity.backend import MockNLIBackend, NLILabel
from nli_diversity.cache import CachingNLIBackend
from nli_diversity.corpus import Conversation, DatasetBundle, Turn
from nli_diversity.errors import (
    ConfigError,
    InsufficientResponsesError,
    ItemValidationError,
    PoolExhaustedError,
)
from nli_diversity.generation import (
    GenerationTrace,
    ThresholdSpec,
    beam_mode_run,
    derive_seed,
    least_contributing_index,
    multiset_overlap,
    run_corpus,
    run_threshold_generation,
)
from nli_diversity.metrics import DiversityScore, LabelCounts, NLIDiversityEvaluator

from conftest import random_table

C, N, E = NLILabel.CONTRADICTION, NLILabel.NEUTRAL, NLILabel.ENTAILMENT


class SequenceSampler:
    """Test sampler that emits a fixed list in order."""

    def __init__(self, responses):
        self.responses = list(responses)
        self._next = 0

    def sample(self, context):
        if self._next >= len(self.responses):
            raise PoolExhaustedError("sequence exhausted")
        response = self.responses[self._next]
        self._next += 1
        return response


def conv(conv_id="conv"):
    return Conversation(conv_id, (Turn("a", "context text"),))


def nli_evaluator(table=None, variant="baseline_nli"):
    return NLIDiversityEvaluator(
        CachingNLIBackend(MockNLIBackend(table)), variant=variant
    )


def contradiction_pairs(*pairs, confidence=0.9):
    return {pair: (C, confidence) for pair in pairs}


class TestThresholdSpec:
    def test_budget_must_cover_initial_set(self):
        with pytest.raises(ItemValidationError):
            ThresholdSpec("baseline_nli", "value_ge", 0, set_size=5, max_samples=4)

    def test_unknown_predicate(self):
        with pytest.raises(ItemValidationError):
            ThresholdSpec("baseline_nli", "count_gt", 0, set_size=5, max_samples=20)

    def test_contradiction_predicate_is_strict(self):
        spec = ThresholdSpec("baseline_nli", "count_contradictions_gt", 10,
                             set_size=5, max_samples=20)
        at_threshold = DiversityScore("baseline_nli", 0.0, LabelCounts(10, 10, 0))
        above = DiversityScore("baseline_nli", 0.0, LabelCounts(11, 9, 0))
        assert not spec.satisfied_by(at_threshold)
        assert spec.satisfied_by(above)

    def test_value_predicate_is_inclusive(self):
        spec = ThresholdSpec("distinct_n", "value_ge", 0.98, set_size=5, max_samples=20)
        assert spec.satisfied_by(DiversityScore("distinct_n", 0.98))
        assert not spec.satisfied_by(DiversityScore("distinct_n", 0.979))

    def test_count_predicate_needs_counts(self):
        spec = ThresholdSpec("distinct_n", "count_contradictions_gt", 10,
                             set_size=5, max_samples=20)
        with pytest.raises(ConfigError):
            spec.satisfied_by(DiversityScore("distinct_n", 0.5))


class TestLeastContributingIndex:
    def test_engineered_unique_maximum(self):
        # removing index 2 leaves the only contradictory pair intact
        responses = ["r0", "r1", "r2"]
        table = contradiction_pairs(("r0", "r1"), ("r1", "r0"))
        assert least_contributing_index(responses, nli_evaluator(table)) == 2

    def test_all_identical_ties_to_zero(self):
        assert least_contributing_index(["same"] * 4, nli_evaluator()) == 0

    def test_matches_brute_force_on_random_tables(self):
        rng = random.Random(123)
        responses = [f"u{i}" for i in range(5)]
        for _ in range(50):
            table = random_table(rng, responses)
            evaluator = nli_evaluator(table)

            def brute_force():
                # independent reimplementation: count labels straight off the table
                best_i, best_score = 0, None
                for i in range(len(responses)):
                    subset = responses[:i] + responses[i + 1:]
                    score = 0
                    for a in subset:
                        for b in subset:
                            if a != b:
                                label = table[(a, b)][0]
                                score += 1 if label is C else (-1 if label is E else 0)
                    if best_score is None or score > best_score:
                        best_i, best_score = i, score
                return best_i

            assert least_contributing_index(responses, evaluator) == brute_force()

    def test_needs_three_responses(self):
        with pytest.raises(InsufficientResponsesError):
            least_contributing_index(["a", "b"], nli_evaluator())


class TestRunThresholdGeneration:
    def test_immediate_satisfaction(self):
        responses = ["a", "b", "c"]
        table = random_table(random.Random(0), responses, labels=[C])
        spec = ThresholdSpec("baseline_nli", "count_contradictions_gt", 2,
                             set_size=3, max_samples=10)
        trace = run_threshold_generation(conv(), SequenceSampler(responses),
                                         spec, nli_evaluator(table))
        assert trace.threshold_met
        assert trace.num_sampled == 3
        assert trace.steps == ()
        assert trace.overlap == 3
        assert trace.initial_set == trace.final_set == ("a", "b", "c")
        assert trace.starting_score == trace.ending_score == 6.0

    def test_one_step_lift_hand_trace(self):
        # initial [a, b, c]: C pairs a<->b and a<->c => 4 contradictions, score 4
        # eviction: drop b or c keeps score 2 (tie -> index 1, remove b)
        # replacement d contradicts a and c both ways => 6 contradictions, score 6
        table = contradiction_pairs(
            ("a", "b"), ("b", "a"), ("a", "c"), ("c", "a"),
            ("a", "d"), ("d", "a"), ("c", "d"), ("d", "c"),
        )
        spec = ThresholdSpec("baseline_nli", "count_contradictions_gt", 4,
                             set_size=3, max_samples=10)
        trace = run_threshold_generation(conv(), SequenceSampler(["a", "b", "c", "d"]),
                                         spec, nli_evaluator(table))
        assert trace.threshold_met
        assert trace.num_sampled == 4
        assert trace.starting_score == 4.0
        assert trace.ending_score == 6.0
        assert len(trace.steps) == 1
        step = trace.steps[0]
        assert (step.removed, step.removed_index, step.replacement) == ("b", 1, "d")
        assert step.score_after == 6.0
        assert trace.final_set == ("a", "d", "c")
        assert trace.overlap == 2

    def test_budget_exhaustion_at_twenty(self):
        # default-neutral backend: no replacement ever helps
        pool = [f"r{i}" for i in range(30)]
        spec = ThresholdSpec("baseline_nli", "count_contradictions_gt", 10,
                             set_size=5, max_samples=20)
        trace = run_threshold_generation(conv(), SequenceSampler(pool),
                                         spec, nli_evaluator())
        assert not trace.threshold_met
        assert trace.num_sampled == 20
        assert len(trace.steps) == 15
        assert not trace.sampler_exhausted
        # ties evict slot 0 every round, so the other initial slots survive
        assert trace.final_set == ("r19", "r1", "r2", "r3", "r4")
        assert trace.overlap == 4

    def test_sampler_exhaustion_recorded(self):
        spec = ThresholdSpec("baseline_nli", "value_ge", 10,
                             set_size=3, max_samples=10)
        trace = run_threshold_generation(conv(), SequenceSampler(["a", "b", "c", "d", "e"]),
                                         spec, nli_evaluator())
        assert trace.sampler_exhausted
        assert not trace.threshold_met
        assert trace.num_sampled == 5

    def test_invariants_on_random_runs(self):
        rng = random.Random(77)
        universe = [f"u{i}" for i in range(12)]
        for trial in range(25):
            table = random_table(rng, universe)
            spec = ThresholdSpec("baseline_nli", "count_contradictions_gt",
                                 rng.randint(2, 10), set_size=4, max_samples=9)
            evaluator = nli_evaluator(table)
            pool = universe[:]
            rng.shuffle(pool)
            trace = run_threshold_generation(conv(), SequenceSampler(pool), spec, evaluator)
            assert len(trace.final_set) == len(trace.initial_set) == 4
            assert trace.num_sampled == 4 + len(trace.steps) <= 9
            assert trace.best_score >= max(trace.starting_score, trace.ending_score) - 1e-12
            final_score = evaluator.score(trace.final_set)
            assert final_score.value == trace.ending_score
            if trace.threshold_met:
                assert spec.satisfied_by(final_score)
            else:
                assert trace.num_sampled == 9 or trace.sampler_exhausted

    def test_cache_limits_backend_calls_per_resample(self):
        # after the initial n(n-1) pairs, each resample costs 2(n-1) new
        # ordered pairs; leave-one-out scoring costs nothing new
        inner = MockNLIBackend()
        evaluator = NLIDiversityEvaluator(CachingNLIBackend(inner))
        spec = ThresholdSpec("baseline_nli", "value_ge", 99, set_size=5, max_samples=8)
        pool = [f"d{i}" for i in range(8)]
        run_threshold_generation(conv(), SequenceSampler(pool), spec, evaluator)
        n = 5
        resamples = 3
        assert inner.classify_calls == n * (n - 1) + resamples * 2 * (n - 1)


class TestBeamMode:
    def test_top_n_already_satisfy(self):
        beams = [f"b{i}" for i in range(1, 26)]
        spec = ThresholdSpec("baseline_nli", "value_ge", -10, set_size=5, max_samples=20)
        trace = beam_mode_run(conv(), beams, spec, nli_evaluator())
        assert trace.threshold_met
        assert trace.final_set == ("b1", "b2", "b3", "b4", "b5")
        assert trace.num_sampled == 5

    def test_single_swap_brings_sixth_beam_in(self):
        # b3 entails everything -> initial score -8; dropping it is uniquely
        # best; b6 contradicts b1 both ways -> 2 contradictions, done
        beams = [f"b{i}" for i in range(1, 26)]
        table = {}
        for other in ("b1", "b2", "b4", "b5"):
            table[("b3", other)] = (E, 0.9)
            table[(other, "b3")] = (E, 0.9)
        table[("b6", "b1")] = (C, 0.9)
        table[("b1", "b6")] = (C, 0.9)
        spec = ThresholdSpec("baseline_nli", "count_contradictions_gt", 1,
                             set_size=5, max_samples=20)
        trace = beam_mode_run(conv(), beams, spec, nli_evaluator(table))
        assert trace.threshold_met
        assert trace.num_sampled == 6
        step = trace.steps[0]
        assert (step.removed, step.removed_index, step.replacement) == ("b3", 2, "b6")
        assert trace.starting_score == -8.0
        assert trace.ending_score == 2.0
        assert trace.final_set == ("b1", "b2", "b6", "b4", "b5")
        assert trace.overlap == 4

    def test_budget_caps_at_s(self):
        beams = [f"b{i}" for i in range(1, 26)]
        spec = ThresholdSpec("baseline_nli", "count_contradictions_gt", 10,
                             set_size=5, max_samples=20)
        trace = beam_mode_run(conv(), beams, spec, nli_evaluator())
        assert not trace.threshold_met
        assert trace.num_sampled == 20

    def test_short_list_records_exhaustion(self):
        spec = ThresholdSpec("baseline_nli", "value_ge", 10, set_size=3, max_samples=20)
        trace = beam_mode_run(conv(), ["b1", "b2", "b3", "b4"], spec, nli_evaluator())
        assert trace.sampler_exhausted
        assert trace.num_sampled == 4


def generation_bundle(n_convs=3):
    items = tuple(
        (Conversation(f"g{i}", (Turn("a", f"context {i}"),)), ())
        for i in range(n_convs)
    )
    return DatasetBundle("gen", "generation_context", items)


def pool_factory(pools):
    from nli_diversity.backend import MockPoolSampler

    def factory(conversation, seed):
        if conversation.id not in pools:
            raise ConfigError(f"no pool for {conversation.id}")
        return MockPoolSampler(pools[conversation.id], seed=seed)

    return factory


class TestRunCorpus:
    SPEC = ThresholdSpec("baseline_nli", "count_contradictions_gt", 1,
                         set_size=3, max_samples=6, trials=2)

    def pools(self):
        return {f"g{i}": [f"g{i}-r{j}" for j in range(8)] for i in range(3)}

    def table(self):
        # each conversation's r0 and r1 contradict, so any set holding both wins
        table = {}
        for i in range(3):
            a, b = f"g{i}-r0", f"g{i}-r1"
            table.update(contradiction_pairs((a, b), (b, a)))
        return table

    def test_summary_means_equal_hand_averages(self):
        bundle = generation_bundle()
        evaluator = nli_evaluator(self.table())
        traces, summary = run_corpus(bundle, pool_factory(self.pools()),
                                     self.SPEC, evaluator, base_seed=3)
        # independent aggregation over per-run traces
        expected = []
        for trial in range(self.SPEC.trials):
            for conversation in bundle.conversations():
                sampler = pool_factory(self.pools())(
                    conversation, derive_seed(3, trial, conversation.id))
                expected.append(run_threshold_generation(
                    conversation, sampler, self.SPEC, evaluator, trial=trial))
        assert [t.to_dict() for t in traces] == [t.to_dict() for t in expected]
        assert summary.n_traces == 6
        assert summary.mean_starting_score == pytest.approx(
            sum(t.starting_score for t in expected) / 6)
        assert summary.mean_ending_score == pytest.approx(
            sum(t.ending_score for t in expected) / 6)
        assert summary.mean_num_sampled == pytest.approx(
            sum(t.num_sampled for t in expected) / 6)
        assert summary.mean_overlap == pytest.approx(
            sum(t.overlap for t in expected) / 6)

    def test_repeat_run_is_identical(self):
        bundle = generation_bundle()
        args = (bundle, pool_factory(self.pools()), self.SPEC)
        traces1, summary1 = run_corpus(*args, nli_evaluator(self.table()), base_seed=9)
        traces2, summary2 = run_corpus(*args, nli_evaluator(self.table()), base_seed=9)
        assert [t.to_dict() for t in traces1] == [t.to_dict() for t in traces2]
        assert summary1.to_dict() == summary2.to_dict()

    def test_immediately_satisfied_corpus(self):
        spec = ThresholdSpec("baseline_nli", "value_ge", -99,
                             set_size=3, max_samples=6, trials=1)
        traces, summary = run_corpus(generation_bundle(), pool_factory(self.pools()),
                                     spec, nli_evaluator(), base_seed=0)
        assert summary.mean_num_sampled == 3.0
        assert summary.mean_overlap == 3.0
        assert summary.threshold_met_fraction == 1.0
        assert all(t.steps == () for t in traces)

    def test_failures_isolated_and_reported(self):
        pools = self.pools()
        del pools["g1"]
        spec = ThresholdSpec("baseline_nli", "value_ge", -99,
                             set_size=3, max_samples=6, trials=1)
        traces, summary = run_corpus(generation_bundle(), pool_factory(pools),
                                     spec, nli_evaluator(), base_seed=0)
        assert summary.n_traces == 2
        assert len(summary.failures) == 1
        assert summary.failures[0].conversation_id == "g1"
        assert "no pool" in summary.failures[0].error

    def test_parallel_matches_serial(self):
        bundle = generation_bundle()
        serial, _ = run_corpus(bundle, pool_factory(self.pools()), self.SPEC,
                               nli_evaluator(self.table()), base_seed=4, jobs=1)
        parallel, _ = run_corpus(bundle, pool_factory(self.pools()), self.SPEC,
                                 nli_evaluator(self.table()), base_seed=4, jobs=3)
        assert [t.to_dict() for t in serial] == [t.to_dict() for t in parallel]


class TestTraceBookkeeping:
    def test_multiset_overlap_counts_duplicates(self):
        assert multiset_overlap(["x", "x", "y"], ["x", "y", "y"]) == 2
        assert multiset_overlap(["a"], ["b"]) == 0
        assert multiset_overlap(["a", "a"], ["a", "a"]) == 2

    def test_derive_seed_documented_rule(self):
        import hashlib

        digest = hashlib.sha256(b"5:2:conv-9").digest()
        assert derive_seed(5, 2, "conv-9") == int.from_bytes(digest[:8], "big")

    def test_trace_json_round_trip(self):
        table = contradiction_pairs(("a", "b"), ("b", "a"))
        spec = ThresholdSpec("baseline_nli", "value_ge", 5, set_size=3, max_samples=4)
        trace = run_threshold_generation(conv(), SequenceSampler(["a", "b", "c", "d"]),
                                         spec, nli_evaluator(table))
        restored = GenerationTrace.from_dict(json.loads(json.dumps(trace.to_dict())))
        assert restored == trace

    def test_trace_validates_num_sampled(self):
        with pytest.raises(ItemValidationError):
            GenerationTrace(
                conversation_id="x", initial_set=("a", "b"), steps=(),
                final_set=("a", "b"), starting_score=0, ending_score=0,
                num_sampled=5, threshold_met=False, overlap=2, best_score=0,
            )
