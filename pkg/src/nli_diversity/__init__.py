"""Toolkit for measuring and improving the semantic diversity of dialogue
response sets with NLI-model predictions."""

__version__ = "0.1.0"

from .backend import (
    BackendDescriptor,
    MockBackend,
    MockEmbeddingBackend,
    MockNLIBackend,
    MockPoolSampler,
    MockScoringBackend,
    NLILabel,
    NLIResult,
    PairwiseNLIMatrix,
    RankedListSampler,
    RemoteBackend,
    RemoteSampler,
    SamplingParams,
    classify_all_ordered_pairs,
)
from .cache import CachingNLIBackend, PairwiseCache
from .corpus import (
    Conversation,
    CsvSchema,
    DatasetBundle,
    ResponseSet,
    Turn,
    load_diversity_eval_csv,
    load_multi_reference,
    load_normalized,
    split_at_random_turn,
    truncate_context,
    write_normalized,
)
from .evaluation import (
    BootstrapSpec,
    CorrelationReport,
    HistogramExport,
    bootstrap_ci,
    correlate_metric,
    export_histogram,
    spearman_rho,
)
from .generation import (
    CorpusSummary,
    GenerationStep,
    GenerationTrace,
    ThresholdSpec,
    beam_mode_run,
    derive_seed,
    least_contributing_index,
    multiset_overlap,
    run_corpus,
    run_threshold_generation,
)
from .metrics import (
    DistinctNEvaluator,
    DiversityScore,
    EmbeddingDiversityEvaluator,
    LabelCounts,
    NLIDiversityEvaluator,
    baseline_nli_diversity,
    confidence_nli_diversity,
    distinct_n,
    embedding_diversity,
    empirical_threshold,
    neutral_nli_diversity,
    nli_counts,
)
from .relevancy import RelevancyReport, bleu_multi_ref, set_relevancy
