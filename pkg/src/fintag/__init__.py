"""fintag: financial sequence tagging with numeric pseudo-token normalization.

The toolkit covers the full workflow: corpus handling (including a synthetic
generator), subword tokenization with [NUM]/shape pseudo-tokens, IOB2 label
algebra, exact linear-chain CRF inference, a trainable hashed-feature tagger,
entity-level evaluation with Hits@k recommendation metrics, and a CLI plus
HTTP service.
"""

from .corpus import (
    AnnotatedSentence,
    CorpusError,
    CorpusStats,
    FilterReport,
    SyntheticConfig,
    chronological_split,
    compute_stats,
    filter_sentences,
    generate_synthetic,
    load_dataset,
    save_dataset,
    synthetic_labelset,
)
from .crf import (
    CrfError,
    CrfParams,
    TransitionMask,
    iob2_constraint_mask,
    log_partition,
    marginals,
    nll_and_gradient,
    sequence_score,
    viterbi_decode,
)
from .evaluation import (
    EntityScore,
    RunAggregate,
    ablation_harness,
    aggregate_runs,
    entity_prf,
    hits_at_k,
    hits_curve,
    invalid_sequence_report,
)
from .labels import (
    LabelError,
    LabelSet,
    PoolingStrategy,
    Span,
    align_to_subwords,
    collapse_to_words,
    labels_from_spans,
    spans_from_labels,
    validate_iob2,
)
from .tagger import (
    FeatureConfig,
    FingerprintMismatch,
    TaggerModel,
    TrainConfig,
    extract_features,
    load_model,
    predict,
    save_model,
    topk_tags,
    train,
)
from .tokenization import (
    NUM_TOKEN,
    NumericPolicy,
    ShapeVocab,
    SubwordVocab,
    build_subword_vocab,
    detect_number,
    fixture_vocab,
    fragmentation_stats,
    normalize_numeric,
    shape_of,
    wordpiece_tokenize,
)

__version__ = "0.1.0"
