"""annokit: span annotation suggestions, continuous model adjustment, and
annotation-quality metrics for discourse segmentation and classification.

The library is organized around five areas:

  corpus      documents, labelled spans, BIO encoding, corpus files
  tagger      linear-chain CRF suggestion model (train / decode / evaluate)
  adjustment  streamed arrival of annotated texts, retrain/cum/inc strategies
  metrics     unitized agreement (alpha_u), divergence, acceptance rates
  suggest     suggestion lifecycle and simulated annotator replay

plus a recommender service (annokit.service) and a command line interface
(annokit.cli) on top.
"""

from .corpus import (
    DEFAULT_CATEGORIES,
    AnnotationSet,
    Corpus,
    CorpusBuilder,
    Document,
    SpanAnnotation,
    bio_decode,
    bio_encode,
    bio_labels,
    gold_items,
    load_corpus,
    resolve_overlaps,
    save_corpus,
)
from .tagger import (
    FeatureExtractor,
    TaggerModel,
    TrainConfig,
    evaluate_macro_f1,
    evaluate_token_macro_f1,
    load_model,
    predict_spans,
    save_model,
    sequence_score,
    train,
    viterbi,
)
from .metrics import (
    AgreementResult,
    Continuum,
    acceptance_rate,
    alpha_u,
    build_continuum,
    human_machine_agreement,
    intra_agreement,
    jsd,
    label_distribution,
    pairwise_alpha_u,
)
from .adjustment import (
    CUM,
    INC,
    RETRAIN,
    AdjustmentCurve,
    BundleSchedule,
    SyntheticConfig,
    aggregate_runs,
    generate_synthetic_corpus,
    holdout_split,
    make_schedule,
    make_stream,
    run_setup,
    run_strategy,
    write_curve,
)
from .suggest import (
    AnnotatorPolicy,
    ModelRegistry,
    RegisteredModel,
    Suggestion,
    SuggestionStore,
    apply_decision,
    generate_suggestions,
    session_stats,
    simulate_annotator,
)
from .service import AdjustmentSettings, ServiceState, make_server

__version__ = "0.1.0"
