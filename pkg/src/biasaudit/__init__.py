"""biasaudit: measure social bias encoded in labeled text corpora.

Pipeline: ingest labeled articles, train or import embedding spaces,
then quantify group-attribute associations (with permutation tests),
intrinsic similarity quality, political-slice deltas, and per-year trends.
"""

from .corpus import (
    Article,
    Corpus,
    CorpusView,
    Orientation,
    SubLabel,
    TokenizeConfig,
    Vocabulary,
    build_vocab,
    ingest,
    slice_corpus,
    tokenize,
)
from .embeddings import EmbeddingSpace, LookupResult, cosine, load_text, save_text
from .harness import (
    AlgorithmSpec,
    BenchmarkSpec,
    ExperimentPlan,
    ResultTable,
    SliceSpec,
    TemporalResult,
    emit,
    load_plan,
    ols_fit,
    run,
    temporal_run,
)
from .kernels import kernel_mode
from .pooling import (
    PoolAccumulator,
    StreamReport,
    pool_file,
    pool_records,
    read_stream,
    validate_stream,
    write_stream,
)
from .sgns import NegativeTable, TrainConfig, pair_loss_and_grads, subsample_keep_prob, train
from .simeval import (
    SimilarityBenchmark,
    SimilarityResult,
    evaluate,
    load_benchmark,
    rare_token_subset,
    spearman,
)
from .weat import (
    WeatResult,
    WeatTestSpec,
    association_delta,
    builtin_spec,
    cross_algorithm_variance,
    delta_accuracy,
    evaluate_weat,
    load_spec,
    save_spec,
    weat_effect_size,
    weat_p_value,
)

__version__ = "0.1.0"
