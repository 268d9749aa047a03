"""Supervised topical key-phrase extraction for news stories."""

from .corpus import (
    CATEGORIES,
    CandidatePhrase,
    Document,
    Sentence,
    Token,
    generate_candidates,
    ingest_corpus,
    segment_and_tokenize,
)
from .preprocess import (
    FilterConfig,
    euclidean_distance,
    light_filter,
    normalize_coreferences,
    sentence_vector,
    support_set,
)
from .ngram_lm import NGramStore, build_model, build_mph
from .features import FeatureVector, Gazetteer, SignalLexicon, assemble, tfidf
from .classifier import Ensemble, Instance, bag_train, extract_top_k, score, train_tree
from .goldstandard import (
    GoldStandard,
    Hit,
    SplitSpec,
    aggregate,
    filter_bad_hits,
    positive_labels,
    split,
)
from .evaluation import dcg, human_baseline_ndcg, ndcg, precision_at_k, run_ablation
from .pipeline import TrainedModel, extract, load_model, save_model, train_model

__version__ = "0.1.0"
