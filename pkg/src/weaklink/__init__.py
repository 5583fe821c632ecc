"""weaklink: distantly supervised entity linking.

Aligns a disambiguated knowledge repository to topic-equivalent pages,
harvests weakly labeled mention contexts, trains one sparse logistic
regression over label-as-feature samples, and evaluates Top-N linking.
"""

__version__ = "0.1.0"

from .alignment import CASE_INSENSITIVE, CASE_SENSITIVE, Alignment, Mention, align
from .classifier import (DEFAULT_BUCKETS, Hyperparams, Model, cross_validate,
                         load_model, make_grid, predict_proba, save_model, train)
from .corpus import Corpus, TaggedSentence, TaggedToken, load_corpus, naive_tag, save_corpus
from .dataset import (Collection, Dataset, Sample, TestGroup, build_dataset,
                      export_dataset, import_dataset)
from .errors import DataError, InputError, UnknownNameError, WeaklinkError
from .evaluation import (EvalReport, GroupPrediction, compare_features, metrics,
                         pr_curve, score_groups, top_n)
from .features import FAMILIES, WINDOW_SIZES, FeatureConfig, Vocabulary, extract_items
from .repository import Entity, Repository, ambiguity_histogram, load_repository, save_repository

__all__ = [
    "__version__",
    "CASE_INSENSITIVE", "CASE_SENSITIVE", "Alignment", "Mention", "align",
    "DEFAULT_BUCKETS", "Hyperparams", "Model", "cross_validate", "load_model",
    "make_grid", "predict_proba", "save_model", "train",
    "Corpus", "TaggedSentence", "TaggedToken", "load_corpus", "naive_tag", "save_corpus",
    "Collection", "Dataset", "Sample", "TestGroup", "build_dataset",
    "export_dataset", "import_dataset",
    "DataError", "InputError", "UnknownNameError", "WeaklinkError",
    "EvalReport", "GroupPrediction", "compare_features", "metrics", "pr_curve",
    "score_groups", "top_n",
    "FAMILIES", "WINDOW_SIZES", "FeatureConfig", "Vocabulary", "extract_items",
    "Entity", "Repository", "ambiguity_histogram", "load_repository", "save_repository",
]
