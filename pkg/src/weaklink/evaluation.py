"""Top-N scoring, precision/recall/F1, PR curves, feature comparison.

Two metric modes. `micro` pools counts over all groups: precision is
correct/selected and recall is correct/golds, each group carrying one gold.
`literal` reproduces the unnormalized per-collection sums of the source
formulas, where precision adds one precision term per collection and recall
divides total correct by the number of collections; either can exceed 1 on
multi-group collections, which is why micro is the default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alignment import CASE_SENSITIVE, align
from .classifier import (DEFAULT_BUCKETS, Hyperparams, Model, predict_proba,
                         train)
from .dataset import Dataset, build_dataset_from_alignment
from .errors import DataError
from .features import WINDOW_SIZES, FAMILIES, FeatureConfig

MICRO = "micro"
LITERAL = "literal"
METRIC_MODES = (MICRO, LITERAL)


@dataclass(frozen=True)
class GroupPrediction:
    group_id: int
    name: str
    gold_mid: str
    ranked: tuple[tuple[str, float], ...]   # (mid, score), score desc, mid asc on ties

    @property
    def candidates(self) -> tuple[str, ...]:
        return tuple(mid for mid, _ in self.ranked)

    @property
    def top_mid(self) -> str:
        return self.ranked[0][0]

    @property
    def top_score(self) -> float:
        return self.ranked[0][1]


@dataclass
class CollectionCounts:
    name: str
    correct: int
    predicted: int
    gold: int


@dataclass
class EvalReport:
    n: int
    mode: str
    precision: float
    recall: float
    f1: float
    per_collection: list[CollectionCounts] = field(default_factory=list)
    curve: list[tuple[float, float, float]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


def harmonic_f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_groups(model: Model, dataset: Dataset) -> list[GroupPrediction]:
    """Rank every test group's candidates by probability. The model must
    have been trained against this dataset's exact vocabulary."""
    if model.vocab_sha256 != dataset.vocab.sha256():
        raise DataError("model vocabulary hash does not match the dataset; "
                        "retrain or rebuild with matching artifacts")
    predictions = []
    for group in dataset.test_groups():
        probs = predict_proba(model, group.samples)
        ranked = sorted(
            ((s.candidate_mid, float(p)) for s, p in zip(group.samples, probs)),
            key=lambda pair: (-pair[1], pair[0]))
        predictions.append(GroupPrediction(group_id=group.group_id, name=group.name,
                                           gold_mid=group.gold_mid,
                                           ranked=tuple(ranked)))
    return predictions


def top_n(predictions, n: int) -> dict[int, tuple[str, ...]]:
    """First min(n, |candidates|) mids of each ranking, keyed by group."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return {p.group_id: tuple(mid for mid, _ in p.ranked[:n]) for p in predictions}


def metrics(predictions, n: int = 1, mode: str = MICRO,
            selections: dict[int, tuple[str, ...]] | None = None) -> EvalReport:
    """Aggregate P/R/F1 for the given selections (default: Top-n)."""
    if mode not in METRIC_MODES:
        raise ValueError(f"mode must be one of {METRIC_MODES}")
    if selections is None:
        selections = top_n(predictions, n)
    rows: dict[str, CollectionCounts] = {}
    for p in predictions:
        row = rows.setdefault(p.name, CollectionCounts(p.name, 0, 0, 0))
        chosen = selections.get(p.group_id, ())
        row.gold += 1
        row.predicted += len(chosen)
        row.correct += int(p.gold_mid in chosen)
    per_collection = [rows[name] for name in sorted(rows)]

    flags: list[str] = []
    total_correct = sum(r.correct for r in per_collection)
    total_predicted = sum(r.predicted for r in per_collection)
    total_gold = sum(r.gold for r in per_collection)
    if mode == MICRO:
        if total_predicted == 0:
            precision = 0.0
            flags.append("zero_selections")
        else:
            precision = total_correct / total_predicted
        recall = total_correct / total_gold if total_gold else 0.0
    else:
        precision = 0.0
        for row in per_collection:
            if row.predicted == 0:
                flags.append(f"zero_selections:{row.name}")
            else:
                precision += row.correct / row.predicted
        recall = total_correct / len(per_collection) if per_collection else 0.0
    return EvalReport(n=n, mode=mode, precision=precision, recall=recall,
                      f1=harmonic_f1(precision, recall),
                      per_collection=per_collection, flags=flags)


def pr_curve(predictions, thresholds=None) -> list[tuple[float, float, float]]:
    """Micro P/R of the Top-1 prediction as the acceptance threshold falls.

    A group counts as predicted iff its top score is >= the threshold.
    Default thresholds are the distinct top scores, so the last point is the
    plain Top-1 operating point.
    """
    predictions = list(predictions)
    if not predictions:
        return []
    tops = [(p.top_score, p.top_mid == p.gold_mid) for p in predictions]
    if thresholds is None:
        thresholds = sorted({score for score, _ in tops}, reverse=True)
    else:
        thresholds = sorted(thresholds, reverse=True)
    total = len(tops)
    points = []
    for t in thresholds:
        attempted = [ok for score, ok in tops if score >= t]
        correct = sum(attempted)
        precision = correct / len(attempted) if attempted else 0.0
        points.append((t, precision, correct / total))
    return points


def n_sweep_curve(predictions) -> list[tuple[float, float, float]]:
    """Alternative sweep: (n, precision, recall) for n = 1..max candidates."""
    predictions = list(predictions)
    if not predictions:
        return []
    widest = max(len(p.ranked) for p in predictions)
    points = []
    for n in range(1, widest + 1):
        report = metrics(predictions, n=n, mode=MICRO)
        points.append((float(n), report.precision, report.recall))
    return points


@dataclass
class ComparisonRow:
    family: str
    k: int
    avg_f1: float
    report: EvalReport
    predictions: list[GroupPrediction] = field(repr=False, default_factory=list)


def compare_features(repo, corpus, seed: int = 0, families=FAMILIES,
                     window_sizes=WINDOW_SIZES, lowercase: bool = False,
                     ratio: float = 0.8, negatives_per_positive: int = 1,
                     hyper: Hyperparams | None = None,
                     buckets: int = DEFAULT_BUCKETS,
                     case_policy: str = CASE_SENSITIVE,
                     max_collections: int | None = None) -> list[ComparisonRow]:
    """One pipeline run per (family, k). The alignment is computed once and
    the split RNG never looks at the feature config, so every run sees the
    same train/test mention partition; avg_f1 is the micro Top-1 F1."""
    alignment = align(repo, corpus, case_policy)
    hyper = hyper or Hyperparams()
    rows = []
    for family in families:
        for k in window_sizes:
            config = FeatureConfig(family=family, k=k, lowercase=lowercase)
            dataset = build_dataset_from_alignment(
                repo, alignment, config, ratio=ratio,
                negatives_per_positive=negatives_per_positive, seed=seed,
                max_collections=max_collections)
            model = train(dataset, hyper, buckets)
            predictions = score_groups(model, dataset)
            report = metrics(predictions, n=1, mode=MICRO)
            report.curve = pr_curve(predictions)
            rows.append(ComparisonRow(family=family, k=k, avg_f1=report.f1,
                                      report=report, predictions=predictions))
    return rows
