"""L2-regularized logistic regression over sparse binary features.

Written against the primal objective

    f(w) = 0.5 * ||w[1:]||^2 + c * sum_i log(1 + exp(-y_i * w.x_i))

with y in {-1,+1}, x_i the binary indicator vector (coordinate 0 is the
always-on bias, which is not regularized). Larger c means weaker
regularization. Two optimizers are provided: seeded per-sample SGD with the
usual lazy scaling trick, and a deterministic full-batch gradient descent
with step halving whose objective never increases. Both stop on a relative
objective decrease below `tolerance`.

Candidate-context conjunctions: on top of the union encoding the trainer
hashes every (candidate id, context id) pair into a fixed number of extra
buckets. Without them the ranking inside a test group could not depend on
the context at all, because only the candidate feature would differ between
the group's rows. `buckets=0` turns the expansion off.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import expit

from .errors import DataError, InputError

MODEL_MAGIC = "weaklink-model"
MODEL_VERSION = 1

DEFAULT_BUCKETS = 1 << 18
DEFAULT_GRID_C = (0.01, 0.1, 1.0, 10.0)
DEFAULT_GRID_ETA0 = (0.1, 0.01)

_M64 = (1 << 64) - 1

# Smallest per-epoch relative rise treated as divergence rather than noise.
# Measured on small instances: stochastic wobble near the floor stays below
# 4e-3 per epoch while genuinely divergent steps rise by 3e-2 or more.
_RISE_MATERIAL = 1e-2


@dataclass(frozen=True)
class Hyperparams:
    c: float = 1.0
    eta0: float = 0.1
    decay: float = 1.0
    max_epochs: int = 200
    tolerance: float = 1e-6
    seed: int = 0
    full_batch: bool = False

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class Model:
    weights: np.ndarray
    vocab_size: int
    buckets: int
    family: str
    k: int
    lowercase: bool
    vocab_sha256: str
    hyper: Hyperparams
    epochs_run: int = 0
    final_objective: float = float("nan")
    train_log: list[dict] = field(default_factory=list, repr=False)

    @property
    def n_coords(self) -> int:
        return 1 + self.vocab_size + self.buckets


def _mix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def pair_bucket(mid_id: int, ctx_id: int, buckets: int) -> int:
    """Deterministic bucket for a (candidate, context) pair. Pure integer
    arithmetic; never Python's salted hash()."""
    return _mix64(((mid_id & 0xFFFFFFFF) << 32) | (ctx_id & 0xFFFFFFFF)) % buckets


def expand_ids(context_ids, mid_id: int, vocab_size: int, buckets: int) -> list[int]:
    """Column indices for one sample: bias, base features, and the hashed
    conjunction of the candidate with every context id. Ids outside the base
    vocabulary are ignored (out-of-vocabulary inputs score as absent), so an
    all-OOV sample reduces to the bias alone."""
    kept = [i for i in context_ids if 1 <= i <= vocab_size]
    cols = {0}
    cols.update(kept)
    if 1 <= mid_id <= vocab_size:
        cols.add(mid_id)
        if buckets:
            base = 1 + vocab_size
            for cid in kept:
                cols.add(base + pair_bucket(mid_id, cid, buckets))
    return sorted(cols)


def design_matrix(samples, vocab_size: int, buckets: int) -> sparse.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    for s in samples:
        ids = expand_ids(s.context_ids, s.mid_id, vocab_size, buckets)
        indices.extend(ids)
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.float64)
    return sparse.csr_matrix(
        (data, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(samples), 1 + vocab_size + buckets))


def labels_pm1(samples) -> np.ndarray:
    return np.asarray([1.0 if s.label == 1 else -1.0 for s in samples])


def objective(weights: np.ndarray, matrix: sparse.csr_matrix, y: np.ndarray,
              c: float) -> float:
    margins = matrix @ weights
    loss = np.logaddexp(0.0, -y * margins).sum()
    reg = 0.5 * float(np.dot(weights[1:], weights[1:]))
    return reg + c * float(loss)


def gradient(weights: np.ndarray, matrix: sparse.csr_matrix, y: np.ndarray,
             c: float) -> np.ndarray:
    margins = matrix @ weights
    slope = expit(-y * margins)          # sigma(-y m) in (0,1), stable
    grad = c * (matrix.T @ (-y * slope))
    grad = np.asarray(grad).ravel()
    grad[1:] += weights[1:]
    return grad


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _relative_drop(prev: float, cur: float) -> float:
    return (prev - cur) / max(abs(prev), 1e-12)


def fit_weights(samples, vocab_size: int, hyper: Hyperparams,
                buckets: int = DEFAULT_BUCKETS):
    """Optimize and return (weights, train_log, epochs_run, final_objective).

    Raises DataError when the labels are single-class or when the objective
    rises three epochs in a row (step size too large)."""
    if not samples:
        raise DataError("no training samples")
    labels = {s.label for s in samples}
    if labels != {0, 1}:
        raise DataError("degenerate labels: training needs both classes")
    for s in samples:
        if not 1 <= s.mid_id <= vocab_size or any(
                not 1 <= i <= vocab_size for i in s.context_ids):
            raise DataError("training sample has a feature id outside the vocabulary")
    matrix = design_matrix(samples, vocab_size, buckets)
    y = labels_pm1(samples)
    if hyper.full_batch:
        return _fit_full_batch(matrix, y, hyper)
    return _fit_sgd(samples, matrix, y, vocab_size, buckets, hyper)


def _fit_sgd(samples, matrix, y, vocab_size, buckets, hyper):
    n = len(samples)
    ncols = 1 + vocab_size + buckets
    ids_per_sample = [np.asarray([i for i in expand_ids(s.context_ids, s.mid_id,
                                                        vocab_size, buckets) if i > 0],
                                 dtype=np.int64)
                      for s in samples]
    seed_digest = hashlib.sha256(f"{hyper.seed}|sgd".encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(seed_digest[:8], "big"))

    v = np.zeros(ncols)
    bias = 0.0
    scale = 1.0
    log: list[dict] = []
    prev = math.inf
    rises = 0
    epochs_run = 0
    order = list(range(n))
    for epoch in range(hyper.max_epochs):
        eta = hyper.eta0 / (1.0 + hyper.decay * epoch)
        shrink = 1.0 - eta / n
        if shrink <= 0.0:
            raise DataError("step size too large for the regularizer; lower eta0")
        rng.shuffle(order)
        for i in order:
            ids = ids_per_sample[i]
            margin = scale * float(v[ids].sum()) + bias
            g = -y[i] * _sigmoid(-y[i] * margin) * hyper.c
            scale *= shrink
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            if g != 0.0:
                v[ids] -= eta * g / scale
                bias -= eta * g
        v *= scale
        scale = 1.0
        weights = v.copy()
        weights[0] = bias           # v[0] itself stays 0; updates never touch it
        obj = objective(weights, matrix, y, hyper.c)
        epochs_run = epoch + 1
        log.append({"epoch": epoch, "eta": eta, "objective": obj})
        if not math.isfinite(obj):
            raise DataError("objective overflowed; lower eta0")
        # sub-threshold wobble near the floor is noise, not divergence
        drop = _relative_drop(prev, obj) if math.isfinite(prev) else math.inf
        if drop < -max(hyper.tolerance, _RISE_MATERIAL):
            rises += 1
            if rises >= 3:
                raise DataError("objective rose three epochs in a row; lower eta0 "
                                "or raise decay")
        else:
            rises = 0
            if abs(drop) < hyper.tolerance:
                prev = obj
                break
        prev = obj
    final = v.copy()
    final[0] = bias
    return final, log, epochs_run, prev


def _fit_full_batch(matrix, y, hyper):
    ncols = matrix.shape[1]
    w = np.zeros(ncols)
    obj = objective(w, matrix, y, hyper.c)
    eta = hyper.eta0
    log = [{"epoch": -1, "eta": 0.0, "objective": obj}]
    epochs_run = 0
    for epoch in range(hyper.max_epochs):
        grad = gradient(w, matrix, y, hyper.c)
        accepted = False
        for _ in range(60):
            cand = w - eta * grad
            cand_obj = objective(cand, matrix, y, hyper.c)
            if cand_obj <= obj:
                accepted = True
                break
            eta /= 2.0
        if not accepted:
            break
        prev, w, obj = obj, cand, cand_obj
        epochs_run = epoch + 1
        log.append({"epoch": epoch, "eta": eta, "objective": obj})
        eta *= 1.1
        if _relative_drop(prev, obj) < hyper.tolerance:
            break
    return w, log, epochs_run, obj


def train(dataset, hyper: Hyperparams | None = None,
          buckets: int = DEFAULT_BUCKETS) -> Model:
    """Fit on every training sample of the dataset and stamp the model with
    the vocabulary hash so evaluation can reject mismatched artifacts."""
    hyper = hyper or Hyperparams()
    samples = list(dataset.train_samples())
    weights, log, epochs_run, final = fit_weights(samples, len(dataset.vocab),
                                                  hyper, buckets)
    cfg = dataset.config
    return Model(weights=weights, vocab_size=len(dataset.vocab), buckets=buckets,
                 family=cfg.family, k=cfg.k, lowercase=cfg.lowercase,
                 vocab_sha256=dataset.vocab.sha256(), hyper=hyper,
                 epochs_run=epochs_run, final_objective=final, train_log=log)


def margins(model: Model, samples) -> np.ndarray:
    matrix = design_matrix(samples, model.vocab_size, model.buckets)
    return matrix @ model.weights


def predict_proba(model: Model, samples) -> np.ndarray:
    """P(label=1) per sample, clamped inside the open interval so callers
    can take logs of either side."""
    probs = expit(margins(model, samples))
    eps = 1e-15
    return np.clip(probs, eps, 1.0 - eps)


@dataclass
class CVCell:
    c: float
    eta0: float
    fold_f1: list[float]
    mean_f1: float
    degenerate: bool


@dataclass
class CVResult:
    cells: list[CVCell]
    best: Hyperparams
    folds: int
    seed: int


def _binary_f1(labels: np.ndarray, predicted: np.ndarray) -> tuple[float, bool]:
    tp = int(np.sum((predicted == 1) & (labels == 1)))
    fp = int(np.sum((predicted == 1) & (labels == 0)))
    fn = int(np.sum((predicted == 0) & (labels == 1)))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0, True
    return 2.0 * tp / denom, False


def fold_assignments(samples, folds: int, seed: int) -> list[int]:
    """Stratified fold index per sample: each class is shuffled separately
    and dealt round-robin, so class balance is as even as it can get."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    digest = hashlib.sha256(f"{seed}|cv".encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    assignment = [0] * len(samples)
    for label in (1, 0):
        idx = [i for i, s in enumerate(samples) if s.label == label]
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            assignment[i] = j % folds
    return assignment


def make_grid(base: Hyperparams | None = None, grid_c=DEFAULT_GRID_C,
              grid_eta0=DEFAULT_GRID_ETA0) -> list[Hyperparams]:
    base = base or Hyperparams()
    return [replace(base, c=c, eta0=eta0) for c in grid_c for eta0 in grid_eta0]


def cross_validate(samples, vocab_size: int, grid=None, folds: int = 5,
                   seed: int = 0, buckets: int = DEFAULT_BUCKETS) -> CVResult:
    """Grid search by mean fold F1 at threshold 0.5. Ties prefer the
    smaller c, then the earlier grid entry."""
    grid = list(grid) if grid is not None else make_grid()
    if not grid:
        raise ValueError("empty hyperparameter grid")
    samples = list(samples)
    if len(samples) < folds:
        raise DataError(f"need at least {folds} samples for {folds}-fold validation")
    assignment = fold_assignments(samples, folds, seed)
    labels = np.asarray([s.label for s in samples])

    cells: list[CVCell] = []
    for hyper in grid:
        fold_scores: list[float] = []
        degenerate = False
        for fold in range(folds):
            train_part = [s for s, a in zip(samples, assignment) if a != fold]
            test_idx = [i for i, a in enumerate(assignment) if a == fold]
            if not test_idx:
                continue
            weights, _, _, _ = fit_weights(train_part, vocab_size, hyper, buckets)
            test_part = [samples[i] for i in test_idx]
            matrix = design_matrix(test_part, vocab_size, buckets)
            probs = expit(matrix @ weights)
            predicted = (probs >= 0.5).astype(int)
            f1, degen = _binary_f1(labels[test_idx], predicted)
            fold_scores.append(f1)
            degenerate = degenerate or degen
        mean = float(np.mean(fold_scores)) if fold_scores else 0.0
        cells.append(CVCell(c=hyper.c, eta0=hyper.eta0, fold_f1=fold_scores,
                            mean_f1=mean, degenerate=degenerate))

    ranked = sorted(range(len(cells)),
                    key=lambda i: (-cells[i].mean_f1, cells[i].c, i))
    return CVResult(cells=cells, best=grid[ranked[0]], folds=folds, seed=seed)


def save_model(model: Model, path) -> None:
    """Plain-text weights: a magic line, sorted header keys, an explicit
    line count, then `id value` pairs (bias first, then nonzero ids
    ascending) printed with %.17g so floats round-trip exactly."""
    path = Path(path)
    header = {
        "buckets": model.buckets,
        "c": f"{model.hyper.c:.17g}",
        "decay": f"{model.hyper.decay:.17g}",
        "epochs_run": model.epochs_run,
        "eta0": f"{model.hyper.eta0:.17g}",
        "family": model.family,
        "final_objective": f"{model.final_objective:.17g}",
        "full_batch": int(model.hyper.full_batch),
        "k": model.k,
        "lowercase": int(model.lowercase),
        "max_epochs": model.hyper.max_epochs,
        "seed": model.hyper.seed,
        "tolerance": f"{model.hyper.tolerance:.17g}",
        "vocab_sha256": model.vocab_sha256,
        "vocab_size": model.vocab_size,
    }
    nonzero = np.nonzero(model.weights[1:])[0] + 1
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MODEL_MAGIC} {MODEL_VERSION}\n")
        for key in sorted(header):
            fh.write(f"{key} {header[key]}\n")
        fh.write(f"nweights {len(nonzero) + 1}\n")
        fh.write(f"0 {model.weights[0]:.17g}\n")
        for idx in nonzero:
            fh.write(f"{idx} {model.weights[idx]:.17g}\n")


def load_model(path, vocab=None) -> Model:
    """Parse a saved model; with `vocab` given, refuse one whose recorded
    hash does not match that vocabulary."""
    path = Path(path)
    if not path.exists():
        raise InputError("model file not found", path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split() != [MODEL_MAGIC, str(MODEL_VERSION)]:
        raise InputError(f"expected magic line '{MODEL_MAGIC} {MODEL_VERSION}'", path, 1)
    header: dict[str, str] = {}
    cursor = 1
    nweights = None
    for cursor in range(1, len(lines)):
        parts = lines[cursor].split(None, 1)
        if len(parts) != 2:
            raise InputError("malformed header line", path, cursor + 1)
        key, value = parts
        if key == "nweights":
            try:
                nweights = int(value)
            except ValueError as exc:
                raise InputError("bad nweights", path, cursor + 1) from exc
            break
        header[key] = value
    if nweights is None:
        raise InputError("missing nweights line", path)
    required = ("buckets", "vocab_size", "vocab_sha256", "family", "k", "lowercase")
    for key in required:
        if key not in header:
            raise InputError(f"missing header key {key!r}", path)
    if vocab is not None and vocab.sha256() != header["vocab_sha256"]:
        raise InputError("model hash does not match the given vocabulary", path)

    vocab_size = int(header["vocab_size"])
    buckets = int(header["buckets"])
    weights = np.zeros(1 + vocab_size + buckets)
    body = lines[cursor + 1:]
    if len(body) < nweights:
        raise InputError(f"truncated weights: expected {nweights} lines, found "
                         f"{len(body)}", path)
    if len(body) > nweights:
        raise InputError("trailing content after the declared weights", path,
                         cursor + 1 + nweights + 1)
    seen_bias = False
    for offset, line in enumerate(body):
        lineno = cursor + 2 + offset
        parts = line.split()
        if len(parts) != 2:
            raise InputError("weight lines are '<id> <value>'", path, lineno)
        try:
            idx = int(parts[0])
            value = float(parts[1])
        except ValueError as exc:
            raise InputError("bad weight line", path, lineno) from exc
        if offset == 0:
            if idx != 0:
                raise InputError("first weight line must be the bias (id 0)", path, lineno)
            seen_bias = True
        if not 0 <= idx < len(weights):
            raise InputError(f"weight id {idx} outside the declared shape", path, lineno)
        weights[idx] = value
    if not seen_bias:
        raise InputError("bias line missing", path)

    hyper = Hyperparams(
        c=float(header.get("c", 1.0)),
        eta0=float(header.get("eta0", 0.1)),
        decay=float(header.get("decay", 1.0)),
        max_epochs=int(header.get("max_epochs", 200)),
        tolerance=float(header.get("tolerance", 1e-6)),
        seed=int(header.get("seed", 0)),
        full_batch=bool(int(header.get("full_batch", 0))),
    )
    return Model(weights=weights, vocab_size=vocab_size, buckets=buckets,
                 family=header["family"], k=int(header["k"]),
                 lowercase=bool(int(header["lowercase"])),
                 vocab_sha256=header["vocab_sha256"], hyper=hyper,
                 epochs_run=int(header.get("epochs_run", 0)),
                 final_objective=float(header.get("final_objective", "nan")))
