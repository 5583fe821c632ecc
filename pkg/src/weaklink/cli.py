"""Command-line pipeline: align, build, train, eval, compare, link.

Commands communicate through plain files in a work directory (given by
--workdir or the WEAKLINK_WORKDIR environment variable). Reruns with equal
configuration rewrite byte-identical artifacts; nothing here embeds
timestamps or absolute paths.

Exit codes: 0 success, 1 unreadable or malformed input, 2 degenerate data,
3 unknown name, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .alignment import CASE_INSENSITIVE, CASE_SENSITIVE, align, find_mentions
from .classifier import (DEFAULT_BUCKETS, DEFAULT_GRID_C, DEFAULT_GRID_ETA0,
                         Hyperparams, cross_validate, load_model, make_grid,
                         predict_proba, save_model, train)
from .corpus import load_corpus, naive_tag
from .dataset import (VOCAB_FILE, Sample, build_dataset_from_alignment,
                      export_dataset, import_dataset, mid_item)
from .errors import DataError, InputError, UnknownNameError
from .evaluation import (METRIC_MODES, MICRO, compare_features, metrics,
                         n_sweep_curve, pr_curve, score_groups)
from .features import FAMILIES, FeatureConfig, Vocabulary, extract_items
from .repository import load_repository

ALIGNMENT_FILE = "alignment.json"
MODEL_FILE = "model.txt"
CV_TABLE_FILE = "cv_table.csv"
TRAIN_LOG_FILE = "train_log.csv"
REPORT_FILE = "report.json"
PR_CURVE_FILE = "pr_curve.csv"
PER_COLLECTION_FILE = "per_collection.csv"
COMPARISON_FILE = "comparison.csv"

WORKDIR_ENV = "WEAKLINK_WORKDIR"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DATA = 2
EXIT_DOMAIN = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want 64
        raise UsageError(message)


def _workdir(args) -> Path:
    value = args.workdir or os.environ.get(WORKDIR_ENV)
    if not value:
        raise UsageError(f"no work directory: pass --workdir or set {WORKDIR_ENV}")
    path = Path(value)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _case_policy(args) -> str:
    return CASE_INSENSITIVE if getattr(args, "ignore_case", False) else CASE_SENSITIVE


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(family=args.family, k=args.k,
                         lowercase=getattr(args, "lowercase", False))


def _check_ratio(args) -> float:
    if not 0 < args.ratio < 1:
        raise UsageError("--ratio must be strictly between 0 and 1")
    return args.ratio


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_align(args) -> int:
    workdir = _workdir(args)
    repo = load_repository(args.repo)
    corpus = load_corpus(args.corpus)
    alignment = align(repo, corpus, _case_policy(args))
    payload = {
        "case_policy": _case_policy(args),
        "aligned": alignment.aligned_entities,
        "total": alignment.total_entities,
        "missing_pages": alignment.missing_pages,
        "mentions": {
            mid: [{"page_id": m.sentence.page_id,
                   "sentence_idx": m.sentence.sentence_idx,
                   "start": m.start, "end": m.end}
                  for m in mentions]
            for mid, mentions in sorted(alignment.mentions.items())
        },
    }
    _write_json(workdir / ALIGNMENT_FILE, payload)
    print(alignment.summary())
    return EXIT_OK


def cmd_build(args) -> int:
    workdir = _workdir(args)
    ratio = _check_ratio(args)
    repo = load_repository(args.repo)
    corpus = load_corpus(args.corpus)
    # The alignment cache is informational; building realigns from the
    # inputs so a stale cache can never poison the dataset.
    alignment = align(repo, corpus, _case_policy(args))
    dataset = build_dataset_from_alignment(
        repo, alignment, _feature_config(args), ratio=ratio,
        negatives_per_positive=args.neg_ratio, seed=args.seed,
        max_collections=args.max_collections)
    export_dataset(dataset, workdir)
    c = dataset.counts
    print(f"collections={c['collections']} train={c['train_samples']} "
          f"groups={c['test_groups']} vocab={c['vocab_size']}")
    return EXIT_OK


def _grid(values, fallback):
    return tuple(values) if values else tuple(fallback)


def cmd_train(args) -> int:
    workdir = _workdir(args)
    dataset = import_dataset(workdir)
    samples = list(dataset.train_samples())
    base = Hyperparams(c=1.0, eta0=0.1, decay=args.decay, max_epochs=args.max_epochs,
                       tolerance=args.tolerance, seed=args.seed,
                       full_batch=args.full_batch)
    buckets = args.interaction_buckets

    if args.no_cv:
        chosen = Hyperparams(c=args.c[0] if args.c else 1.0,
                             eta0=args.eta0[0] if args.eta0 else 0.1,
                             decay=base.decay, max_epochs=base.max_epochs,
                             tolerance=base.tolerance, seed=base.seed,
                             full_batch=base.full_batch)
    else:
        grid = make_grid(base, grid_c=_grid(args.c, DEFAULT_GRID_C),
                         grid_eta0=_grid(args.eta0, DEFAULT_GRID_ETA0))
        result = cross_validate(samples, len(dataset.vocab), grid,
                                folds=args.folds, seed=args.seed, buckets=buckets)
        rows = [(f"{cell.c:.17g}", f"{cell.eta0:.17g}", f"{cell.mean_f1:.17g}",
                 int(cell.degenerate),
                 ";".join(f"{f1:.17g}" for f1 in cell.fold_f1))
                for cell in result.cells]
        _write_csv(workdir / CV_TABLE_FILE,
                   ("c", "eta0", "mean_f1", "degenerate", "fold_f1"), rows)
        chosen = result.best

    model = train(dataset, chosen, buckets)
    save_model(model, workdir / MODEL_FILE)
    _write_csv(workdir / TRAIN_LOG_FILE, ("epoch", "objective"),
               [(entry["epoch"], f"{entry['objective']:.17g}")
                for entry in model.train_log])
    print(f"c={chosen.c:g} eta0={chosen.eta0:g} epochs={model.epochs_run} "
          f"objective={model.final_objective:.6g}")
    return EXIT_OK


def cmd_eval(args) -> int:
    workdir = _workdir(args)
    if args.top_n < 1:
        raise UsageError("--top-n must be >= 1")
    dataset = import_dataset(workdir)
    model = load_model(args.model or workdir / MODEL_FILE)
    predictions = score_groups(model, dataset)
    report = metrics(predictions, n=args.top_n, mode=args.metric_mode)
    report.curve = (n_sweep_curve(predictions) if args.sweep == "n"
                    else pr_curve(predictions))

    payload = {
        "n": report.n,
        "mode": report.mode,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "flags": report.flags,
        "model_vocab_sha256": model.vocab_sha256,
        "per_collection": [{"name": r.name, "correct": r.correct,
                            "predicted": r.predicted, "gold": r.gold}
                           for r in report.per_collection],
        "curve": [{"threshold": t, "precision": p, "recall": r}
                  for t, p, r in report.curve],
    }
    _write_json(workdir / REPORT_FILE, payload)
    _write_csv(workdir / PR_CURVE_FILE, ("threshold", "precision", "recall"),
               [(f"{t:.17g}", f"{p:.17g}", f"{r:.17g}") for t, p, r in report.curve])
    _write_csv(workdir / PER_COLLECTION_FILE, ("name", "correct", "predicted", "gold"),
               [(r.name, r.correct, r.predicted, r.gold) for r in report.per_collection])
    print(f"n={report.n} mode={report.mode} precision={report.precision:.4f} "
          f"recall={report.recall:.4f} f1={report.f1:.4f}")
    return EXIT_OK


def _family_slug(family: str) -> str:
    return family.replace("+", "_")


def cmd_compare(args) -> int:
    workdir = _workdir(args)
    ratio = _check_ratio(args)
    repo = load_repository(args.repo)
    corpus = load_corpus(args.corpus)
    families = args.families.split(",") if args.families else list(FAMILIES)
    for family in families:
        if family not in FAMILIES:
            raise UsageError(f"unknown family {family!r}; choose from "
                             f"{','.join(FAMILIES)}")
    hyper = Hyperparams(c=args.c[0] if args.c else 1.0,
                        eta0=args.eta0[0] if args.eta0 else 0.1,
                        max_epochs=args.max_epochs, tolerance=args.tolerance,
                        seed=args.seed)
    rows = compare_features(repo, corpus, seed=args.seed, families=families,
                            lowercase=args.lowercase, ratio=ratio,
                            negatives_per_positive=args.neg_ratio, hyper=hyper,
                            buckets=args.interaction_buckets,
                            case_policy=_case_policy(args),
                            max_collections=args.max_collections)
    _write_csv(workdir / COMPARISON_FILE, ("feature", "k", "avg_f1"),
               [(row.family, row.k, f"{row.avg_f1:.17g}") for row in rows])
    for row in rows:
        _write_csv(workdir / f"pr_{_family_slug(row.family)}_k{row.k}.csv",
                   ("threshold", "precision", "recall"),
                   [(f"{t:.17g}", f"{p:.17g}", f"{r:.17g}")
                    for t, p, r in row.report.curve])
        print(f"{row.family} k={row.k} avg_f1={row.avg_f1:.4f}")
    return EXIT_OK


def _load_link_sentence(args):
    if args.sentence is not None and args.tagged_file is not None:
        raise UsageError("pass either --sentence or --tagged-file, not both")
    if args.tagged_file is not None:
        corpus = load_corpus(args.tagged_file)
        for sentences in corpus.values():
            if sentences:
                return sentences[0]
        raise DataError("tagged file contains no sentences")
    if args.sentence is None or not args.sentence.strip():
        raise UsageError("empty sentence")
    return naive_tag(args.sentence)


def cmd_link(args) -> int:
    workdir = _workdir(args)
    repo = load_repository(args.repo)
    model = load_model(args.model or workdir / MODEL_FILE)
    vocab = Vocabulary.load(workdir / VOCAB_FILE)
    if vocab.sha256() != model.vocab_sha256:
        raise DataError("model was trained against a different vocabulary")

    policy = _case_policy(args)
    name = args.name
    candidates = repo.name_index.get(name)
    if candidates is None and policy == CASE_INSENSITIVE:
        folded = {n.lower(): n for n in repo.name_index}
        actual = folded.get(name.lower())
        if actual is not None:
            name = actual
            candidates = repo.name_index[actual]
    if candidates is None:
        raise UnknownNameError(f"unknown name {args.name!r} "
                               "(NIL handling out of scope)")

    sentence = _load_link_sentence(args)
    mentions = find_mentions(sentence, name, policy)
    if not mentions:
        raise DataError(f"the name {name!r} does not occur in the sentence")

    config = FeatureConfig(family=model.family, k=model.k,
                           lowercase=model.lowercase, allow_large_k=True)
    candidate_items = {mid_item(mid) for mid in candidates}
    items = [it for it in extract_items(mentions[0], config)
             if it not in candidate_items]
    ctx = vocab.intern(items, frozen=True)

    scored = []
    for mid in sorted(candidates):
        cand_id = vocab.id_of(mid_item(mid))
        if cand_id is None:
            continue    # candidate never seen in training; cannot be scored
        sample = Sample(context_ids=tuple(i for i in ctx if i != cand_id),
                        mid_id=cand_id, label=0, candidate_mid=mid)
        prob = float(predict_proba(model, [sample])[0])
        scored.append((mid, prob))
    if not scored:
        raise DataError(f"no candidate of {name!r} appears in the model vocabulary")
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    for rank, (mid, prob) in enumerate(scored, start=1):
        print(f"{rank}\t{mid}\t{prob:.6f}")
    return EXIT_OK


def _add_workdir(parser):
    parser.add_argument("--workdir", default=None,
                        help=f"artifact directory (default: ${WORKDIR_ENV})")


def _add_inputs(parser):
    parser.add_argument("--repo", required=True, help="entity repository JSONL")
    parser.add_argument("--corpus", required=True, help="tagged corpus JSONL")
    parser.add_argument("--ignore-case", action="store_true",
                        help="case-insensitive name matching")


def _add_feature_flags(parser):
    parser.add_argument("--family", default="bow", choices=FAMILIES,
                        help="feature family (default bow)")
    parser.add_argument("--k", type=int, default=1, choices=(1, 2, 3),
                        help="context window size (default 1)")
    parser.add_argument("--lowercase", action="store_true",
                        help="lowercase words before rendering items")


def _add_build_flags(parser):
    parser.add_argument("--ratio", type=float, default=0.8,
                        help="train share of mentions per mid (default 0.8)")
    parser.add_argument("--neg-ratio", type=int, default=1, dest="neg_ratio",
                        help="negatives per positive (default 1)")
    parser.add_argument("--seed", type=int, default=0, help="master RNG seed")
    parser.add_argument("--max-collections", type=int, default=None,
                        help="cap on the number of name collections")


def _add_train_flags(parser):
    parser.add_argument("--c", type=float, action="append",
                        help="inverse-regularization value (repeat for a grid)")
    parser.add_argument("--eta0", type=float, action="append",
                        help="initial learning rate (repeat for a grid)")
    parser.add_argument("--max-epochs", type=int, default=200)
    parser.add_argument("--tolerance", type=float, default=1e-6)
    parser.add_argument("--interaction-buckets", type=int, default=DEFAULT_BUCKETS,
                        help="hashed candidate-context conjunction buckets "
                             "(0 disables the expansion)")


def build_parser() -> Parser:
    parser = Parser(prog="weaklink",
                    description="distantly supervised entity linking toolkit")
    parser.add_argument("--version", action="version",
                        version=f"weaklink {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("align", parents=[], help="align repository to corpus")
    _add_inputs(p)
    _add_workdir(p)
    p.set_defaults(handler=cmd_align)

    p = sub.add_parser("build", help="build the weakly labeled dataset")
    _add_inputs(p)
    _add_workdir(p)
    _add_feature_flags(p)
    _add_build_flags(p)
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser("train", help="cross-validate and fit the classifier")
    _add_workdir(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decay", type=float, default=1.0)
    p.add_argument("--full-batch", action="store_true",
                   help="deterministic full-batch optimizer")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--no-cv", action="store_true",
                   help="skip cross-validation; use the first --c/--eta0")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="score test groups and report metrics")
    _add_workdir(p)
    p.add_argument("--model", default=None, help="model file (default workdir)")
    p.add_argument("--top-n", type=int, default=1, dest="top_n")
    p.add_argument("--metric-mode", default=MICRO, choices=METRIC_MODES,
                   dest="metric_mode")
    p.add_argument("--sweep", default="threshold", choices=("threshold", "n"),
                   help="PR curve sweep variable")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("compare", help="run every feature configuration")
    _add_inputs(p)
    _add_workdir(p)
    _add_build_flags(p)
    _add_train_flags(p)
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--families", default=None,
                   help="comma-separated family subset (default: all four)")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("link", help="rank candidates for a new mention")
    p.add_argument("--repo", required=True)
    p.add_argument("--ignore-case", action="store_true")
    _add_workdir(p)
    p.add_argument("--model", default=None)
    p.add_argument("--name", required=True, help="surface name to link")
    p.add_argument("--sentence", default=None, help="raw sentence text")
    p.add_argument("--tagged-file", default=None, dest="tagged_file",
                   help="corpus-format file; its first sentence is used")
    p.set_defaults(handler=cmd_link)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:       # --help / --version
        return int(exc.code or 0)
    if getattr(args, "handler", None) is None:
        print("usage error: no command given (try --help)", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnknownNameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
