"""Weakly labeled dataset construction.

Positive samples pair a mention's context features with the feature of its
own machine identifier; negatives pair contexts drawn from same-named
sibling entities with that identifier, label 0. Per ambiguous name the
aligned mentions are split train/test; held-out mentions become test groups
crossed with every candidate identifier of the name.

Feature ids are assigned by a two-pass scheme (collect every training item,
then number the sorted items 1..n) so the dataset is byte-reproducible no
matter how collections are processed.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .alignment import CASE_SENSITIVE, Alignment, Mention, align
from .corpus import Corpus
from .errors import DataError, InputError
from .features import FeatureConfig, Vocabulary, context_window, extract_items
from .repository import Repository

MID_PREFIX = "MID:"

TRAIN_FILE = "train.txt"
TEST_FILE = "test.txt"
VOCAB_FILE = "vocab.tsv"
MANIFEST_FILE = "manifest.json"


def mid_item(mid: str) -> str:
    return MID_PREFIX + mid


@dataclass(frozen=True)
class Provenance:
    name: str
    source_mid: str
    page_id: str
    sentence_idx: int
    start: int
    end: int

    @classmethod
    def of(cls, mention: Mention, name: str, source_mid: str) -> "Provenance":
        return cls(name=name, source_mid=source_mid, page_id=mention.sentence.page_id,
                   sentence_idx=mention.sentence.sentence_idx,
                   start=mention.start, end=mention.end)

    @property
    def mention_key(self):
        return (self.page_id, self.sentence_idx, self.start, self.end)


@dataclass
class Sample:
    context_ids: tuple[int, ...]
    mid_id: int
    label: int
    candidate_mid: str
    provenance: Provenance | None = None

    def __post_init__(self):
        if self.mid_id in self.context_ids:
            raise ValueError("candidate id leaked into the context vector")
        if self.provenance is not None:
            if self.label != int(self.candidate_mid == self.provenance.source_mid):
                raise ValueError("label inconsistent with candidate/source mids")

    @property
    def feature_ids(self) -> tuple[int, ...]:
        merged = sorted(self.context_ids + (self.mid_id,))
        return tuple(merged)


@dataclass
class TestGroup:
    group_id: int
    name: str
    gold_mid: str
    candidates: tuple[str, ...]
    samples: list[Sample]


@dataclass
class Collection:
    name: str
    candidate_mids: tuple[str, ...]
    train: list[Sample]
    test: list[TestGroup]


@dataclass
class Dataset:
    collections: list[Collection]
    vocab: Vocabulary
    config: FeatureConfig
    seed: int
    ratio: float
    negatives_per_positive: int
    counts: dict[str, int] = field(default_factory=dict)

    def train_samples(self):
        for coll in self.collections:
            yield from coll.train

    def test_groups(self):
        for coll in self.collections:
            yield from coll.test


def collection_rng(seed: int, name: str) -> random.Random:
    """Independent per-collection stream so results do not depend on the
    order collections are processed in."""
    digest = hashlib.sha256(f"{seed}/{name}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _window_nonempty(mention: Mention) -> bool:
    left, right = context_window(mention.sentence, mention, 1)
    return bool(left or right)


def _context_items(mention: Mention, config: FeatureConfig, exclude=()) -> list[str]:
    # Candidate-identifier items are reserved; a (pathological) token that
    # renders identically is dropped rather than allowed to collide.
    return [it for it in extract_items(mention, config) if it not in exclude]


def build_positive(mention: Mention, source_mid: str, config: FeatureConfig,
                   vocab: Vocabulary, frozen: bool = False,
                   name: str | None = None, exclude_items=()) -> Sample | None:
    """One positive sample, or None when the mention has no open-class
    neighbor on either side (no lexical evidence; the caller counts skips)."""
    if not _window_nonempty(mention):
        return None
    items = _context_items(mention, config, exclude_items)
    candidate = mid_item(source_mid)
    ctx = vocab.intern(items, frozen)
    mid_id = vocab.id_of(candidate) if frozen else vocab.add(candidate)
    if mid_id is None:
        return None
    ctx = tuple(i for i in ctx if i != mid_id)
    prov = Provenance.of(mention, name if name is not None else mention.name, source_mid)
    return Sample(context_ids=ctx, mid_id=mid_id, label=1,
                  candidate_mid=source_mid, provenance=prov)


def build_negatives(collection_name: str, target_mid: str,
                    pool: dict[str, list[Mention]], n: int, rng: random.Random,
                    config: FeatureConfig, vocab: Vocabulary,
                    frozen: bool = False, exclude_items=()) -> list[Sample]:
    """n negatives pairing mentions of *other* same-named entities with the
    target identifier. Draws are uniform, without replacement while the pool
    lasts and with replacement once n exceeds it. Empty pool yields []."""
    candidates = [(mid, mention)
                  for mid in sorted(pool)
                  if mid != target_mid
                  for mention in pool[mid]]
    if not candidates or n <= 0:
        return []
    if len(candidates) >= n:
        picks = rng.sample(candidates, n)
    else:
        picks = [candidates[rng.randrange(len(candidates))] for _ in range(n)]
    target_item = mid_item(target_mid)
    samples = []
    for source_mid, mention in picks:
        items = _context_items(mention, config, exclude_items)
        ctx = vocab.intern(items, frozen)
        mid_id = vocab.id_of(target_item) if frozen else vocab.add(target_item)
        if mid_id is None:
            continue
        ctx = tuple(i for i in ctx if i != mid_id)
        prov = Provenance.of(mention, collection_name, source_mid)
        samples.append(Sample(context_ids=ctx, mid_id=mid_id, label=0,
                              candidate_mid=target_mid, provenance=prov))
    return samples


def split_collection(mentions_by_mid: dict[str, list[Mention]], ratio: float,
                     rng: random.Random):
    """Per-mid shuffled train/test split.

    Train gets floor(ratio * total) mentions but never fewer than one when
    the mid has any; both sides are returned in provenance order.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    train: dict[str, list[Mention]] = {}
    test: dict[str, list[Mention]] = {}
    order = lambda m: (m.sentence.page_id, m.sentence.sentence_idx, m.start)
    for mid in sorted(mentions_by_mid):
        mentions = list(mentions_by_mid[mid])
        if not mentions:
            train[mid] = []
            test[mid] = []
            continue
        shuffled = mentions[:]
        rng.shuffle(shuffled)
        n_train = max(1, math.floor(ratio * len(shuffled)))
        train[mid] = sorted(shuffled[:n_train], key=order)
        test[mid] = sorted(shuffled[n_train:], key=order)
    return train, test


def build_dataset(repo: Repository, corpus: Corpus, config: FeatureConfig,
                  ratio: float = 0.8, negatives_per_positive: int = 1,
                  seed: int = 0, case_policy: str = CASE_SENSITIVE,
                  max_collections: int | None = None) -> Dataset:
    alignment = align(repo, corpus, case_policy)
    return build_dataset_from_alignment(repo, alignment, config, ratio=ratio,
                                        negatives_per_positive=negatives_per_positive,
                                        seed=seed, max_collections=max_collections)


def build_dataset_from_alignment(repo: Repository, alignment: Alignment,
                                 config: FeatureConfig, ratio: float = 0.8,
                                 negatives_per_positive: int = 1, seed: int = 0,
                                 max_collections: int | None = None) -> Dataset:
    """Assemble collections for every ambiguous name with at least two
    mention-covered entities, then assign feature ids in sorted order."""
    if negatives_per_positive < 0:
        raise ValueError("negatives_per_positive must be >= 0")
    counts = {
        "collections": 0, "train_samples": 0, "positives": 0, "negatives": 0,
        "test_groups": 0, "test_samples": 0, "skipped_empty_window": 0,
        "empty_negative_pools": 0, "excluded_names": 0, "unambiguous_names": 0,
    }
    scratch = Vocabulary()
    pending = []  # (name, mids, train_samples, test_mentions)

    for name in sorted(repo.name_index):
        mids = repo.name_index[name]
        if len(mids) < 2:
            counts["unambiguous_names"] += 1
            continue
        covered = sorted(mid for mid in mids if alignment.mentions.get(mid))
        if len(covered) < 2:
            counts["excluded_names"] += 1
            continue
        if max_collections is not None and counts["collections"] >= max_collections:
            break
        counts["collections"] += 1
        exclude = frozenset(mid_item(m) for m in covered)
        for mid in covered:
            scratch.add(mid_item(mid))

        rng = collection_rng(seed, name)
        train_by_mid, test_by_mid = split_collection(
            {mid: alignment.mentions[mid] for mid in covered}, ratio, rng)

        train_samples: list[Sample] = []
        pos_count: dict[str, int] = {}
        for mid in covered:
            built = []
            for mention in train_by_mid[mid]:
                sample = build_positive(mention, mid, config, scratch,
                                        name=name, exclude_items=exclude)
                if sample is None:
                    counts["skipped_empty_window"] += 1
                else:
                    built.append(sample)
            pos_count[mid] = len(built)
            train_samples.extend(built)

        pool = {mid: [m for m in train_by_mid[mid] if _window_nonempty(m)]
                for mid in covered}
        for mid in covered:
            wanted = negatives_per_positive * pos_count[mid]
            negs = build_negatives(name, mid, pool, wanted, rng, config, scratch,
                                   exclude_items=exclude)
            if wanted > 0 and not negs:
                counts["empty_negative_pools"] += 1
            train_samples.extend(negs)

        test_mentions = [(mention, mid)
                         for mid in covered
                         for mention in test_by_mid[mid]]
        test_mentions.sort(key=lambda pair: (pair[0].sentence.page_id,
                                             pair[0].sentence.sentence_idx,
                                             pair[0].start, pair[1]))
        pending.append((name, tuple(covered), train_samples, test_mentions))

    if not pending:
        raise DataError("empty dataset: no ambiguous name has two mention-covered entities")

    # Second pass: freeze the vocabulary with sorted, dense ids and remap.
    vocab = Vocabulary.from_items(sorted(scratch.items()))
    remap = {scratch.id_of(item): vocab.id_of(item) for item in scratch.items()}

    collections: list[Collection] = []
    group_id = 0
    for name, covered, train_samples, test_mentions in pending:
        remapped = [replace(s,
                            context_ids=tuple(sorted(remap[i] for i in s.context_ids)),
                            mid_id=remap[s.mid_id])
                    for s in train_samples]
        exclude = frozenset(mid_item(m) for m in covered)
        groups: list[TestGroup] = []
        for mention, gold_mid in test_mentions:
            items = _context_items(mention, config, exclude)
            ctx = vocab.intern(items, frozen=True)
            samples = []
            for cand in covered:
                cand_id = vocab.id_of(mid_item(cand))
                samples.append(Sample(
                    context_ids=tuple(i for i in ctx if i != cand_id),
                    mid_id=cand_id, label=int(cand == gold_mid),
                    candidate_mid=cand,
                    provenance=Provenance.of(mention, name, gold_mid)))
            groups.append(TestGroup(group_id=group_id, name=name, gold_mid=gold_mid,
                                    candidates=tuple(covered), samples=samples))
            group_id += 1
        counts["train_samples"] += len(remapped)
        counts["positives"] += sum(1 for s in remapped if s.label == 1)
        counts["negatives"] += sum(1 for s in remapped if s.label == 0)
        counts["test_groups"] += len(groups)
        counts["test_samples"] += sum(len(g.samples) for g in groups)
        collections.append(Collection(name=name, candidate_mids=tuple(covered),
                                      train=remapped, test=groups))

    counts["vocab_size"] = len(vocab)
    return Dataset(collections=collections, vocab=vocab, config=config, seed=seed,
                   ratio=ratio, negatives_per_positive=negatives_per_positive,
                   counts=counts)


def _sample_line(sample: Sample) -> str:
    return " ".join([str(sample.label)] + [f"{i}:1" for i in sample.feature_ids])


def export_dataset(dataset: Dataset, out_dir) -> dict[str, Path]:
    """Write train/test/vocabulary/manifest files.

    Train lines are `<label> <id>:1 ...` with ids strictly ascending (the
    de-facto sparse text format); test lines prepend group id, gold flag and
    the candidate mid.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: out_dir / name for name in
             (TRAIN_FILE, TEST_FILE, VOCAB_FILE, MANIFEST_FILE)}

    with open(paths[TRAIN_FILE], "w", encoding="utf-8") as fh:
        for coll in dataset.collections:
            for sample in coll.train:
                fh.write(_sample_line(sample) + "\n")

    with open(paths[TEST_FILE], "w", encoding="utf-8") as fh:
        for coll in dataset.collections:
            for group in coll.test:
                for sample in group.samples:
                    fh.write(f"{group.group_id} {sample.label} {sample.candidate_mid} "
                             + " ".join(f"{i}:1" for i in sample.feature_ids) + "\n")

    dataset.vocab.save(paths[VOCAB_FILE])

    manifest = {
        "format": "weaklink-dataset",
        "version": 1,
        "tool_version": __version__,
        "config": {"family": dataset.config.family, "k": dataset.config.k,
                   "lowercase": dataset.config.lowercase},
        "seed": dataset.seed,
        "ratio": dataset.ratio,
        "negatives_per_positive": dataset.negatives_per_positive,
        "vocab_sha256": dataset.vocab.sha256(),
        "counts": dataset.counts,
        "collections": [
            {"name": c.name, "candidate_mids": list(c.candidate_mids),
             "train_count": len(c.train),
             "positives": sum(1 for s in c.train if s.label == 1),
             "negatives": sum(1 for s in c.train if s.label == 0),
             "group_start": c.test[0].group_id if c.test else None,
             "group_count": len(c.test)}
            for c in dataset.collections
        ],
    }
    with open(paths[MANIFEST_FILE], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
    return paths


def _parse_ids(fields, path, lineno) -> tuple[int, ...]:
    ids = []
    last = 0
    for field_text in fields:
        head, sep, tail = field_text.partition(":")
        if not sep or tail != "1":
            raise InputError(f"bad feature field {field_text!r}", path, lineno)
        try:
            fid = int(head)
        except ValueError as exc:
            raise InputError(f"bad feature id {head!r}", path, lineno) from exc
        if fid <= last:
            raise InputError("feature ids must be strictly ascending", path, lineno)
        ids.append(fid)
        last = fid
    return tuple(ids)


def load_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST_FILE
    if not path.exists():
        raise InputError("manifest not found", path)
    with open(path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed manifest: {exc.msg}", path) from exc
    if manifest.get("format") != "weaklink-dataset":
        raise InputError("not a dataset manifest", path)
    return manifest


def import_dataset(out_dir) -> Dataset:
    """Rebuild a Dataset from exported files. Provenance lives only in
    memory, so imported samples carry none; everything the files encode is
    restored exactly."""
    out_dir = Path(out_dir)
    manifest = load_manifest(out_dir)
    vocab = Vocabulary.load(out_dir / VOCAB_FILE)
    if vocab.sha256() != manifest["vocab_sha256"]:
        raise InputError("vocabulary does not match manifest hash", out_dir / VOCAB_FILE)
    cfg = manifest["config"]
    config = FeatureConfig(family=cfg["family"], k=cfg["k"], lowercase=cfg["lowercase"],
                           allow_large_k=True)

    train_path = out_dir / TRAIN_FILE
    if not train_path.exists():
        raise InputError("train file not found", train_path)
    train_lines = train_path.read_text(encoding="utf-8").splitlines()
    test_path = out_dir / TEST_FILE
    if not test_path.exists():
        raise InputError("test file not found", test_path)
    test_lines = test_path.read_text(encoding="utf-8").splitlines()

    collections = []
    train_offset = 0
    groups_by_id: dict[int, list[tuple[str, int, tuple[int, ...]]]] = {}
    for lineno, line in enumerate(test_lines, start=1):
        fields = line.split()
        if len(fields) < 3:
            raise InputError("short test line", test_path, lineno)
        try:
            gid = int(fields[0])
            gold_flag = int(fields[1])
        except ValueError as exc:
            raise InputError("bad group id or gold flag", test_path, lineno) from exc
        if gold_flag not in (0, 1):
            raise InputError("gold flag must be 0 or 1", test_path, lineno)
        ids = _parse_ids(fields[3:], test_path, lineno)
        groups_by_id.setdefault(gid, []).append((fields[2], gold_flag, ids))

    for entry in manifest["collections"]:
        name = entry["name"]
        candidate_mids = tuple(entry["candidate_mids"])
        cand_ids = {}
        for mid in candidate_mids:
            fid = vocab.id_of(mid_item(mid))
            if fid is None:
                raise InputError(f"candidate item for mid {mid!r} missing from vocabulary",
                                 out_dir / VOCAB_FILE)
            cand_ids[fid] = mid

        train = []
        for lineno in range(train_offset, train_offset + entry["train_count"]):
            if lineno >= len(train_lines):
                raise InputError("train file shorter than manifest counts", train_path,
                                 lineno + 1)
            fields = train_lines[lineno].split()
            if not fields:
                raise InputError("empty train line", train_path, lineno + 1)
            try:
                label = int(fields[0])
            except ValueError as exc:
                raise InputError("bad label", train_path, lineno + 1) from exc
            if label not in (0, 1):
                raise InputError("label must be 0 or 1", train_path, lineno + 1)
            ids = _parse_ids(fields[1:], train_path, lineno + 1)
            present = [i for i in ids if i in cand_ids]
            if len(present) != 1:
                raise InputError("expected exactly one candidate id on the line",
                                 train_path, lineno + 1)
            mid_id = present[0]
            train.append(Sample(context_ids=tuple(i for i in ids if i != mid_id),
                                mid_id=mid_id, label=label,
                                candidate_mid=cand_ids[mid_id]))
        train_offset += entry["train_count"]

        groups = []
        start = entry["group_start"]
        gids = [] if start is None else range(start, start + entry["group_count"])
        for gid in gids:
            rows = groups_by_id.get(gid)
            if not rows:
                raise InputError(f"test group {gid} missing", test_path)
            samples = []
            gold_mid = None
            for cand_mid, gold_flag, ids in rows:
                mid_id = vocab.id_of(mid_item(cand_mid))
                if mid_id is None or mid_id not in ids:
                    raise InputError(f"candidate id for {cand_mid!r} absent from test line",
                                     test_path)
                if gold_flag:
                    gold_mid = cand_mid
                samples.append(Sample(context_ids=tuple(i for i in ids if i != mid_id),
                                      mid_id=mid_id, label=gold_flag,
                                      candidate_mid=cand_mid))
            if gold_mid is None:
                raise InputError(f"test group {gid} has no gold candidate", test_path)
            groups.append(TestGroup(group_id=gid, name=name, gold_mid=gold_mid,
                                    candidates=tuple(r[0] for r in rows),
                                    samples=samples))
        collections.append(Collection(name=name, candidate_mids=candidate_mids,
                                      train=train, test=groups))

    if train_offset != len(train_lines):
        raise InputError("train file has lines beyond manifest counts", train_path,
                         train_offset + 1)
    manifest_gids = set()
    for entry in manifest["collections"]:
        if entry["group_start"] is not None:
            manifest_gids.update(range(entry["group_start"],
                                       entry["group_start"] + entry["group_count"]))
    stray = sorted(set(groups_by_id) - manifest_gids)
    if stray:
        raise InputError(f"test file has groups not in the manifest: {stray[:5]}",
                         test_path)

    return Dataset(collections=collections, vocab=vocab, config=config,
                   seed=manifest["seed"], ratio=manifest["ratio"],
                   negatives_per_positive=manifest["negatives_per_positive"],
                   counts=dict(manifest["counts"]))


def dataset_structure(dataset: Dataset):
    """Format-visible structure, for equality checks across export/import."""
    return (
        (dataset.config.family, dataset.config.k, dataset.config.lowercase),
        dataset.seed, dataset.ratio, dataset.negatives_per_positive,
        tuple(dataset.vocab.items()),
        tuple(
            (c.name, c.candidate_mids,
             tuple((s.label, s.context_ids, s.mid_id) for s in c.train),
             tuple((g.group_id, g.gold_mid, g.candidates,
                    tuple((s.label, s.context_ids, s.mid_id) for s in g.samples))
                   for g in c.test))
            for c in dataset.collections
        ),
    )
