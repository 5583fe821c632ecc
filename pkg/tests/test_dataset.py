import random

import pytest

from weaklink.alignment import Mention
from weaklink.corpus import TaggedSentence, TaggedToken
from weaklink.dataset import (MANIFEST_FILE, TEST_FILE, TRAIN_FILE, VOCAB_FILE,
                              Sample, build_dataset, build_negatives,
                              build_positive, collection_rng, dataset_structure,
                              export_dataset, import_dataset, load_manifest,
                              mid_item, split_collection)
from weaklink.errors import DataError, InputError
from weaklink.features import FeatureConfig, Vocabulary
from weaklink.repository import Entity, Repository

from conftest import make_mention_sentence, two_entity_fixture

BOW1 = FeatureConfig(family="bow", k=1)


@pytest.fixture
def built():
    repo, corpus = two_entity_fixture(10)
    return build_dataset(repo, corpus, BOW1, ratio=0.8, negatives_per_positive=1, seed=0)


def test_counts_two_entities_ratio_08(built):
    # 10 mentions per mid, floor(0.8 * 10) = 8 train and 2 test per mid.
    c = built.counts
    assert c["collections"] == 1
    assert c["positives"] == 16
    assert c["negatives"] == 16
    assert c["train_samples"] == 32
    assert c["test_groups"] == 4
    assert c["test_samples"] == 8


def test_balance_default_one_to_one(built):
    labels = [s.label for s in built.train_samples()]
    assert labels.count(1) == labels.count(0)


def test_every_group_has_gold_exactly_once(built):
    for group in built.test_groups():
        golds = [s for s in group.samples if s.label == 1]
        assert len(golds) == 1
        assert golds[0].candidate_mid == group.gold_mid
        assert {s.candidate_mid for s in group.samples} == set(group.candidates)


def test_no_mention_leaks_between_train_and_test(built):
    train_keys = {s.provenance.mention_key for s in built.train_samples()
                  if s.label == 1}
    test_keys = {s.provenance.mention_key
                 for g in built.test_groups() for s in g.samples if s.label == 1}
    assert train_keys and test_keys
    assert not train_keys & test_keys


def test_negatives_reuse_sibling_contexts(built):
    positives_ctx = {s.context_ids for s in built.train_samples() if s.label == 1}
    for s in built.train_samples():
        if s.label == 0:
            assert s.context_ids in positives_ctx
            assert s.provenance.source_mid != s.candidate_mid


def test_mid_items_are_in_vocabulary(built):
    for coll in built.collections:
        for mid in coll.candidate_mids:
            assert built.vocab.id_of(mid_item(mid)) is not None


def test_negatives_per_positive_scales():
    repo, corpus = two_entity_fixture(10)
    ds = build_dataset(repo, corpus, BOW1, negatives_per_positive=3, seed=0)
    assert ds.counts["negatives"] == 3 * ds.counts["positives"]


def test_zero_negatives_allowed():
    repo, corpus = two_entity_fixture(10)
    ds = build_dataset(repo, corpus, BOW1, negatives_per_positive=0, seed=0)
    assert ds.counts["negatives"] == 0
    assert ds.counts["positives"] == 16


def test_split_keeps_at_least_one_train():
    rng = random.Random(0)
    sent = make_mention_sentence(("N",), ["l"], ["r"], "p", 0)
    only = Mention(sentence=sent, start=1, end=2, name="N")
    train, test = split_collection({"m": [only]}, 0.8, rng)
    assert train["m"] == [only]
    assert test["m"] == []


def test_split_ratio_bounds():
    with pytest.raises(ValueError):
        split_collection({}, 0.0, random.Random(0))
    with pytest.raises(ValueError):
        split_collection({}, 1.0, random.Random(0))


def test_split_is_config_independent():
    repo, corpus = two_entity_fixture(10)
    structures = []
    for family, k in (("bow", 1), ("ws", 3), ("bow+pos", 2)):
        ds = build_dataset(repo, corpus, FeatureConfig(family=family, k=k), seed=5)
        structures.append(tuple(
            (g.name, g.gold_mid,
             tuple(s.provenance.mention_key for s in g.samples if s.label == 1))
            for g in ds.test_groups()))
    assert structures[0] == structures[1] == structures[2]


def test_collection_rng_is_name_scoped():
    a = collection_rng(0, "Kim Gray").random()
    b = collection_rng(0, "Kim Gray").random()
    c = collection_rng(0, "Lee Park").random()
    d = collection_rng(1, "Kim Gray").random()
    assert a == b
    assert a != c
    assert a != d


def test_build_is_deterministic():
    repo, corpus = two_entity_fixture(10)
    one = build_dataset(repo, corpus, BOW1, seed=3)
    two = build_dataset(repo, corpus, BOW1, seed=3)
    assert dataset_structure(one) == dataset_structure(two)


def test_seed_changes_split():
    repo, corpus = two_entity_fixture(10)
    one = build_dataset(repo, corpus, BOW1, seed=0)
    two = build_dataset(repo, corpus, BOW1, seed=99)
    keys = lambda ds: {s.provenance.mention_key for s in ds.train_samples()
                       if s.label == 1}
    assert keys(one) != keys(two)


def test_vocabulary_ids_follow_sorted_items(built):
    items = built.vocab.items()
    assert items == sorted(items)


def test_sample_rejects_mid_in_context():
    with pytest.raises(ValueError):
        Sample(context_ids=(2, 5), mid_id=5, label=0, candidate_mid="m")


def test_feature_ids_merge_sorted():
    s = Sample(context_ids=(2, 9), mid_id=4, label=0, candidate_mid="m")
    assert s.feature_ids == (2, 4, 9)


def test_build_positive_empty_window_returns_none():
    sent = TaggedSentence(page_id="p", sentence_idx=0,
                          tokens=(TaggedToken("the", "DT"),
                                  TaggedToken("N", "NNP"),
                                  TaggedToken("of", "IN")))
    mention = Mention(sentence=sent, start=1, end=2, name="N")
    assert build_positive(mention, "m", BOW1, Vocabulary()) is None


def test_build_negatives_empty_pool():
    vocab = Vocabulary()
    out = build_negatives("N", "m_a", {"m_a": []}, 4, random.Random(0), BOW1, vocab)
    assert out == []


def test_build_negatives_with_replacement_when_pool_small():
    sent = make_mention_sentence(("N",), ["l"], ["r"], "p", 0)
    pool = {"m_b": [Mention(sentence=sent, start=1, end=2, name="N")]}
    out = build_negatives("N", "m_a", pool, 5, random.Random(0), BOW1, Vocabulary())
    assert len(out) == 5
    assert all(s.candidate_mid == "m_a" and s.label == 0 for s in out)
    assert all(s.provenance.source_mid == "m_b" for s in out)


def test_skipped_empty_window_counted():
    # every mention of m_b sits between closed-class tokens only
    entities = [Entity(mid="m_a", name="N", page_ids=("pa",)),
                Entity(mid="m_b", name="N", page_ids=("pb",))]
    pa = [make_mention_sentence(("N",), [f"w{i}"], [], "pa", i) for i in range(4)]
    pb = []
    for i in range(4):
        toks = (TaggedToken("the", "DT"), TaggedToken("N", "NNP"), TaggedToken("of", "IN"))
        pb.append(TaggedSentence(page_id="pb", sentence_idx=i, tokens=toks))
    repo = Repository(entities=entities)
    ds = build_dataset(repo, {"pa": pa, "pb": pb}, BOW1, ratio=0.5, seed=0)
    assert ds.counts["skipped_empty_window"] > 0
    assert all(s.context_ids for s in ds.train_samples() if s.label == 1)


def test_unambiguous_names_excluded():
    repo, corpus = two_entity_fixture(4)
    solo_sent = make_mention_sentence(("Solo",), ["word"], [], "ps", 0)
    repo = Repository(entities=list(repo.entities)
                      + [Entity(mid="m_s", name="Solo", page_ids=("ps",))])
    corpus = dict(corpus, ps=[solo_sent])
    ds = build_dataset(repo, corpus, BOW1, seed=0)
    assert ds.counts["collections"] == 1
    assert ds.counts["unambiguous_names"] == 1


def test_ambiguous_name_without_coverage_excluded():
    # m_b's page never mentions the shared name, so the collection collapses
    entities = [Entity(mid="m_a", name="N", page_ids=("pa",)),
                Entity(mid="m_b", name="N", page_ids=("pb",))]
    pa = [make_mention_sentence(("N",), [f"w{i}"], [], "pa", i) for i in range(4)]
    pb = [make_mention_sentence(("Other",), ["x"], [], "pb", 0)]
    repo = Repository(entities=entities)
    with pytest.raises(DataError):
        build_dataset(repo, {"pa": pa, "pb": pb}, BOW1, seed=0)


def test_max_collections_truncates():
    repo_a, corpus_a = two_entity_fixture(6)
    more = [Entity(mid="x_a", name="Lee Park", page_ids=("qa",)),
            Entity(mid="x_b", name="Lee Park", page_ids=("qb",))]
    corpus = dict(corpus_a)
    for page, tag in (("qa", "qa"), ("qb", "qb")):
        corpus[page] = [make_mention_sentence(("Lee", "Park"),
                                              [f"{tag}l{i}"], [f"{tag}r{i}"], page, i)
                        for i in range(6)]
    repo = Repository(entities=list(repo_a.entities) + more)
    full = build_dataset(repo, corpus, BOW1, seed=0)
    cut = build_dataset(repo, corpus, BOW1, seed=0, max_collections=1)
    assert full.counts["collections"] == 2
    assert cut.counts["collections"] == 1
    assert cut.collections[0].name == full.collections[0].name


def test_empty_dataset_raises():
    repo = Repository(entities=[Entity(mid="m", name="Only", page_ids=("p",))])
    corpus = {"p": [make_mention_sentence(("Only",), ["w"], [], "p", 0)]}
    with pytest.raises(DataError):
        build_dataset(repo, corpus, BOW1)


def test_export_line_shapes(tmp_path, built):
    paths = export_dataset(built, tmp_path)
    train_lines = paths[TRAIN_FILE].read_text(encoding="utf-8").splitlines()
    assert len(train_lines) == built.counts["train_samples"]
    for line in train_lines:
        fields = line.split(" ")
        assert fields[0] in ("0", "1")
        ids = [int(f.split(":")[0]) for f in fields[1:]]
        assert all(f.endswith(":1") for f in fields[1:])
        assert ids == sorted(ids)
        assert len(ids) == len(set(ids))

    test_lines = paths[TEST_FILE].read_text(encoding="utf-8").splitlines()
    assert len(test_lines) == built.counts["test_samples"]
    for line in test_lines:
        fields = line.split(" ")
        int(fields[0])
        assert fields[1] in ("0", "1")
        assert fields[2].startswith("m_")


def test_manifest_contents(tmp_path, built):
    export_dataset(built, tmp_path)
    manifest = load_manifest(tmp_path)
    assert manifest["format"] == "weaklink-dataset"
    assert manifest["version"] == 1
    assert manifest["config"] == {"family": "bow", "k": 1, "lowercase": False}
    assert manifest["vocab_sha256"] == built.vocab.sha256()
    assert manifest["counts"] == built.counts
    entry = manifest["collections"][0]
    assert entry["name"] == "Kim Gray"
    assert entry["group_count"] == 4
    assert entry["group_start"] == 0


def test_export_import_round_trip(tmp_path, built):
    export_dataset(built, tmp_path)
    again = import_dataset(tmp_path)
    assert dataset_structure(again) == dataset_structure(built)


def test_export_is_byte_stable(tmp_path, built):
    a = tmp_path / "a"
    b = tmp_path / "b"
    export_dataset(built, a)
    export_dataset(built, b)
    for name in (TRAIN_FILE, TEST_FILE, VOCAB_FILE, MANIFEST_FILE):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_import_rejects_vocab_hash_mismatch(tmp_path, built):
    export_dataset(built, tmp_path)
    vocab_path = tmp_path / VOCAB_FILE
    vocab_path.write_text(vocab_path.read_text(encoding="utf-8")
                          + f"{built.counts['vocab_size'] + 1}\textra\n",
                          encoding="utf-8")
    with pytest.raises(InputError) as err:
        import_dataset(tmp_path)
    assert "hash" in str(err.value).lower() or "sha" in str(err.value).lower()


def test_import_rejects_bad_train_line(tmp_path, built):
    export_dataset(built, tmp_path)
    train = tmp_path / TRAIN_FILE
    lines = train.read_text(encoding="utf-8").splitlines()
    lines[0] = "1 7:2"
    train.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(InputError):
        import_dataset(tmp_path)


def test_import_rejects_trailing_train_lines(tmp_path, built):
    export_dataset(built, tmp_path)
    train = tmp_path / TRAIN_FILE
    train.write_text(train.read_text(encoding="utf-8") + "1 3:1\n", encoding="utf-8")
    with pytest.raises(InputError) as err:
        import_dataset(tmp_path)
    assert "beyond" in str(err.value)


def test_import_rejects_stray_test_group(tmp_path, built):
    export_dataset(built, tmp_path)
    test = tmp_path / TEST_FILE
    test.write_text(test.read_text(encoding="utf-8") + "999 1 m_a 3:1\n",
                    encoding="utf-8")
    with pytest.raises(InputError):
        import_dataset(tmp_path)


def test_import_rejects_unsorted_ids(tmp_path, built):
    export_dataset(built, tmp_path)
    train = tmp_path / TRAIN_FILE
    train.write_text("1 5:1 3:1\n", encoding="utf-8")
    with pytest.raises(InputError):
        import_dataset(tmp_path)


def test_import_missing_manifest(tmp_path):
    with pytest.raises(InputError):
        import_dataset(tmp_path)
