from hypothesis import given, strategies as st

from weaklink.alignment import (CASE_INSENSITIVE, CASE_SENSITIVE, align,
                                find_mentions)
from weaklink.corpus import TaggedSentence, TaggedToken
from weaklink.repository import Entity, Repository


def words(*texts):
    return TaggedSentence(page_id="p", sentence_idx=0,
                          tokens=tuple(TaggedToken(t, "NN") for t in texts))


def test_single_token_match():
    sent = words("a", "Kim", "b", "Kim")
    spans = [(m.start, m.end) for m in find_mentions(sent, "Kim")]
    assert spans == [(1, 2), (3, 4)]


def test_multi_token_match_and_greedy_non_overlap():
    sent = words("Kim", "Kim", "Kim")
    spans = [(m.start, m.end) for m in find_mentions(sent, "Kim Kim")]
    assert spans == [(0, 2)]       # greedy: third token cannot re-pair


def test_case_policy():
    sent = words("kim", "gray")
    assert find_mentions(sent, "Kim Gray", CASE_SENSITIVE) == []
    spans = [(m.start, m.end) for m in find_mentions(sent, "Kim Gray", CASE_INSENSITIVE)]
    assert spans == [(0, 2)]


def test_no_partial_token_match():
    sent = words("Kimberly")
    assert find_mentions(sent, "Kim") == []


@given(st.lists(st.sampled_from("ab"), min_size=0, max_size=12),
       st.integers(min_value=1, max_value=3))
def test_mentions_never_overlap_and_all_match(texts, name_len):
    sent = words(*texts) if texts else words("x")
    name = " ".join(["a"] * name_len)
    mentions = find_mentions(sent, name)
    prev_end = -1
    for m in mentions:
        assert m.start >= prev_end          # non-overlapping, left to right
        assert [t.text for t in sent.tokens[m.start:m.end]] == ["a"] * name_len
        prev_end = m.end


def page(page_id, *token_lists):
    return [TaggedSentence(page_id=page_id, sentence_idx=i,
                           tokens=tuple(TaggedToken(t, "NN") for t in texts))
            for i, texts in enumerate(token_lists)]


def test_align_counts_and_order():
    repo = Repository(entities=[
        Entity("m1", "Kim", ("p1", "p_missing")),
        Entity("m2", "Kim", ("p2",)),
        Entity("m3", "Lee", ("p1",)),
    ])
    corpus = {
        "p1": page("p1", ("Kim", "x", "Kim"), ("y", "Kim")),
        "p2": page("p2", ("nothing",)),
    }
    result = align(repo, corpus)
    assert result.total_entities == 3
    assert result.missing_pages == 1
    assert result.aligned_entities == 1          # only m1 has mentions
    keys = [m.provenance_key for m in result.mentions["m1"]]
    assert keys == [("p1", 0, 0, 1), ("p1", 0, 2, 3), ("p1", 1, 1, 2)]
    assert result.mentions["m2"] == []
    assert result.summary() == "aligned=1 total=3 missing_pages=1"


def test_align_scans_only_own_pages():
    repo = Repository(entities=[
        Entity("m1", "Kim", ("p1",)),
        Entity("m2", "Kim", ("p2",)),
    ])
    corpus = {"p1": page("p1", ("Kim",)), "p2": page("p2", ("Kim", "Kim"))}
    result = align(repo, corpus)
    assert len(result.mentions["m1"]) == 1
    assert len(result.mentions["m2"]) == 2


def test_align_empty_corpus():
    repo = Repository(entities=[Entity("m1", "Kim", ("p1",))])
    result = align(repo, {})
    assert result.aligned_entities == 0
    assert result.missing_pages == 1


def test_mention_excluded_from_own_window(table_mention):
    # the mention's own tokens never leak into its context
    from weaklink.features import FeatureConfig, context_window
    left, right = context_window(table_mention.sentence, table_mention, 3)
    texts = [t.text for t in left + right]
    assert "Michael" not in texts and "Jordan" not in texts
