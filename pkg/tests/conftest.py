"""Shared fixtures: the worked sentence from the feature table and a small
two-entity repository/corpus pair."""

import pytest

from weaklink.alignment import Mention
from weaklink.corpus import TaggedSentence, TaggedToken
from weaklink.repository import Entity, Repository

TABLE_SENTENCE_TAGGED = [
    ("His", "PRP$"), ("biography", "NN"), ("on", "IN"), ("the", "DT"),
    ("National", "NNP"), ("Basketball", "NNP"), ("Association", "NNP"),
    ("(", "-LRB-"), ("NBA", "NNP"), (")", "-RRB-"), ("website", "NN"),
    ("states", "NNS"), (",", ","), ("``", "``"), ("By", "IN"),
    ("acclamation", "NN"), (",", ","), ("Michael", "NNP"), ("Jordan", "NNP"),
    ("is", "VBZ"), ("the", "DT"), ("greatest", "JJS"), ("basketball", "NN"),
    ("player", "NN"), ("of", "IN"), ("all", "DT"), ("time", "NN"),
    (".", "."), ("''", "''"),
]

MYCOLOGIST_TAGGED = [
    ("Michael", "NNP"), ("Jordan", "NNP"), ("is", "VBZ"), ("an", "DT"),
    ("English", "JJ"), ("mycologist", "NN"),
]

PLAYER_MID = "054c1"
MYCOLOGIST_MID = "0bby3vs"


def sentence_of(tagged, page_id="page", sentence_idx=0) -> TaggedSentence:
    return TaggedSentence(page_id=page_id, sentence_idx=sentence_idx,
                          tokens=tuple(TaggedToken(t, p) for t, p in tagged))


@pytest.fixture
def table_sentence() -> TaggedSentence:
    return sentence_of(TABLE_SENTENCE_TAGGED)


@pytest.fixture
def table_mention(table_sentence) -> Mention:
    return Mention(sentence=table_sentence, start=17, end=19, name="Michael Jordan")


@pytest.fixture
def jordan_repo() -> Repository:
    return Repository(entities=[
        Entity(mid=PLAYER_MID, name="Michael Jordan", page_ids=("page_player",)),
        Entity(mid=MYCOLOGIST_MID, name="Michael Jordan", page_ids=("page_fungi",)),
    ])


@pytest.fixture
def jordan_corpus():
    player = [sentence_of(TABLE_SENTENCE_TAGGED, "page_player", 0)]
    fungi = [sentence_of(MYCOLOGIST_TAGGED, "page_fungi", 0)]
    return {"page_player": player, "page_fungi": fungi}


def make_mention_sentence(name_tokens, left_words, right_words, page_id, idx):
    """name preceded/followed by NN context words, all open class."""
    tokens = [TaggedToken(w, "NN") for w in left_words]
    tokens += [TaggedToken(t, "NNP") for t in name_tokens]
    tokens += [TaggedToken(w, "NN") for w in right_words]
    return TaggedSentence(page_id=page_id, sentence_idx=idx, tokens=tuple(tokens))


def two_entity_fixture(mentions_per_mid=10):
    """One ambiguous name, two entities, distinct context words per mention."""
    entities = [
        Entity(mid="m_a", name="Kim Gray", page_ids=("pa",)),
        Entity(mid="m_b", name="Kim Gray", page_ids=("pb",)),
    ]
    corpus = {}
    for page, mid_tag in (("pa", "a"), ("pb", "b")):
        sentences = []
        for i in range(mentions_per_mid):
            sentences.append(make_mention_sentence(
                ("Kim", "Gray"),
                [f"left{mid_tag}{i}"], [f"right{mid_tag}{i}"],
                page, i))
        corpus[page] = sentences
    return Repository(entities=entities), corpus
