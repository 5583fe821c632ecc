"""Align repository entities to name mentions on their own pages.

An entity's weak labels come only from the topic-equivalent pages it lists;
missing pages are counted, never fatal, because distant supervision
tolerates partial coverage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, TaggedSentence
from .repository import Repository

CASE_SENSITIVE = "sensitive"
CASE_INSENSITIVE = "insensitive"


@dataclass(frozen=True)
class Mention:
    sentence: TaggedSentence
    start: int
    end: int
    name: str

    @property
    def provenance_key(self):
        return (self.sentence.page_id, self.sentence.sentence_idx, self.start, self.end)


def _fold(text: str, case_policy: str) -> str:
    return text.lower() if case_policy == CASE_INSENSITIVE else text


def find_mentions(sentence: TaggedSentence, name: str,
                  case_policy: str = CASE_SENSITIVE) -> list[Mention]:
    """All non-overlapping left-to-right greedy matches of the name's token
    sequence against the sentence tokens."""
    target = [_fold(t, case_policy) for t in name.split()]
    if not target:
        raise ValueError("name must contain at least one token")
    texts = [_fold(t.text, case_policy) for t in sentence.tokens]
    n, m = len(texts), len(target)
    mentions = []
    i = 0
    while i + m <= n:
        if texts[i:i + m] == target:
            mentions.append(Mention(sentence=sentence, start=i, end=i + m, name=name))
            i += m
        else:
            i += 1
    return mentions


@dataclass
class Alignment:
    """Mentions per mid plus coverage counters."""

    mentions: dict[str, list[Mention]] = field(default_factory=dict)
    total_entities: int = 0
    missing_pages: int = 0

    @property
    def aligned_entities(self) -> int:
        return sum(1 for ms in self.mentions.values() if ms)

    def summary(self) -> str:
        return (f"aligned={self.aligned_entities} total={self.total_entities} "
                f"missing_pages={self.missing_pages}")


def align(repo: Repository, corpus: Corpus,
          case_policy: str = CASE_SENSITIVE) -> Alignment:
    """Scan every entity's own pages for mentions of its name.

    Mentions are ordered by (page_id, sentence_idx, start) so the result does
    not depend on how pages get scanned.
    """
    result = Alignment(total_entities=len(repo.entities))
    for entity in repo.entities:
        collected: list[Mention] = []
        for page_id in entity.page_ids:
            sentences = corpus.get(page_id)
            if sentences is None:
                result.missing_pages += 1
                continue
            for sentence in sentences:
                collected.extend(find_mentions(sentence, entity.name, case_policy))
        collected.sort(key=lambda m: (m.sentence.page_id, m.sentence.sentence_idx, m.start))
        result.mentions[entity.mid] = collected
    return result
