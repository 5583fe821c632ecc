"""Synthetic ambiguous-name corpus for end-to-end checks.

Every generated name is shared by several entities. Each entity gets two
private signature words placed immediately left and right of its mentions,
so a window of one open-class word per side separates the entities
perfectly. Words further out are drawn from a shared pool or, with
`sibling_noise_rate`, from a sibling's signatures; wider windows therefore
pick up misleading evidence on purpose.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .corpus import Corpus, TaggedSentence, TaggedToken
from .repository import Entity, Repository


@dataclass(frozen=True)
class SynthConfig:
    names: int = 50
    min_entities: int = 2
    max_entities: int = 4
    mentions_per_entity: int = 10
    noise_words: int = 30
    sibling_noise_rate: float = 0.5
    seed: int = 7

    def __post_init__(self):
        if self.names < 1:
            raise ValueError("names must be >= 1")
        if not 2 <= self.min_entities <= self.max_entities:
            raise ValueError("need 2 <= min_entities <= max_entities")
        if self.mentions_per_entity < 2:
            raise ValueError("mentions_per_entity must be >= 2 to allow a split")
        if not 0 <= self.sibling_noise_rate <= 1:
            raise ValueError("sibling_noise_rate must be in [0, 1]")


def _name_tokens(i: int) -> tuple[str, ...]:
    # every third name spans two tokens to exercise multi-token matching
    if i % 3 == 0:
        return (f"Name{i:02d}", "Figure")
    return (f"Name{i:02d}",)


def _signatures(i: int, j: int) -> tuple[str, str]:
    return f"alpha{i:02d}{j}", f"omega{i:02d}{j}"


def generate(config: SynthConfig) -> tuple[Repository, Corpus]:
    digest = hashlib.sha256(f"{config.seed}|synth".encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    shared_noise = [f"misc{t:02d}" for t in range(config.noise_words)]

    entities: list[Entity] = []
    corpus: Corpus = {}
    span = config.max_entities - config.min_entities + 1

    for i in range(config.names):
        name = " ".join(_name_tokens(i))
        name_toks = [TaggedToken(text, "NNP") for text in _name_tokens(i)]
        n_entities = config.min_entities + i % span
        sigs = [_signatures(i, j) for j in range(n_entities)]

        for j in range(n_entities):
            mid = f"0syn{i:02d}x{j}"
            page_id = f"page_{i:02d}_{j}"
            sig_left, sig_right = sigs[j]
            sibling_words = [w for jj, pair in enumerate(sigs) if jj != j
                             for w in pair]

            def far_word():
                if sibling_words and rng.random() < config.sibling_noise_rate:
                    return sibling_words[rng.randrange(len(sibling_words))]
                return shared_noise[rng.randrange(len(shared_noise))]

            sentences = []
            for s in range(config.mentions_per_entity):
                tokens: list[TaggedToken] = []
                if rng.random() < 0.5:
                    tokens.append(TaggedToken("the", "DT"))
                tokens.append(TaggedToken(far_word(), "NN"))
                tokens.append(TaggedToken(sig_left, "NN"))
                tokens.extend(name_toks)
                tokens.append(TaggedToken(sig_right, "NN"))
                tokens.append(TaggedToken(far_word(), "NN"))
                if rng.random() < 0.5:
                    tokens.append(TaggedToken("near", "IN"))
                    tokens.append(TaggedToken(far_word(), "NN"))
                tokens.append(TaggedToken(".", "."))
                sentences.append(TaggedSentence(page_id=page_id, sentence_idx=s,
                                                tokens=tuple(tokens)))
            # one mention-free sentence per page; alignment must skip it
            filler = (TaggedToken("nothing", "NN"), TaggedToken("here", "RB"),
                      TaggedToken(".", "."))
            sentences.append(TaggedSentence(page_id=page_id,
                                            sentence_idx=config.mentions_per_entity,
                                            tokens=filler))
            corpus[page_id] = sentences
            page_ids = (page_id,)
            if i == 0 and j == 0:
                page_ids = (page_id, "page_missing_on_purpose")
            entities.append(Entity(mid=mid, name=name, page_ids=page_ids))

    # an unambiguous extra entity; the builder must exclude its name
    entities.append(Entity(mid="0syn_solo", name="Solo Name",
                           page_ids=("page_solo",)))
    corpus["page_solo"] = [TaggedSentence(
        page_id="page_solo", sentence_idx=0,
        tokens=(TaggedToken("Solo", "NNP"), TaggedToken("Name", "NNP"),
                TaggedToken("stands", "VBZ"), TaggedToken("alone", "RB")))]

    return Repository(entities=entities), corpus


def write_files(config: SynthConfig, repo_path, corpus_path) -> tuple[Repository, Corpus]:
    from .corpus import save_corpus
    from .repository import save_repository

    repo, corpus = generate(config)
    save_repository(repo, repo_path)
    save_corpus(corpus, corpus_path)
    return repo, corpus
