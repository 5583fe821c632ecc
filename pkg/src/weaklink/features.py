"""Lexical context features: open-class windows, BOW/WS composition, POS
variants, and interning into a dense-id vocabulary.

Feature items are plain strings. Words in a sequence are joined by "-" and a
POS tag is attached with "/"; literal "\\", "-" and "/" inside tokens are
backslash-escaped so the rendering stays bijective.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .alignment import Mention
from .corpus import TaggedSentence, TaggedToken
from .errors import InputError

BOW = "bow"
WS = "ws"
BOW_POS = "bow+pos"
WS_POS = "ws+pos"
FAMILIES = (BOW, WS, BOW_POS, WS_POS)
WINDOW_SIZES = (1, 2, 3)

# Penn Treebank prefixes for the open classes: noun, verb, adjective, adverb.
_OPEN_CLASS_PREFIXES = ("NN", "VB", "JJ", "RB")


@dataclass(frozen=True)
class FeatureConfig:
    family: str = BOW
    k: int = 1
    lowercase: bool = False
    allow_large_k: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown feature family {self.family!r}")
        if self.k < 1:
            raise ValueError("window size k must be >= 1")
        if self.k not in WINDOW_SIZES and not self.allow_large_k:
            raise ValueError(f"k={self.k} outside {WINDOW_SIZES}; pass allow_large_k to override")

    @property
    def with_pos(self) -> bool:
        return self.family in (BOW_POS, WS_POS)

    @property
    def sequence(self) -> bool:
        return self.family in (WS, WS_POS)

    def label(self) -> str:
        return f"{self.family} k={self.k}"


def is_open_class(pos: str) -> bool:
    return pos.startswith(_OPEN_CLASS_PREFIXES)


def context_window(sentence: TaggedSentence, mention: Mention,
                   k: int) -> tuple[list[TaggedToken], list[TaggedToken]]:
    """Up to k nearest open-class tokens on each side of the mention, in
    sentence order; closed-class tokens are skipped and mention tokens are
    never included. Sentence boundaries simply yield shorter lists."""
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = sentence.tokens
    left: list[TaggedToken] = []
    for i in range(mention.start - 1, -1, -1):
        if is_open_class(tokens[i].pos):
            left.append(tokens[i])
            if len(left) == k:
                break
    left.reverse()
    right: list[TaggedToken] = []
    for i in range(mention.end, len(tokens)):
        if is_open_class(tokens[i].pos):
            right.append(tokens[i])
            if len(right) == k:
                break
    return left, right


def escape_text(text: str) -> str:
    return text.replace("\\", "\\\\").replace("-", "\\-").replace("/", "\\/")


def _render(token: TaggedToken, config: FeatureConfig) -> str:
    text = token.text.lower() if config.lowercase else token.text
    word = escape_text(text)
    if config.with_pos:
        return word + "/" + escape_text(token.pos)
    return word


def compose(left, right, config: FeatureConfig) -> list[str]:
    """Render a window as feature items, left-derived items first.

    BOW yields one item per token; WS joins each side into a single "-"
    separated item (an empty side contributes nothing).
    """
    if config.sequence:
        items = []
        if left:
            items.append("-".join(_render(t, config) for t in left))
        if right:
            items.append("-".join(_render(t, config) for t in right))
        return items
    return [_render(t, config) for t in left] + [_render(t, config) for t in right]


def extract_items(mention: Mention, config: FeatureConfig) -> list[str]:
    left, right = context_window(mention.sentence, mention, config.k)
    return compose(left, right, config)


class Vocabulary:
    """Bijection between feature items and dense 1-based ids (0 is invalid)."""

    def __init__(self):
        self._item_to_id: dict[str, int] = {}
        self._id_to_item: list[str] = [""]  # index 0 reserved

    def __len__(self) -> int:
        return len(self._item_to_id)

    def __contains__(self, item: str) -> bool:
        return item in self._item_to_id

    def add(self, item: str) -> int:
        existing = self._item_to_id.get(item)
        if existing is not None:
            return existing
        new_id = len(self._id_to_item)
        self._item_to_id[item] = new_id
        self._id_to_item.append(item)
        return new_id

    def id_of(self, item: str):
        return self._item_to_id.get(item)

    def item(self, feature_id: int) -> str:
        if not 1 <= feature_id < len(self._id_to_item):
            raise KeyError(feature_id)
        return self._id_to_item[feature_id]

    def items(self) -> list[str]:
        return self._id_to_item[1:]

    def intern(self, items, frozen: bool) -> tuple[int, ...]:
        """Items to sorted, deduplicated ids; unseen items get fresh ids
        unless frozen, in which case they are dropped (test-time OOV)."""
        ids = set()
        for item in items:
            if frozen:
                fid = self._item_to_id.get(item)
                if fid is None:
                    continue
            else:
                fid = self.add(item)
            ids.add(fid)
        return tuple(sorted(ids))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.serialize())

    def serialize(self) -> str:
        return "".join(f"{i}\t{item}\n" for i, item in enumerate(self._id_to_item[1:], start=1))

    def sha256(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    @classmethod
    def from_items(cls, items) -> "Vocabulary":
        vocab = cls()
        for item in items:
            vocab.add(item)
        return vocab

    @classmethod
    def load(cls, path) -> "Vocabulary":
        path = Path(path)
        if not path.exists():
            raise InputError("vocabulary file not found", path)
        vocab = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line:
                    continue
                try:
                    id_text, item = line.split("\t", 1)
                    fid = int(id_text)
                except ValueError as exc:
                    raise InputError("bad vocabulary line", path, lineno) from exc
                if not item:
                    raise InputError("empty vocabulary item", path, lineno)
                if fid != len(vocab) + 1:
                    raise InputError(f"non-dense id {fid} (expected {len(vocab) + 1})",
                                     path, lineno)
                vocab.add(item)
        return vocab


def parse_family(text: str) -> str:
    if text not in FAMILIES:
        raise ValueError(f"family must be one of {'|'.join(FAMILIES)}")
    return text
