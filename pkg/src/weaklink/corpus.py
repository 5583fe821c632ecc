"""Text corpus: POS-tagged sentences grouped by page.

On-disk format is JSON lines, one page per line:

    {"page_id": "p1", "sentences": [[{"token": "He", "pos": "PRP"}, ...], ...]}

Sentences keep input order and are numbered 0, 1, 2, ... within their page.
A naive fallback tagger is provided for raw text so the toolkit stays
self-contained; production corpora are expected to arrive pre-tagged.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError

Corpus = dict[str, list["TaggedSentence"]]


@dataclass(frozen=True)
class TaggedToken:
    text: str
    pos: str


@dataclass(frozen=True)
class TaggedSentence:
    page_id: str
    sentence_idx: int
    tokens: tuple[TaggedToken, ...]


def _check_token(tok, path, lineno) -> TaggedToken:
    if not isinstance(tok, dict):
        raise InputError("token record is not an object", path, lineno)
    text = tok.get("token")
    pos = tok.get("pos")
    if not isinstance(text, str) or not text:
        raise InputError("missing or empty 'token'", path, lineno)
    if any(ch.isspace() for ch in text):
        raise InputError(f"token {text!r} contains whitespace", path, lineno)
    if not isinstance(pos, str) or not pos:
        raise InputError("missing or empty 'pos'", path, lineno)
    return TaggedToken(text=text, pos=pos)


def load_corpus(path) -> Corpus:
    """Parse a corpus file; duplicate page ids, token-less sentences and
    schema violations are fatal, with line diagnostics."""
    path = Path(path)
    if not path.exists():
        raise InputError("corpus file not found", path)
    corpus: Corpus = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"malformed record: {exc.msg}", path, lineno) from exc
            if not isinstance(rec, dict):
                raise InputError("page record is not an object", path, lineno)
            page_id = rec.get("page_id")
            sentences = rec.get("sentences")
            if not isinstance(page_id, str) or not page_id:
                raise InputError("missing or empty 'page_id'", path, lineno)
            if page_id in corpus:
                raise InputError(f"duplicate page_id {page_id!r}", path, lineno)
            if not isinstance(sentences, list):
                raise InputError("'sentences' must be a list", path, lineno)
            page: list[TaggedSentence] = []
            for idx, sent in enumerate(sentences):
                if not isinstance(sent, list) or not sent:
                    raise InputError(f"sentence {idx} has no tokens", path, lineno)
                tokens = tuple(_check_token(t, path, lineno) for t in sent)
                page.append(TaggedSentence(page_id=page_id, sentence_idx=idx, tokens=tokens))
            corpus[page_id] = page
    return corpus


def save_corpus(corpus: Corpus, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for page_id, sentences in corpus.items():
            rec = {
                "page_id": page_id,
                "sentences": [
                    [{"token": t.text, "pos": t.pos} for t in s.tokens] for s in sentences
                ],
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

# (suffix, tag) heuristics tried in order after the lexicon lookup fails.
_SUFFIX_TAGS = (("ly", "RB"), ("ing", "VBG"), ("ed", "VBD"), ("s", "NNS"))


def naive_tag(raw_sentence: str, lexicon=None, page_id: str = "input",
              sentence_idx: int = 0) -> TaggedSentence:
    """Whitespace-and-punctuation tokenize and tag with a lookup-plus-suffix
    heuristic. Deliberately crude: a stand-in for a real tagger so untagged
    text can still be linked.
    """
    if not raw_sentence or not raw_sentence.strip():
        raise InputError("empty sentence")
    lexicon = lexicon or {}
    lowered = {k.lower(): v for k, v in lexicon.items()}
    tokens = []
    for word in _TOKEN_RE.findall(raw_sentence):
        tag = lowered.get(word.lower())
        if tag is None:
            for suffix, candidate in _SUFFIX_TAGS:
                if len(word) > len(suffix) and word.endswith(suffix):
                    tag = candidate
                    break
        if tag is None and word[0].isupper():
            tag = "NNP"
        if tag is None:
            # Punctuation tags itself, PTB style; everything else defaults to NN.
            tag = word if not word[0].isalnum() and word[0] != "_" else "NN"
        tokens.append(TaggedToken(text=word, pos=tag))
    return TaggedSentence(page_id=page_id, sentence_idx=sentence_idx, tokens=tuple(tokens))
