"""Knowledge repository: disambiguated entities keyed by machine identifier.

The on-disk format is JSON lines, one entity per line:

    {"mid": "m.054c1", "name": "Michael Jordan", "pages": ["p1", "p2"]}

``mid`` is the unique machine identifier, ``name`` the surface form shared
by every ambiguous sibling, ``pages`` the ids of the entity's
topic-equivalent pages in the corpus.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError


@dataclass(frozen=True)
class Entity:
    mid: str
    name: str
    page_ids: tuple[str, ...]


@dataclass
class Repository:
    """Entities in file order plus the surface-name grouping.

    ``name_index`` maps each surface name to the mids sharing it, in entity
    order; rebuilding it from ``entities`` always yields an identical map.
    """

    entities: list[Entity] = field(default_factory=list)
    name_index: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.name_index and self.entities:
            self.name_index = build_name_index(self.entities)

    def entity(self, mid: str) -> Entity:
        return self._by_mid[mid]

    @property
    def _by_mid(self) -> dict[str, Entity]:
        cached = getattr(self, "_mid_cache", None)
        if cached is None or len(cached) != len(self.entities):
            cached = {e.mid: e for e in self.entities}
            object.__setattr__(self, "_mid_cache", cached)
        return cached


def build_name_index(entities) -> dict[str, tuple[str, ...]]:
    index: dict[str, list[str]] = {}
    for e in entities:
        index.setdefault(e.name, []).append(e.mid)
    return {name: tuple(mids) for name, mids in index.items()}


def _check_entity_record(rec, path, line) -> Entity:
    if not isinstance(rec, dict):
        raise InputError("entity record is not an object", path, line)
    mid = rec.get("mid")
    name = rec.get("name")
    pages = rec.get("pages")
    if not isinstance(mid, str) or not mid:
        raise InputError("missing or empty 'mid'", path, line)
    if any(ch.isspace() for ch in mid):
        raise InputError(f"mid {mid!r} contains whitespace", path, line)
    if not isinstance(name, str) or not name:
        raise InputError("missing or empty 'name'", path, line)
    if not isinstance(pages, list) or any(not isinstance(p, str) or not p for p in pages):
        raise InputError("'pages' must be a list of non-empty strings", path, line)
    return Entity(mid=mid, name=name, page_ids=tuple(pages))


def load_repository(path) -> Repository:
    """Parse a repository file; malformed records, duplicate mids and empty
    names are fatal, with the offending line number in the message."""
    path = Path(path)
    if not path.exists():
        raise InputError("repository file not found", path)
    entities: list[Entity] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"malformed record: {exc.msg}", path, lineno) from exc
            ent = _check_entity_record(rec, path, lineno)
            if ent.mid in seen:
                raise InputError(f"duplicate mid {ent.mid!r}", path, lineno)
            seen.add(ent.mid)
            entities.append(ent)
    return Repository(entities=entities)


def save_repository(repo: Repository, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for e in repo.entities:
            rec = {"mid": e.mid, "name": e.name, "pages": list(e.page_ids)}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def ambiguity_histogram(repo: Repository) -> dict[int, int]:
    """Histogram of name-collection sizes: #mids sharing a name -> #names.

    Unambiguous names land under key 1; the values sum to the number of
    distinct names and sum(key * value) equals the number of entities.
    """
    return dict(Counter(len(mids) for mids in repo.name_index.values()))
