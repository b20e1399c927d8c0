"""Shipped reference data: section exemplars, tooltip questions, experts.

Data files live inside the package:

* ``corpus/exemplars/<section_id>/<nn>_<slug>.txt``: exemplar body, with a
  ``.meta`` sidecar carrying ``exemplar_id``, ``title`` and ``source_url``
  as ``key: value`` lines. Corpus order is filename sort.
* ``corpus/tooltips/<section_id>.txt``: one question per line.
* ``corpus/experts.json``: the static expert directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .sections import CANONICAL_ORDER, SectionId


class CorpusError(RuntimeError):
    """Shipped data is missing or malformed."""


@dataclass(frozen=True)
class Exemplar:
    exemplar_id: str
    section_id: SectionId
    title: str
    body: str
    source_url: str

    def to_wire(self) -> dict:
        return {
            "exemplar_id": self.exemplar_id,
            "section_id": self.section_id.value,
            "title": self.title,
            "body": self.body,
            "source_url": self.source_url,
        }


def _corpus_root():
    return resources.files("bizplan") / "corpus"


def _parse_meta(text: str, where: str) -> dict:
    meta: dict = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    for required in ("exemplar_id", "title", "source_url"):
        if not meta.get(required):
            raise CorpusError(f"{where}: meta missing {required}")
    return meta


@lru_cache(maxsize=1)
def _load_exemplars() -> dict[SectionId, tuple[Exemplar, ...]]:
    root = _corpus_root() / "exemplars"
    out: dict[SectionId, tuple[Exemplar, ...]] = {}
    for section_id in CANONICAL_ORDER:
        section_dir = root / section_id.value
        try:
            entries = sorted(e.name for e in section_dir.iterdir())
        except (FileNotFoundError, NotADirectoryError):
            raise CorpusError(f"no exemplar directory for {section_id.value}")
        exemplars = []
        for name in entries:
            if not name.endswith(".txt"):
                continue
            body = (section_dir / name).read_text(encoding="utf-8").strip()
            if not body:
                raise CorpusError(f"empty exemplar body: {section_id.value}/{name}")
            meta_name = name[: -len(".txt")] + ".meta"
            meta = _parse_meta(
                (section_dir / meta_name).read_text(encoding="utf-8"),
                f"{section_id.value}/{meta_name}",
            )
            exemplars.append(
                Exemplar(
                    exemplar_id=meta["exemplar_id"],
                    section_id=section_id,
                    title=meta["title"],
                    body=body,
                    source_url=meta["source_url"],
                )
            )
        if not exemplars:
            raise CorpusError(f"no exemplars shipped for {section_id.value}")
        out[section_id] = tuple(exemplars)
    return out


def exemplars_for(section_id: SectionId) -> tuple[Exemplar, ...]:
    return _load_exemplars()[section_id]


@lru_cache(maxsize=1)
def _load_tooltips() -> dict[SectionId, tuple[str, ...]]:
    root = _corpus_root() / "tooltips"
    out: dict[SectionId, tuple[str, ...]] = {}
    for section_id in CANONICAL_ORDER:
        try:
            text = (root / f"{section_id.value}.txt").read_text(encoding="utf-8")
        except FileNotFoundError:
            raise CorpusError(f"no tooltip file for {section_id.value}")
        questions = tuple(line.strip() for line in text.splitlines() if line.strip())
        if not 3 <= len(questions) <= 5:
            raise CorpusError(
                f"{section_id.value}: expected 3..5 tooltip questions, got {len(questions)}"
            )
        out[section_id] = questions
    return out


def tooltip_questions(section_id: SectionId) -> tuple[str, ...]:
    return _load_tooltips()[section_id]


@lru_cache(maxsize=1)
def experts_raw() -> tuple[dict, ...]:
    """Expert directory entries in file order. Shape is validated by pitch-prep."""
    try:
        data = json.loads((_corpus_root() / "experts.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CorpusError("experts.json missing from corpus")
    if not isinstance(data, list) or not data:
        raise CorpusError("experts.json must be a nonempty list")
    return tuple(data)
