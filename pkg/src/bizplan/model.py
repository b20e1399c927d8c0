"""Core document model: goals, business context, sections, revisions.

A PlanDocument is an immutable value. Every mutation appends a revision
and yields a new value; the revision history together with its change
payloads fully determines the document (see :func:`replay`).

The interchange form produced by :meth:`PlanDocument.to_interchange` is
canonical JSON bytes (key-sorted, UTF-8, no insignificant whitespace).
"byte-identical" throughout this package means equality of those bytes.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from datetime import datetime

from . import richtext
from .canonical import canonical_json
from .clock import format_timestamp, parse_timestamp
from .richtext import RichText
from .sections import CANONICAL_ORDER, SectionId

SUMMARY_MAX_CHARS = 2000

AUTHORS = ("user", "assistant")

# Change kinds that replace a single section's content.
SECTION_CHANGE_KINDS = ("section_replace", "inline_insert", "style_only")
CHANGE_KINDS = ("full_draft",) + SECTION_CHANGE_KINDS


class ModelError(ValueError):
    """Base for core-model validation failures."""


class InvalidGoal(ModelError):
    pass


class InvalidContext(ModelError):
    pass


class MissingSection(ModelError):
    pass


class GapInHistory(ModelError):
    """Revision list is empty, out of order, or mislinked."""


class PayloadMismatch(ModelError):
    """Change payloads do not line up with the revision list."""


class FactCategory(str, enum.Enum):
    offering = "offering"
    customers = "customers"
    location = "location"
    stage = "stage"
    team = "team"
    pricing = "pricing"
    other = "other"


@dataclass(frozen=True)
class Goal:
    id: str
    label: str
    detail: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidGoal("goal id must be nonempty")
        if not self.label.strip():
            raise InvalidGoal("goal label must be nonempty")

    def to_wire(self) -> dict:
        return {"id": self.id, "label": self.label, "detail": self.detail}

    @classmethod
    def from_wire(cls, data: dict) -> "Goal":
        return cls(id=data["id"], label=data["label"], detail=data.get("detail", ""))


@dataclass(frozen=True)
class Fact:
    category: FactCategory
    statement: str

    def __post_init__(self) -> None:
        if not isinstance(self.category, FactCategory):
            try:
                object.__setattr__(self, "category", FactCategory(self.category))
            except ValueError:
                raise InvalidContext(f"unknown fact category: {self.category!r}")
        if not self.statement.strip():
            raise InvalidContext("fact statement must be nonempty")

    def to_wire(self) -> dict:
        return {"category": self.category.value, "statement": self.statement}

    @classmethod
    def from_wire(cls, data: dict) -> "Fact":
        return cls(FactCategory(data["category"]), data["statement"])


@dataclass(frozen=True)
class Source:
    """Where the business context came from."""

    kind: str  # website | chat | manual
    url: str | None = None
    conversation_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "website":
            if not self.url:
                raise InvalidContext("website source requires a url")
            if self.conversation_id is not None:
                raise InvalidContext("website source must not carry a conversation id")
        elif self.kind == "chat":
            if not self.conversation_id:
                raise InvalidContext("chat source requires a conversation id")
            if self.url is not None:
                raise InvalidContext("chat source must not carry a url")
        elif self.kind == "manual":
            if self.url is not None or self.conversation_id is not None:
                raise InvalidContext("manual source carries no reference")
        else:
            raise InvalidContext(f"unknown source kind: {self.kind!r}")

    def to_wire(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.url is not None:
            out["url"] = self.url
        if self.conversation_id is not None:
            out["conversation_id"] = self.conversation_id
        return out

    @classmethod
    def from_wire(cls, data: dict) -> "Source":
        return cls(
            kind=data["kind"],
            url=data.get("url"),
            conversation_id=data.get("conversation_id"),
        )


@dataclass(frozen=True)
class BusinessContext:
    business_name: str
    summary: str
    facts: tuple[Fact, ...]
    source: Source

    def __post_init__(self) -> None:
        if len(self.summary) > SUMMARY_MAX_CHARS:
            raise InvalidContext(
                f"summary exceeds {SUMMARY_MAX_CHARS} characters ({len(self.summary)})"
            )
        if not self.facts and not self.summary.strip():
            raise InvalidContext("summary must be nonempty when there are no facts")

    def to_wire(self) -> dict:
        return {
            "business_name": self.business_name,
            "summary": self.summary,
            "facts": [f.to_wire() for f in self.facts],
            "source": self.source.to_wire(),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "BusinessContext":
        return cls(
            business_name=data["business_name"],
            summary=data["summary"],
            facts=tuple(Fact.from_wire(f) for f in data["facts"]),
            source=Source.from_wire(data["source"]),
        )


@dataclass(frozen=True)
class Change:
    kind: str
    section_id: SectionId | None = None

    def __post_init__(self) -> None:
        if self.kind not in CHANGE_KINDS:
            raise ModelError(f"unknown change kind: {self.kind!r}")
        if self.kind == "full_draft":
            if self.section_id is not None:
                raise ModelError("full_draft change carries no section id")
        elif self.section_id is None:
            raise ModelError(f"{self.kind} change requires a section id")

    def to_wire(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.section_id is not None:
            out["section_id"] = self.section_id.value
        return out

    @classmethod
    def from_wire(cls, data: dict) -> "Change":
        sid = data.get("section_id")
        return cls(data["kind"], SectionId.parse(sid) if sid is not None else None)


@dataclass(frozen=True)
class Revision:
    index: int
    parent_index: int | None
    author: str
    change: Change
    timestamp: datetime

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ModelError("revision index must be non-negative")
        expected_parent = None if self.index == 0 else self.index - 1
        if self.parent_index != expected_parent:
            raise ModelError(
                f"revision {self.index} must have parent {expected_parent}, "
                f"got {self.parent_index}"
            )
        if self.author not in AUTHORS:
            raise ModelError(f"unknown author: {self.author!r}")

    def to_wire(self) -> dict:
        return {
            "index": self.index,
            "parent_index": self.parent_index,
            "author": self.author,
            "change": self.change.to_wire(),
            "timestamp": format_timestamp(self.timestamp),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "Revision":
        return cls(
            index=data["index"],
            parent_index=data["parent_index"],
            author=data["author"],
            change=Change.from_wire(data["change"]),
            timestamp=parse_timestamp(data["timestamp"]),
        )


@dataclass(frozen=True)
class PlanSection:
    section_id: SectionId
    content: RichText
    completeness: float

    def to_wire(self) -> dict:
        return {
            "section_id": self.section_id.value,
            "content": richtext.to_wire(self.content),
            "completeness": self.completeness,
        }


def _build_section(section_id: SectionId, content: RichText) -> PlanSection:
    content = richtext.normalize(content)
    return PlanSection(section_id, content, richtext.completeness(content))


@dataclass(frozen=True)
class PlanDocument:
    document_id: str
    owner: str
    goals: tuple[Goal, ...]
    context: BusinessContext
    sections: tuple[PlanSection, ...]
    revisions: tuple[Revision, ...]
    # Change payloads parallel to revisions. Carried in memory so that
    # history(d) is self-contained; excluded from the interchange form.
    payloads: tuple[dict, ...] = field(default_factory=tuple, compare=False)

    @property
    def head(self) -> int:
        return len(self.revisions) - 1

    def section(self, section_id: SectionId) -> PlanSection:
        return self.sections[section_id.order]

    def to_wire(self) -> dict:
        return {
            "document_id": self.document_id,
            "owner": self.owner,
            "goals": [g.to_wire() for g in self.goals],
            "context": self.context.to_wire(),
            "sections": [s.to_wire() for s in self.sections],
            "revisions": [r.to_wire() for r in self.revisions],
            "head": self.head,
        }

    def to_interchange(self) -> bytes:
        return canonical_json(self.to_wire())

    @classmethod
    def from_wire(cls, data: dict) -> "PlanDocument":
        """Parse the interchange form. Payloads are not serialized, so the
        returned value cannot itself be replayed; histories live in the
        event log."""
        sections = []
        for raw in data["sections"]:
            sid = SectionId.parse(raw["section_id"])
            content = richtext.from_wire(raw["content"])
            sections.append(PlanSection(sid, content, raw["completeness"]))
        doc = cls(
            document_id=data["document_id"],
            owner=data["owner"],
            goals=tuple(Goal.from_wire(g) for g in data["goals"]),
            context=BusinessContext.from_wire(data["context"]),
            sections=tuple(sections),
            revisions=tuple(Revision.from_wire(r) for r in data["revisions"]),
        )
        _check_document(doc)
        if data["head"] != doc.head:
            raise ModelError(f"head {data['head']} does not match revisions")
        return doc

    @classmethod
    def from_interchange(cls, data: bytes) -> "PlanDocument":
        return cls.from_wire(json.loads(data.decode("utf-8")))

    def history(self) -> tuple[tuple[Revision, ...], tuple[dict, ...]]:
        return self.revisions, self.payloads

    def with_section_replaced(
        self,
        section_id: SectionId,
        content: RichText,
        *,
        author: str,
        timestamp: datetime,
        change_kind: str = "section_replace",
    ) -> "PlanDocument":
        """Append a revision replacing one section's content."""
        if change_kind not in SECTION_CHANGE_KINDS:
            raise ModelError(f"not a section change kind: {change_kind!r}")
        replaced = _build_section(section_id, content)
        sections = tuple(
            replaced if s.section_id == section_id else s for s in self.sections
        )
        revision = Revision(
            index=self.head + 1,
            parent_index=self.head,
            author=author,
            change=Change(change_kind, section_id),
            timestamp=timestamp,
        )
        payload = {"content": richtext.to_wire(replaced.content)}
        return PlanDocument(
            document_id=self.document_id,
            owner=self.owner,
            goals=self.goals,
            context=self.context,
            sections=sections,
            revisions=self.revisions + (revision,),
            payloads=self.payloads + (payload,),
        )


def _check_document(doc: PlanDocument) -> None:
    ids = tuple(s.section_id for s in doc.sections)
    if ids != CANONICAL_ORDER:
        raise MissingSection("sections must cover all nine ids in canonical order")
    if not doc.revisions:
        raise GapInHistory("document has no revisions")
    for i, rev in enumerate(doc.revisions):
        if rev.index != i:
            raise GapInHistory(f"expected revision index {i}, got {rev.index}")
    if doc.revisions[0].change.kind != "full_draft":
        raise GapInHistory("revision 0 must be a full_draft")
    for rev in doc.revisions[1:]:
        if rev.change.kind == "full_draft":
            raise GapInHistory("full_draft is only valid at revision 0")
    seen: set[str] = set()
    for goal in doc.goals:
        if goal.id in seen:
            raise InvalidGoal(f"duplicate goal id: {goal.id}")
        seen.add(goal.id)


def new_document(
    context: BusinessContext,
    goals: list[Goal] | tuple[Goal, ...],
    initial_sections: dict[SectionId, RichText],
    *,
    document_id: str,
    owner: str,
    author: str = "user",
    timestamp: datetime,
) -> PlanDocument:
    """Create a document at revision 0 (full_draft)."""
    missing = [sid.value for sid in CANONICAL_ORDER if sid not in initial_sections]
    if missing:
        raise MissingSection(f"initial sections missing: {', '.join(missing)}")
    unknown = [k for k in initial_sections if not isinstance(k, SectionId)]
    if unknown:
        raise MissingSection(f"unknown section keys: {unknown!r}")
    sections = tuple(_build_section(sid, initial_sections[sid]) for sid in CANONICAL_ORDER)
    revision = Revision(
        index=0,
        parent_index=None,
        author=author,
        change=Change("full_draft"),
        timestamp=timestamp,
    )
    payload = {
        "document_id": document_id,
        "owner": owner,
        "context": context.to_wire(),
        "goals": [g.to_wire() for g in goals],
        "sections": {s.section_id.value: richtext.to_wire(s.content) for s in sections},
    }
    doc = PlanDocument(
        document_id=document_id,
        owner=owner,
        goals=tuple(goals),
        context=context,
        sections=sections,
        revisions=(revision,),
        payloads=(payload,),
    )
    _check_document(doc)
    return doc


def replay(
    revisions: list[Revision] | tuple[Revision, ...],
    payloads: list[dict] | tuple[dict, ...],
) -> PlanDocument:
    """Reconstruct a document from its recorded history.

    Raises GapInHistory for missing/misordered revisions and
    PayloadMismatch when a payload does not fit its revision's change.
    """
    revisions = tuple(revisions)
    payloads = tuple(payloads)
    if not revisions:
        raise GapInHistory("empty history: no revision 0")
    if len(payloads) != len(revisions):
        raise PayloadMismatch(
            f"{len(revisions)} revisions but {len(payloads)} payloads"
        )
    for i, rev in enumerate(revisions):
        if rev.index != i:
            raise GapInHistory(f"expected revision index {i}, got {rev.index}")
    first = revisions[0]
    if first.change.kind != "full_draft":
        raise GapInHistory("revision 0 must be a full_draft")

    base = payloads[0]
    required = {"document_id", "owner", "context", "goals", "sections"}
    if not isinstance(base, dict) or not required.issubset(base):
        raise PayloadMismatch("full_draft payload must carry document metadata")
    try:
        context = BusinessContext.from_wire(base["context"])
        goals = tuple(Goal.from_wire(g) for g in base["goals"])
        initial = {
            SectionId.parse(k): richtext.from_wire(v)
            for k, v in base["sections"].items()
        }
    except (KeyError, ValueError) as exc:
        raise PayloadMismatch(f"malformed full_draft payload: {exc}") from exc
    if set(initial) != set(CANONICAL_ORDER):
        raise PayloadMismatch("full_draft payload must cover all nine sections")

    doc = new_document(
        context,
        goals,
        initial,
        document_id=base["document_id"],
        owner=base["owner"],
        author=first.author,
        timestamp=first.timestamp,
    )

    for rev, payload in zip(revisions[1:], payloads[1:]):
        if rev.change.kind == "full_draft":
            raise GapInHistory("full_draft is only valid at revision 0")
        if not isinstance(payload, dict) or "content" not in payload:
            raise PayloadMismatch(f"revision {rev.index} payload lacks content")
        try:
            content = richtext.from_wire(payload["content"])
        except ValueError as exc:
            raise PayloadMismatch(f"revision {rev.index}: {exc}") from exc
        assert rev.change.section_id is not None
        doc = doc.with_section_replaced(
            rev.change.section_id,
            content,
            author=rev.author,
            timestamp=rev.timestamp,
            change_kind=rev.change.kind,
        )
    return doc
