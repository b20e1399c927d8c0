"""Interactive assistance: exploit/explore prompt pairs, edit proposals,
one-click apply, and inline generation.

Topic selection is deliberately rule-based and deterministic:

* ``current_topic`` is the focus of the latest tagged turn, else the last
  edited section, else the executive summary.
* ``explore_target`` is the least-complete section outside the current
  topic and outside the last four turns' focuses (window relaxed when it
  would exclude everything), ties broken by canonical order.

Edit proposals arrive from the model inside sentinel-fenced blocks
appended to the prose reply; the prose streams to the caller, the blocks
never do. A reply whose blocks are all malformed is retried once with a
reformat instruction and then degraded to a plain reply with no proposals.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Awaitable, Callable, Optional, Union

from . import corpus, markup, richtext
from .canonical import canonical_hash
from .corpus import Exemplar
from .gateway import Gateway, GatewayError, Message, Route
from .model import Goal, PlanDocument
from .richtext import RichText
from .sections import CANONICAL_ORDER, SectionId

logger = logging.getLogger(__name__)

SUGGESTION_MAX_CHARS = 200

MAX_PROPOSALS = 3
MAX_INLINE_CANDIDATES = 3

RECENCY_WINDOW_TURNS = 4
CONVERSATION_TAIL_TURNS = 8

PROPOSAL_OPEN = "<<<PROPOSAL"
PROPOSAL_CLOSE = ">>>"
CANDIDATE_SEPARATOR = "---"

SUGGEST_SYSTEM_PROMPT = (
    "You write prompt suggestions for a business-plan assistant. Each "
    "suggestion is a short message the entrepreneur could send next, under "
    "160 characters, phrased in their voice. Reply with exactly two lines:\n"
    "EXPLOIT: <a prompt that digs deeper into the current section>\n"
    "EXPLORE: <a prompt that opens work on the other named section>\n"
    "No other text."
)

PROPOSAL_SYSTEM_PROMPT = (
    "You are a business-plan assistant. Answer the user's message in plain "
    "prose first. When a concrete rewrite of a section would help, append "
    "up to three proposal blocks AFTER your prose, each in exactly this "
    "form:\n"
    "<<<PROPOSAL\n"
    "SECTION: <section id>\n"
    "GOALS: <comma-separated goal ids this serves, may be empty>\n"
    "RATIONALE: <one line>\n"
    "CONTENT:\n"
    "<the full replacement section body in restricted markup: #/##/### "
    "headings, - bullets, blank-line paragraphs, **bold**, *italic*>\n"
    ">>>\n"
    "The CONTENT replaces the whole section, so carry over anything worth "
    "keeping. Never put prose after the last block."
)

PROPOSAL_REFORMAT_INSTRUCTION = (
    "Your previous reply contained a proposal block that does not follow the "
    "required form. Repeat the reply with every proposal block exactly in "
    "the specified layout (SECTION:, GOALS:, RATIONALE:, CONTENT:, then the "
    "body, then >>>)."
)

INLINE_SYSTEM_PROMPT = (
    "You generate candidate text insertions for one section of a business "
    "plan, following the user's criteria exactly. Produce 1 to 3 "
    "candidates separated by a line containing only ---. Each candidate is "
    "restricted markup (#/##/### headings, - bullets, blank-line "
    "paragraphs, **bold**, *italic*) with no preamble."
)


class SuggestionError(Exception):
    pass


class StaleProposal(SuggestionError):
    """The plan moved past the proposal's base revision; refresh and retry."""

    def __init__(self, head: int, base_revision: int) -> None:
        super().__init__(
            f"proposal based on revision {base_revision} but head is {head}"
        )
        self.head = head
        self.base_revision = base_revision


class UnknownSection(SuggestionError, ValueError):
    pass


@dataclass(frozen=True)
class ChatTurn:
    turn_index: int
    role: str
    text: str
    focus_section: Optional[SectionId] = None

    def to_wire(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "role": self.role,
            "text": self.text,
            "focus_section": self.focus_section.value if self.focus_section else None,
        }

    @classmethod
    def from_wire(cls, data: dict) -> "ChatTurn":
        focus = data.get("focus_section")
        return cls(
            turn_index=data["turn_index"],
            role=data["role"],
            text=data["text"],
            focus_section=SectionId.parse(focus) if focus else None,
        )


@dataclass(frozen=True)
class PromptSuggestion:
    kind: str  # exploitation | exploration
    text: str
    target_section: SectionId

    def __post_init__(self) -> None:
        if self.kind not in ("exploitation", "exploration"):
            raise ValueError(f"unknown suggestion kind: {self.kind!r}")
        if not self.text or len(self.text) > SUGGESTION_MAX_CHARS:
            raise ValueError("suggestion text must be 1..200 characters")

    def to_wire(self) -> dict:
        return {
            "kind": self.kind,
            "text": self.text,
            "target_section": self.target_section.value,
        }


@dataclass(frozen=True)
class EditProposal:
    proposal_id: str
    base_revision: int
    target_section: SectionId
    replacement: RichText
    rationale: str
    goal_ids: tuple[str, ...]

    def to_wire(self) -> dict:
        return {
            "proposal_id": self.proposal_id,
            "base_revision": self.base_revision,
            "target_section": self.target_section.value,
            "replacement": richtext.to_wire(self.replacement),
            "rationale": self.rationale,
            "goal_ids": list(self.goal_ids),
        }


@dataclass(frozen=True)
class InlineRequest:
    section_id: SectionId
    criteria: str
    cursor_block: int = 0


def _proposal_id(
    base_revision: int,
    target_section: SectionId,
    replacement: RichText,
    rationale: str,
    goal_ids: tuple[str, ...],
) -> str:
    digest = canonical_hash({
        "base_revision": base_revision,
        "target_section": target_section.value,
        "replacement": richtext.to_wire(replacement),
        "rationale": rationale,
        "goal_ids": list(goal_ids),
    })
    return "p-" + digest[:12]


def make_proposal(
    base_revision: int,
    target_section: SectionId,
    replacement: RichText,
    rationale: str,
    goal_ids: tuple[str, ...],
) -> EditProposal:
    replacement = richtext.normalize(replacement)
    return EditProposal(
        proposal_id=_proposal_id(base_revision, target_section, replacement, rationale, goal_ids),
        base_revision=base_revision,
        target_section=target_section,
        replacement=replacement,
        rationale=rationale,
        goal_ids=goal_ids,
    )


# Topic selection ------------------------------------------------------------

def current_topic(conversation: list[ChatTurn], plan: PlanDocument) -> SectionId:
    for turn in reversed(conversation):
        if turn.focus_section is not None:
            return turn.focus_section
    for revision in reversed(plan.revisions):
        if revision.change.section_id is not None:
            return revision.change.section_id
    return SectionId.EXECUTIVE_SUMMARY


def explore_target(conversation: list[ChatTurn], plan: PlanDocument) -> SectionId:
    current = current_topic(conversation, plan)
    recent = {
        turn.focus_section
        for turn in conversation[-RECENCY_WINDOW_TURNS:]
        if turn.focus_section is not None
    }
    candidates = [s for s in CANONICAL_ORDER if s != current and s not in recent]
    if not candidates:
        candidates = [s for s in CANONICAL_ORDER if s != current]
    # min() keeps the first of equal keys, which is canonical order here.
    return min(candidates, key=lambda s: plan.section(s).completeness)


def completeness_score(section) -> float:
    return richtext.completeness(section.content)


# Turn focus tagging ---------------------------------------------------------

_FOCUS_KEYWORDS: dict[SectionId, tuple[str, ...]] = {
    SectionId.EXECUTIVE_SUMMARY: ("executive summary", "exec summary", "overview"),
    SectionId.COMPANY_DESCRIPTION: ("company description", "about us", "our story", "mission"),
    SectionId.MARKET_ANALYSIS: (
        "market analysis", "market", "markets", "competitor", "competitors",
        "competition", "customer", "customers",
    ),
    SectionId.ORGANIZATION_MANAGEMENT: (
        "organization", "management", "team", "founders", "staff",
    ),
    SectionId.SERVICE_PRODUCT_LINE: (
        "product", "products", "service line", "services", "offering", "offerings", "menu",
    ),
    SectionId.MARKETING_SALES: (
        "marketing", "sales", "advertising", "promotion", "outreach",
    ),
    SectionId.FUNDING_REQUEST: (
        "funding", "loan", "grant", "investor", "investors", "capital",
    ),
    SectionId.FINANCIAL_PROJECTIONS: (
        "financials", "projections", "forecast", "revenue", "profit",
        "cash flow", "break even",
    ),
    SectionId.APPENDIX: ("appendix", "attachments", "supporting documents"),
}

_FOCUS_PATTERNS = {
    sid: re.compile(
        r"\b(?:" + "|".join(re.escape(k) for k in keywords) + r")\b", re.IGNORECASE
    )
    for sid, keywords in _FOCUS_KEYWORDS.items()
}


def tag_focus_section(text: str) -> Optional[SectionId]:
    """Keyword matcher; first hit in canonical order wins. None when silent."""
    for section_id in CANONICAL_ORDER:
        if _FOCUS_PATTERNS[section_id].search(text):
            return section_id
    return None


# Prompt suggestions ---------------------------------------------------------

def _render_goal_lines(goals: tuple[Goal, ...]) -> str:
    if not goals:
        return "(none stated)"
    return "\n".join(
        f"- [{g.id}] {g.label}" + (f": {g.detail}" if g.detail else "") for g in goals
    )


def suggest_prompts_request(gateway: Gateway, exploit: SectionId, explore: SectionId, goals):
    user = (
        f"GOALS:\n{_render_goal_lines(tuple(goals))}\n\n"
        f"Current section being discussed: {exploit.display_name}.\n"
        f"Section to open next: {explore.display_name}.\n"
        "Write the EXPLOIT and EXPLORE lines now."
    )
    return gateway.build_request(
        Route.chat, (Message("system", SUGGEST_SYSTEM_PROMPT), Message("user", user))
    )


def _fallback_pair(exploit: SectionId, explore: SectionId) -> tuple[PromptSuggestion, PromptSuggestion]:
    return (
        PromptSuggestion(
            "exploitation",
            f"Tell me more about improving my {exploit.display_name} section.",
            exploit,
        ),
        PromptSuggestion(
            "exploration",
            f"Let's work on your {explore.display_name} section.",
            explore,
        ),
    )


def _parse_suggestion_lines(content: str) -> Optional[tuple[str, str]]:
    exploit_text = explore_text = None
    for line in content.splitlines():
        line = line.strip()
        if line.startswith("EXPLOIT:") and exploit_text is None:
            exploit_text = line[len("EXPLOIT:"):].strip()
        elif line.startswith("EXPLORE:") and explore_text is None:
            explore_text = line[len("EXPLORE:"):].strip()
    if not exploit_text or not explore_text:
        return None
    return exploit_text[:SUGGESTION_MAX_CHARS], explore_text[:SUGGESTION_MAX_CHARS]


async def suggest_prompts(
    conversation: list[ChatTurn], plan: PlanDocument, gateway: Gateway
) -> tuple[PromptSuggestion, PromptSuggestion]:
    """Always returns exactly (exploitation, exploration)."""
    exploit = current_topic(conversation, plan)
    explore = explore_target(conversation, plan)
    try:
        response = await gateway.complete(
            suggest_prompts_request(gateway, exploit, explore, plan.goals)
        )
        parsed = _parse_suggestion_lines(response.content)
    except GatewayError as exc:
        logger.info("suggestion call failed (%s); using fallback pair", exc)
        parsed = None
    if parsed is None:
        return _fallback_pair(exploit, explore)
    return (
        PromptSuggestion("exploitation", parsed[0], exploit),
        PromptSuggestion("exploration", parsed[1], explore),
    )


# Edit proposals -------------------------------------------------------------

Sink = Callable[[str], Union[None, Awaitable[None]]]


class _ProseStream:
    """Forwards increments to a sink, suppressing everything from the first
    proposal sentinel onward. Holds back a partial-sentinel tail so the
    sentinel never leaks across chunk boundaries."""

    def __init__(self, sink: Optional[Sink]) -> None:
        self._sink = sink
        self._carry = ""
        self._stopped = False

    async def _emit(self, text: str) -> None:
        if self._sink is None or not text:
            return
        result = self._sink(text)
        if result is not None and hasattr(result, "__await__"):
            await result

    async def push(self, chunk: str) -> None:
        if self._stopped:
            return
        buffer = self._carry + chunk
        found = buffer.find(PROPOSAL_OPEN)
        if found != -1:
            self._stopped = True
            self._carry = ""
            await self._emit(buffer[:found])
            return
        hold = 0
        for k in range(min(len(PROPOSAL_OPEN) - 1, len(buffer)), 0, -1):
            if PROPOSAL_OPEN.startswith(buffer[-k:]):
                hold = k
                break
        self._carry = buffer[len(buffer) - hold:] if hold else ""
        await self._emit(buffer[: len(buffer) - hold])

    async def flush(self) -> None:
        if not self._stopped:
            await self._emit(self._carry)
        self._carry = ""


def _parse_proposal_blocks(
    content: str, plan: PlanDocument
) -> tuple[list[EditProposal], bool]:
    """Returns (proposals, saw_malformed_block)."""
    lines = content.split("\n")
    proposals: list[EditProposal] = []
    malformed = False
    known_goal_ids = {g.id for g in plan.goals}

    i = 0
    while i < len(lines):
        if lines[i].strip() != PROPOSAL_OPEN:
            i += 1
            continue
        block: list[str] = []
        i += 1
        closed = False
        while i < len(lines):
            if lines[i].strip() == PROPOSAL_CLOSE:
                closed = True
                i += 1
                break
            block.append(lines[i])
            i += 1
        if not closed:
            malformed = True
            break

        section: Optional[SectionId] = None
        goal_ids: tuple[str, ...] = ()
        rationale = ""
        content_lines: Optional[list[str]] = None
        for line in block:
            if content_lines is not None:
                content_lines.append(line)
            elif line.startswith("SECTION:"):
                try:
                    section = SectionId.parse(line[len("SECTION:"):].strip())
                except ValueError:
                    section = None
            elif line.startswith("GOALS:"):
                raw_ids = re.split(r"[,\s]+", line[len("GOALS:"):].strip())
                goal_ids = tuple(g for g in raw_ids if g and g in known_goal_ids)
            elif line.startswith("RATIONALE:"):
                rationale = line[len("RATIONALE:"):].strip()
            elif line.strip() == "CONTENT:":
                content_lines = []
        replacement = markup.parse("\n".join(content_lines or []))
        if section is None or replacement.is_empty():
            malformed = True
            continue
        proposals.append(
            make_proposal(plan.head, section, replacement, rationale, goal_ids)
        )
    return proposals[:MAX_PROPOSALS], malformed


def _render_conversation_tail(conversation: list[ChatTurn]) -> str:
    tail = conversation[-CONVERSATION_TAIL_TURNS:]
    if not tail:
        return "(no prior turns)"
    labels = {"user": "User", "assistant": "Assistant"}
    return "\n".join(f"{labels.get(t.role, t.role)}: {t.text}" for t in tail)


def propose_edit_request(
    gateway: Gateway,
    user_message: str,
    conversation: list[ChatTurn],
    plan: PlanDocument,
    focus: SectionId,
    *,
    stream: bool,
):
    section = plan.section(focus)
    current = markup.render(section.content) or "(empty)"
    user = (
        f"GOALS:\n{_render_goal_lines(plan.goals)}\n\n"
        f"FOCUS SECTION: {focus.display_name} (id: {focus.value})\n"
        f"CURRENT CONTENT:\n{current}\n\n"
        f"RECENT CONVERSATION:\n{_render_conversation_tail(conversation)}\n\n"
        f"USER MESSAGE:\n{user_message}"
    )
    return gateway.build_request(
        Route.suggestions,
        (Message("system", PROPOSAL_SYSTEM_PROMPT), Message("user", user)),
        stream=stream,
    )


async def propose_edit(
    user_message: str,
    conversation: list[ChatTurn],
    plan: PlanDocument,
    gateway: Gateway,
    *,
    sink: Optional[Sink] = None,
) -> tuple[str, list[EditProposal]]:
    """Answer the user and extract 0..3 edit proposals.

    Prose increments flow to ``sink`` as they arrive; proposal blocks are
    parsed from the full reply and never streamed.
    """
    if not user_message.strip():
        raise ValueError("user message must be nonempty")
    focus = tag_focus_section(user_message) or current_topic(conversation, plan)

    prose = _ProseStream(sink)
    request = propose_edit_request(
        gateway, user_message, conversation, plan, focus, stream=True
    )
    response = await gateway.complete_stream(request, prose.push)
    await prose.flush()

    reply_text = response.content.split(PROPOSAL_OPEN, 1)[0].strip()
    proposals, malformed = _parse_proposal_blocks(response.content, plan)
    if malformed and not proposals:
        logger.info("proposal blocks unparseable; issuing reformat retry")
        retry_request = gateway.build_request(
            Route.suggestions,
            request.messages
            + (
                Message("assistant", response.content),
                Message("user", PROPOSAL_REFORMAT_INSTRUCTION),
            ),
        )
        try:
            retry_response = await gateway.complete(retry_request)
        except GatewayError as exc:
            logger.info("reformat retry failed (%s); degrading to prose", exc)
            return reply_text, []
        proposals, malformed = _parse_proposal_blocks(retry_response.content, plan)
        if malformed and not proposals:
            return reply_text, []
        retry_prose = retry_response.content.split(PROPOSAL_OPEN, 1)[0].strip()
        return reply_text or retry_prose, proposals
    return reply_text, proposals


def apply_edit(plan: PlanDocument, proposal: EditProposal, *, timestamp: datetime) -> PlanDocument:
    """Apply a proposal to the document head it was generated against."""
    if not isinstance(proposal.target_section, SectionId):
        raise UnknownSection(f"unknown section: {proposal.target_section!r}")
    if proposal.base_revision != plan.head:
        raise StaleProposal(head=plan.head, base_revision=proposal.base_revision)
    return plan.with_section_replaced(
        proposal.target_section,
        proposal.replacement,
        author="assistant",
        timestamp=timestamp,
        change_kind="section_replace",
    )


# Inline generation ----------------------------------------------------------

def inline_request_messages(request: InlineRequest, plan: PlanDocument) -> tuple[Message, ...]:
    section = plan.section(request.section_id)
    current = markup.render(section.content) or "(empty)"
    user = (
        f"SECTION: {request.section_id.display_name} (id: {request.section_id.value})\n"
        f"CURRENT CONTENT:\n{current}\n\n"
        f"The user is inserting text at block index {request.cursor_block}.\n"
        f"CRITERIA:\n{request.criteria}"
    )
    return (Message("system", INLINE_SYSTEM_PROMPT), Message("user", user))


async def inline_generate(
    request: InlineRequest, plan: PlanDocument, gateway: Gateway
) -> tuple[list[RichText], tuple[Exemplar, ...]]:
    """1..3 candidate insertions plus the section's full exemplar list."""
    if not request.criteria.strip():
        raise ValueError("criteria must be nonempty")
    provider_request = gateway.build_request(
        Route.suggestions, inline_request_messages(request, plan)
    )
    response = await gateway.complete(provider_request)

    pieces: list[str] = []
    current: list[str] = []
    for line in response.content.split("\n"):
        if line.strip() == CANDIDATE_SEPARATOR:
            pieces.append("\n".join(current))
            current = []
        else:
            current.append(line)
    pieces.append("\n".join(current))

    candidates = [c for c in (markup.parse(p) for p in pieces) if not c.is_empty()]
    if not candidates:
        whole = markup.parse(response.content)
        if whole.is_empty():
            raise GatewayError("inline generation produced no usable candidates")
        candidates = [whole]
    return candidates[:MAX_INLINE_CANDIDATES], corpus.exemplars_for(request.section_id)


def tooltip_questions(section_id: SectionId) -> tuple[str, ...]:
    return corpus.tooltip_questions(section_id)
