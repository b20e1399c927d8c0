"""Pitch preparation: tailored questions to ask an expert, plus the
static expert directory.

Question lists from the model are normalized and clamped to 5..8: extras
are truncated in order, shortfalls are padded with a deterministic
template targeting the least-complete sections. The reply must contain at
least one recognizable question (after one reformat retry) or
QuestionParseFailed is raised.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from datetime import datetime
from functools import lru_cache
from typing import Optional

from . import corpus, markup
from .clock import Clock, format_timestamp
from .gateway import Gateway, Message, Route
from .model import PlanDocument
from .sections import SectionId

logger = logging.getLogger(__name__)

MIN_QUESTIONS = 5
MAX_QUESTIONS = 8

PITCH_SYSTEM_PROMPT = (
    "You prepare an entrepreneur to meet a business expert. Given their "
    "plan and the goal they are pursuing, write the questions they should "
    "ask the expert. Reply with one question per line, each starting with "
    "'- ' and ending with a question mark. Write 5 to 8 questions. No "
    "other text."
)

PITCH_REFORMAT_INSTRUCTION = (
    "Your previous reply contained no recognizable questions. Reply again "
    "with one question per line, each starting with '- ' and ending with "
    "a question mark."
)

PAD_TEMPLATE = "What is the weakest part of my {section} section?"

_LIST_MARKER = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+")


class PitchError(Exception):
    pass


class UnknownGoal(PitchError, ValueError):
    pass


class QuestionParseFailed(PitchError):
    pass


@dataclass(frozen=True)
class PitchPrep:
    document_id: str
    goal_id: str
    questions: tuple[str, ...]
    generated_at: datetime
    head_at_generation: int

    def to_wire(self) -> dict:
        return {
            "document_id": self.document_id,
            "goal_id": self.goal_id,
            "questions": list(self.questions),
            "generated_at": format_timestamp(self.generated_at),
            "head_at_generation": self.head_at_generation,
        }


@dataclass(frozen=True)
class ExpertProfile:
    expert_id: str
    name: str
    focus_areas: tuple[SectionId, ...]
    contact_url: str

    def __post_init__(self) -> None:
        if not self.focus_areas:
            raise ValueError("expert must list at least one focus area")

    def to_wire(self) -> dict:
        return {
            "expert_id": self.expert_id,
            "name": self.name,
            "focus_areas": [s.value for s in self.focus_areas],
            "contact_url": self.contact_url,
        }


def parse_questions(content: str) -> list[str]:
    """Lines that are questions: marked list items or lines ending in '?'.
    List markers are stripped; a marked line missing its '?' gets one."""
    questions: list[str] = []
    for line in content.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        marked = _LIST_MARKER.match(stripped) is not None
        text = _LIST_MARKER.sub("", stripped).strip()
        if not text:
            continue
        if text.endswith("?"):
            questions.append(text)
        elif marked:
            questions.append(text.rstrip(".!") + "?")
    return questions


def _pad_questions(questions: list[str], plan: PlanDocument) -> list[str]:
    # Least-complete sections first; ties resolve to canonical order.
    ranked = sorted(plan.sections, key=lambda s: s.completeness)
    for section in ranked:
        if len(questions) >= MIN_QUESTIONS:
            break
        candidate = PAD_TEMPLATE.format(section=section.section_id.display_name)
        if candidate not in questions:
            questions.append(candidate)
    return questions


def _render_plan(plan: PlanDocument) -> str:
    parts = []
    for section in plan.sections:
        body = markup.render(section.content) or "(empty)"
        parts.append(f"# {section.section_id.display_name}\n{body}")
    return "\n\n".join(parts)


def pitch_request(gateway: Gateway, plan: PlanDocument, goal) -> object:
    user = (
        f"GOAL: {goal.label}" + (f" ({goal.detail})" if goal.detail else "") + "\n\n"
        f"BUSINESS PLAN:\n{_render_plan(plan)}\n\n"
        "Write the questions now."
    )
    return gateway.build_request(
        Route.pitch_prep, (Message("system", PITCH_SYSTEM_PROMPT), Message("user", user))
    )


async def prepare_pitch(
    plan: PlanDocument, goal_id: str, gateway: Gateway, *, clock: Clock
) -> PitchPrep:
    goal = next((g for g in plan.goals if g.id == goal_id), None)
    if goal is None:
        raise UnknownGoal(f"no goal {goal_id!r} on document {plan.document_id}")

    request = pitch_request(gateway, plan, goal)
    response = await gateway.complete(request)
    questions = parse_questions(response.content)
    if not questions:
        logger.info("pitch reply had no questions; issuing reformat retry")
        retry = gateway.build_request(
            Route.pitch_prep,
            request.messages
            + (
                Message("assistant", response.content),
                Message("user", PITCH_REFORMAT_INSTRUCTION),
            ),
        )
        retry_response = await gateway.complete(retry)
        questions = parse_questions(retry_response.content)
        if not questions:
            raise QuestionParseFailed("no questions parsed after reformat retry")

    questions = _pad_questions(questions[:MAX_QUESTIONS], plan)
    return PitchPrep(
        document_id=plan.document_id,
        goal_id=goal_id,
        questions=tuple(questions),
        generated_at=clock.now(),
        head_at_generation=plan.head,
    )


@lru_cache(maxsize=1)
def _directory() -> tuple[ExpertProfile, ...]:
    profiles = []
    for raw in corpus.experts_raw():
        profiles.append(
            ExpertProfile(
                expert_id=raw["expert_id"],
                name=raw["name"],
                focus_areas=tuple(SectionId.parse(s) for s in raw["focus_areas"]),
                contact_url=raw["contact_url"],
            )
        )
    return tuple(profiles)


def list_experts(focus: Optional[SectionId] = None) -> tuple[ExpertProfile, ...]:
    directory = _directory()
    if focus is None:
        return directory
    return tuple(p for p in directory if focus in p.focus_areas)
