"""First-draft generation: few-shot prompts, nine-way fan-out, assembly.

Each section gets its own prompt built from the business context, the
goals, and the first k exemplars for that section (k = 2 when the corpus
has two or more). The nine section requests run concurrently; results are
assembled in canonical order, so the output never depends on arrival
order. Any failed section aborts the whole draft.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass
from typing import Awaitable, Callable, Optional

from . import corpus, markup
from .clock import Clock
from .corpus import Exemplar
from .gateway import Gateway, GatewayError, Message, Route
from .model import BusinessContext, Goal, PlanDocument, new_document
from .richtext import RichText
from .sections import CANONICAL_ORDER, SectionId

logger = logging.getLogger(__name__)

EXEMPLARS_PER_PROMPT = 2

EXAMPLE_OPEN = "<<<EXAMPLE"
EXAMPLE_CLOSE = ">>>"

OUTPUT_FORMAT_INSTRUCTIONS = (
    "Write only the section body. Format it with this restricted markup: "
    "'#', '##', '###' headings; '-' bullet items; blank lines between "
    "paragraphs; **bold** and *italic*. No other markdown, no HTML, no "
    "preamble, no sign-off."
)


class GenerationError(Exception):
    pass


class NoExemplar(GenerationError):
    pass


class SectionGenerationFailed(GenerationError):
    def __init__(self, section_id: SectionId, cause: Exception) -> None:
        super().__init__(f"generation failed for {section_id.value}: {cause}")
        self.section_id = section_id
        self.cause = cause


class PartialParse(GenerationError):
    def __init__(self, section_id: SectionId) -> None:
        super().__init__(f"response for {section_id.value} parsed to empty content")
        self.section_id = section_id


@dataclass(frozen=True)
class PromptBundle:
    section_id: SectionId
    system: str
    user: str
    k: int


def _section_system_prompt(section_id: SectionId) -> str:
    return (
        f"You are drafting the {section_id.display_name} section of a small "
        "business plan. Ground every claim in the supplied business context; "
        "where specifics are missing, keep statements modest and generic "
        "rather than inventing numbers. Match the tone and scope of the "
        "examples provided."
    )


def render_goals_block(goals: list[Goal] | tuple[Goal, ...]) -> str:
    if not goals:
        return "GOALS:\n(none stated)"
    lines = ["GOALS:"]
    for goal in goals:
        suffix = f": {goal.detail}" if goal.detail else ""
        lines.append(f"- {goal.label}{suffix}")
    return "\n".join(lines)


def render_context_block(context: BusinessContext) -> str:
    lines = ["BUSINESS CONTEXT:"]
    if context.business_name:
        lines.append(f"NAME: {context.business_name}")
    if context.summary.strip():
        lines.append(f"SUMMARY: {context.summary}")
    for fact in context.facts:
        lines.append(f"FACT/{fact.category.value}: {fact.statement}")
    return "\n".join(lines)


def assemble_section_prompt(
    section_id: SectionId,
    context: BusinessContext,
    goals: list[Goal] | tuple[Goal, ...],
    exemplars: Optional[tuple[Exemplar, ...]] = None,
) -> PromptBundle:
    """Deterministic prompt bundle for one section (pure given corpus order)."""
    if exemplars is None:
        exemplars = corpus.exemplars_for(section_id)
    if not exemplars:
        raise NoExemplar(f"no exemplars available for {section_id.value}")
    chosen = exemplars[:EXEMPLARS_PER_PROMPT]

    parts = [render_goals_block(goals), render_context_block(context)]
    for i, exemplar in enumerate(chosen, start=1):
        parts.append(
            f"EXAMPLE {i}: {exemplar.title}\n{EXAMPLE_OPEN}\n{exemplar.body}\n{EXAMPLE_CLOSE}"
        )
    parts.append(OUTPUT_FORMAT_INSTRUCTIONS)
    parts.append(f"Now write the {section_id.display_name} section for this business.")
    return PromptBundle(
        section_id=section_id,
        system=_section_system_prompt(section_id),
        user="\n\n".join(parts),
        k=len(chosen),
    )


def parse_section_response(raw: str) -> RichText:
    """Total parser for generated section bodies (see markup.parse)."""
    if not raw:
        raise ValueError("raw response must be nonempty")
    return markup.parse(raw)


def section_request(gateway: Gateway, bundle: PromptBundle):
    return gateway.build_request(
        Route.section_generation,
        (Message("system", bundle.system), Message("user", bundle.user)),
    )


async def generate_draft(
    context: BusinessContext,
    goals: list[Goal] | tuple[Goal, ...],
    gateway: Gateway,
    *,
    document_id: str,
    owner: str,
    clock: Clock,
    on_section_done: Optional[Callable[[SectionId], Awaitable[None]]] = None,
) -> PlanDocument:
    """Generate all nine sections concurrently and assemble revision 0."""

    async def one_section(section_id: SectionId) -> tuple[SectionId, RichText]:
        bundle = assemble_section_prompt(section_id, context, goals)
        try:
            response = await gateway.complete(section_request(gateway, bundle))
        except GatewayError as exc:
            raise SectionGenerationFailed(section_id, exc) from exc
        if response.finish_reason == "error":
            raise SectionGenerationFailed(
                section_id, GatewayError("provider reported an error finish")
            )
        content = parse_section_response(response.content)
        if content.is_empty():
            raise PartialParse(section_id)
        if on_section_done is not None:
            await on_section_done(section_id)
        return section_id, content

    results = await asyncio.gather(
        *(one_section(sid) for sid in CANONICAL_ORDER), return_exceptions=True
    )

    sections: dict[SectionId, RichText] = {}
    failures: list[Exception] = []
    for section_id, result in zip(CANONICAL_ORDER, results):
        if isinstance(result, Exception):
            failures.append(result)
            logger.warning("section %s failed: %s", section_id.value, result)
        else:
            sections[result[0]] = result[1]
    if failures:
        first = failures[0]
        if isinstance(first, GenerationError):
            raise first
        raise SectionGenerationFailed(
            next(s for s in CANONICAL_ORDER if s not in sections), first
        )

    return new_document(
        context,
        list(goals),
        sections,
        document_id=document_id,
        owner=owner,
        author="assistant",
        timestamp=clock.now(),
    )
