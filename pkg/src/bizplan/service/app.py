"""The HTTP service: auth, onboarding, chat, apply, export, and persistence.

Mutations on one document are serialized behind a per-document lock; a
revision is acknowledged to the client only after its event is durably on
disk. Streaming endpoints emit the documented SSE events: onboarding
sends ``section_done`` per finished section then ``draft_ready``; chat
sends ``delta`` increments and always terminates with exactly one
``final`` event carrying the proposals and exactly two prompt
suggestions.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import logging
import secrets
from typing import AsyncIterator, Optional
from urllib.parse import urlsplit

from fastapi import Depends, FastAPI, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response, StreamingResponse
from pydantic import BaseModel, Field

from .. import export, ingestion, pitch, richtext, suggestions
from ..clock import Clock, FixedClock, SystemClock
from ..corpus import exemplars_for
from ..gateway import Gateway, GatewayError, UnsupportedMedia
from ..generator import GenerationError, generate_draft
from ..ingestion import IngestError, InvalidUrl
from ..model import Goal, InvalidGoal, ModelError, PlanDocument, SECTION_CHANGE_KINDS
from ..pitch import QuestionParseFailed, UnknownGoal, list_experts, prepare_pitch
from ..richtext import InvalidRichText, plain_text
from ..sections import SectionId
from ..suggestions import (
    ChatTurn,
    EditProposal,
    StaleProposal,
    apply_edit,
    current_topic,
    propose_edit,
    suggest_prompts,
    tag_focus_section,
)
from .config import ServiceSettings, load_settings
from .storage import Storage, StorageCorrupt

logger = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status_code: int, body: dict) -> None:
        super().__init__(body.get("error", "error"))
        self.status_code = status_code
        self.body = body


def sse_event(event: str, data: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(data, sort_keys=True)}\n\n"


def _token_hash(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


class AppState:
    def __init__(self, settings: ServiceSettings, gateway: Gateway, clock: Clock) -> None:
        self.settings = settings
        self.storage = Storage(settings.data_dir)
        self.gateway = gateway
        self.clock = clock
        self.documents: dict[str, PlanDocument] = {}
        self.conversations: dict[str, list[ChatTurn]] = {}
        # Proposals live in memory only: a restart invalidates them, and a
        # fresh chat turn regenerates them against the current head.
        self.proposals: dict[tuple[str, str], EditProposal] = {}
        self._locks: dict[str, asyncio.Lock] = {}
        self._id_lock = asyncio.Lock()
        self._reserved_ids: set[str] = set()
        self.accounts = self.storage.load_accounts()
        if not self.accounts:
            self.accounts = [
                {"account_id": "acct-000001", "display_name": "Owner", "api_token_hash": ""}
            ]
            self.storage.save_accounts(self.accounts)

    def lock_for(self, document_id: str) -> asyncio.Lock:
        return self._locks.setdefault(document_id, asyncio.Lock())

    def account_for_token(self, token: str) -> Optional[dict]:
        if not token:
            return None
        if token == self.settings.auth_token:
            return self.accounts[0]
        hashed = _token_hash(token)
        for account in self.accounts:
            if account["api_token_hash"] and account["api_token_hash"] == hashed:
                return account
        return None

    def get_document(self, document_id: str) -> PlanDocument:
        if document_id not in self.documents:
            self.documents[document_id] = self.storage.load_document(document_id)
        return self.documents[document_id]

    def conversation_id(self, document_id: str) -> str:
        return f"conv-{document_id}"

    def get_conversation(self, document_id: str) -> list[ChatTurn]:
        key = self.conversation_id(document_id)
        if key not in self.conversations:
            self.conversations[key] = self.storage.load_turns(key)
        return self.conversations[key]

    async def allocate_document_id(self) -> str:
        async with self._id_lock:
            existing = self.storage.list_document_ids() + sorted(self._reserved_ids)
            document_id = self.storage.next_numbered_id("doc", existing)
            self._reserved_ids.add(document_id)
            return document_id

    def release_document_id(self, document_id: str) -> None:
        self._reserved_ids.discard(document_id)

    def persist_new_document(self, doc: PlanDocument) -> None:
        self.storage.append_document_event(doc.document_id, doc.revisions[0], doc.payloads[0])
        self.documents[doc.document_id] = doc
        self.release_document_id(doc.document_id)

    def persist_revision(self, doc: PlanDocument) -> None:
        self.storage.append_document_event(doc.document_id, doc.revisions[-1], doc.payloads[-1])
        self.documents[doc.document_id] = doc


# Request bodies ---------------------------------------------------------------

class GoalIn(BaseModel):
    id: Optional[str] = None
    label: str
    detail: str = ""


class OnboardWebsiteIn(BaseModel):
    url: str
    goals: list[GoalIn] = Field(default_factory=list)


class TranscriptTurnIn(BaseModel):
    role: str
    text: str


class OnboardChatIn(BaseModel):
    transcript: list[TranscriptTurnIn]
    goals: list[GoalIn] = Field(default_factory=list)


class ChatIn(BaseModel):
    message: str


class ApplyIn(BaseModel):
    proposal_id: str


class ManualEditIn(BaseModel):
    replacement: dict
    change_kind: Optional[str] = None


class InlineIn(BaseModel):
    section_id: str
    criteria: str
    cursor_block: int = 0


class PitchIn(BaseModel):
    goal_id: str


def _build_goals(raw: list[GoalIn]) -> list[Goal]:
    goals = []
    for i, item in enumerate(raw, start=1):
        try:
            goals.append(Goal(id=item.id or f"g{i}", label=item.label, detail=item.detail))
        except InvalidGoal as exc:
            raise ApiError(422, {"error": "validation", "detail": str(exc)})
    ids = [g.id for g in goals]
    if len(set(ids)) != len(ids):
        raise ApiError(422, {"error": "validation", "detail": "duplicate goal ids"})
    return goals


def _parse_section(section_id: str) -> SectionId:
    try:
        return SectionId.parse(section_id)
    except ValueError:
        raise ApiError(404, {"error": "unknown_section", "section_id": section_id})


def create_app(
    settings: Optional[ServiceSettings] = None,
    *,
    gateway: Optional[Gateway] = None,
    clock: Optional[Clock] = None,
) -> FastAPI:
    settings = settings or load_settings()
    gateway = gateway or Gateway(settings.gateway)
    if clock is None:
        # Deterministic time in mock mode keeps golden files stable.
        clock = FixedClock() if settings.gateway.mode == "mock" else SystemClock()
    state = AppState(settings, gateway, clock)

    app = FastAPI(title="bizplan", docs_url=None, redoc_url=None)
    app.state.ctx = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(exc.body, status_code=exc.status_code)

    def require_account(request: Request) -> dict:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise ApiError(401, {"error": "unauthenticated"})
        account = state.account_for_token(header[7:].strip())
        if account is None:
            raise ApiError(401, {"error": "unauthenticated"})
        return account

    def owned_document(document_id: str, account: dict) -> PlanDocument:
        try:
            doc = state.get_document(document_id)
        except KeyError:
            raise ApiError(404, {"error": "unknown_document", "document_id": document_id})
        except StorageCorrupt as exc:
            logger.error("refusing to serve %s: %s", document_id, exc)
            raise ApiError(500, {"error": "storage_corrupt", "document_id": document_id})
        if doc.owner != account["account_id"]:
            raise ApiError(403, {"error": "not_owner"})
        return doc

    def interchange_response(doc: PlanDocument) -> Response:
        return Response(content=doc.to_interchange(), media_type="application/json")

    # Auth ---------------------------------------------------------------

    @app.post("/auth/token")
    async def issue_token(account: dict = Depends(require_account)):
        token = secrets.token_urlsafe(32)
        account["api_token_hash"] = _token_hash(token)
        state.storage.save_accounts(state.accounts)
        return {"account_id": account["account_id"], "token": token}

    # Onboarding ---------------------------------------------------------

    def _onboard_response(build_context, goals: list[Goal], account: dict) -> StreamingResponse:
        queue: asyncio.Queue = asyncio.Queue()

        async def on_section(section_id: SectionId) -> None:
            await queue.put(("section_done", {"section_id": section_id.value}))

        async def run() -> None:
            document_id = await state.allocate_document_id()
            try:
                context = await build_context(document_id)
                doc = await generate_draft(
                    context,
                    goals,
                    state.gateway,
                    document_id=document_id,
                    owner=account["account_id"],
                    clock=state.clock,
                    on_section_done=on_section,
                )
                async with state.lock_for(document_id):
                    state.persist_new_document(doc)
                await queue.put(("draft_ready", {"document_id": document_id}))
            except (IngestError, GenerationError, GatewayError, ModelError) as exc:
                state.release_document_id(document_id)
                if isinstance(exc, IngestError):
                    code = "ingestion_failed"
                elif isinstance(exc, GatewayError):
                    code = "provider_failure"
                else:
                    code = "generation_failed"
                await queue.put(("error", {"code": code, "message": str(exc)}))
            except Exception as exc:  # pragma: no cover - defensive
                state.release_document_id(document_id)
                logger.exception("onboarding failed")
                await queue.put(("error", {"code": "internal", "message": str(exc)}))
            finally:
                await queue.put(None)

        task = asyncio.create_task(run())

        async def stream() -> AsyncIterator[str]:
            try:
                while True:
                    item = await queue.get()
                    if item is None:
                        break
                    yield sse_event(item[0], item[1])
            finally:
                task.cancel()

        return StreamingResponse(stream(), status_code=202, media_type="text/event-stream")

    @app.post("/onboard/website")
    async def onboard_website(body: OnboardWebsiteIn, account: dict = Depends(require_account)):
        parts = urlsplit(body.url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ApiError(422, {"error": "validation", "detail": "url must be absolute http(s)"})
        goals = _build_goals(body.goals)

        async def build_context(document_id: str):
            page = await ingestion.fetch_and_strip(
                body.url,
                mode=settings.ingest_mode,
                fixture_dir=settings.page_fixture_dir,
                clock=state.clock,
            )
            return await ingestion.context_from_page(page, state.gateway)

        return _onboard_response(build_context, goals, account)

    @app.post("/onboard/chat")
    async def onboard_chat(body: OnboardChatIn, account: dict = Depends(require_account)):
        if not any(t.role == "user" for t in body.transcript):
            raise ApiError(
                422, {"error": "validation", "detail": "transcript needs a user message"}
            )
        goals = _build_goals(body.goals)
        transcript = [(t.role, t.text) for t in body.transcript]

        async def build_context(document_id: str):
            return await ingestion.context_from_chat(
                transcript, state.gateway, conversation_id=f"onboard-{document_id}"
            )

        return _onboard_response(build_context, goals, account)

    # Documents ----------------------------------------------------------

    @app.get("/plans/{document_id}")
    async def get_plan(document_id: str, account: dict = Depends(require_account)):
        return interchange_response(owned_document(document_id, account))

    @app.get("/plans/{document_id}/export")
    async def export_plan(
        document_id: str, format: str = "md", account: dict = Depends(require_account)
    ):
        doc = owned_document(document_id, account)
        if format == "md":
            return Response(export.export_markdown(doc), media_type="text/markdown; charset=utf-8")
        if format == "html":
            return Response(export.export_html(doc), media_type="text/html; charset=utf-8")
        raise ApiError(422, {"error": "validation", "detail": f"unknown format {format!r}"})

    # Chat ---------------------------------------------------------------

    @app.post("/plans/{document_id}/chat")
    async def chat(document_id: str, body: ChatIn, account: dict = Depends(require_account)):
        if not body.message.strip():
            raise ApiError(422, {"error": "validation", "detail": "message must be nonempty"})
        owned_document(document_id, account)
        queue: asyncio.Queue = asyncio.Queue()
        conversation_id = state.conversation_id(document_id)

        async def sink(text: str) -> None:
            await queue.put(("delta", {"text": text}))

        async def run() -> None:
            try:
                async with state.lock_for(document_id):
                    doc = state.get_document(document_id)
                    conversation = state.get_conversation(document_id)
                    focus = tag_focus_section(body.message) or current_topic(conversation, doc)
                    user_turn = ChatTurn(len(conversation), "user", body.message, focus)
                    state.storage.append_turn(conversation_id, user_turn)
                    conversation.append(user_turn)

                    try:
                        reply, proposals = await propose_edit(
                            body.message, conversation, doc, state.gateway, sink=sink
                        )
                    except GatewayError as exc:
                        await queue.put(
                            ("error", {"code": "provider_failure", "message": str(exc)})
                        )
                        reply, proposals = "", []

                    for proposal in proposals:
                        state.proposals[(document_id, proposal.proposal_id)] = proposal
                    assistant_focus = (
                        proposals[0].target_section
                        if proposals
                        else (tag_focus_section(reply) or focus)
                    )
                    assistant_turn = ChatTurn(
                        len(conversation), "assistant", reply, assistant_focus
                    )
                    state.storage.append_turn(conversation_id, assistant_turn)
                    conversation.append(assistant_turn)

                    pair = await suggest_prompts(conversation, doc, state.gateway)
                    await queue.put((
                        "final",
                        {
                            "proposals": [p.to_wire() for p in proposals],
                            "suggestions": [s.to_wire() for s in pair],
                        },
                    ))
            except Exception as exc:  # pragma: no cover - defensive
                logger.exception("chat turn failed")
                await queue.put(("error", {"code": "internal", "message": str(exc)}))
                fallback = suggestions._fallback_pair(
                    SectionId.EXECUTIVE_SUMMARY, SectionId.COMPANY_DESCRIPTION
                )
                await queue.put((
                    "final",
                    {"proposals": [], "suggestions": [s.to_wire() for s in fallback]},
                ))
            finally:
                await queue.put(None)

        task = asyncio.create_task(run())

        async def stream() -> AsyncIterator[str]:
            try:
                while True:
                    item = await queue.get()
                    if item is None:
                        break
                    yield sse_event(item[0], item[1])
            finally:
                task.cancel()

        return StreamingResponse(stream(), media_type="text/event-stream")

    # Apply / edit -------------------------------------------------------

    @app.post("/plans/{document_id}/apply")
    async def apply_proposal(
        document_id: str, body: ApplyIn, account: dict = Depends(require_account)
    ):
        async with state.lock_for(document_id):
            doc = owned_document(document_id, account)
            proposal = state.proposals.get((document_id, body.proposal_id))
            if proposal is None:
                raise ApiError(404, {"error": "unknown_proposal", "proposal_id": body.proposal_id})
            if proposal.base_revision != doc.head:
                raise ApiError(409, {"error": "stale_proposal", "head": doc.head})
            try:
                updated = apply_edit(doc, proposal, timestamp=state.clock.now())
            except StaleProposal as exc:
                raise ApiError(409, {"error": "stale_proposal", "head": exc.head})
            state.persist_revision(updated)
            return interchange_response(updated)

    @app.post("/plans/{document_id}/sections/{section_id}/edit")
    async def manual_edit(
        document_id: str,
        section_id: str,
        body: ManualEditIn,
        account: dict = Depends(require_account),
    ):
        target = _parse_section(section_id)
        async with state.lock_for(document_id):
            doc = owned_document(document_id, account)
            try:
                replacement = richtext.from_wire(body.replacement)
            except InvalidRichText as exc:
                raise ApiError(422, {"error": "validation", "detail": str(exc)})
            kind = body.change_kind
            if kind is None:
                # Same visible text means the edit only touched styling.
                before = plain_text(richtext.normalize(doc.section(target).content))
                after = plain_text(richtext.normalize(replacement))
                kind = "style_only" if before == after else "section_replace"
            elif kind not in SECTION_CHANGE_KINDS:
                raise ApiError(422, {"error": "validation", "detail": f"unknown change_kind {kind!r}"})
            updated = doc.with_section_replaced(
                target,
                replacement,
                author="user",
                timestamp=state.clock.now(),
                change_kind=kind,
            )
            state.persist_revision(updated)
            return interchange_response(updated)

    # Inline generation / pitch prep --------------------------------------

    @app.post("/plans/{document_id}/inline")
    async def inline(document_id: str, body: InlineIn, account: dict = Depends(require_account)):
        doc = owned_document(document_id, account)
        target = _parse_section(body.section_id)
        if not body.criteria.strip():
            raise ApiError(422, {"error": "validation", "detail": "criteria must be nonempty"})
        request = suggestions.InlineRequest(target, body.criteria, body.cursor_block)
        try:
            candidates, exemplars = await suggestions.inline_generate(request, doc, state.gateway)
        except GatewayError as exc:
            raise ApiError(502, {"error": "provider_failure", "message": str(exc)})
        return {
            "candidates": [richtext.to_wire(c) for c in candidates],
            "exemplars": [e.to_wire() for e in exemplars],
        }

    @app.post("/plans/{document_id}/pitch-prep")
    async def pitch_prep(document_id: str, body: PitchIn, account: dict = Depends(require_account)):
        doc = owned_document(document_id, account)
        try:
            prep = await prepare_pitch(doc, body.goal_id, state.gateway, clock=state.clock)
        except UnknownGoal:
            raise ApiError(404, {"error": "unknown_goal", "goal_id": body.goal_id})
        except QuestionParseFailed as exc:
            raise ApiError(502, {"error": "provider_failure", "message": str(exc)})
        except GatewayError as exc:
            raise ApiError(502, {"error": "provider_failure", "message": str(exc)})
        return prep.to_wire()

    # Reference data / transcription --------------------------------------

    @app.get("/experts")
    async def experts(focus: Optional[str] = None):
        section = None
        if focus:
            try:
                section = SectionId.parse(focus)
            except ValueError:
                raise ApiError(422, {"error": "validation", "detail": f"unknown focus {focus!r}"})
        return {"experts": [p.to_wire() for p in list_experts(section)]}

    @app.get("/sections/{section_id}/tooltips")
    async def tooltips(section_id: str):
        target = _parse_section(section_id)
        return {
            "section_id": target.value,
            "questions": list(suggestions.tooltip_questions(target)),
        }

    @app.get("/sections/{section_id}/exemplars")
    async def exemplars(section_id: str):
        target = _parse_section(section_id)
        return {
            "section_id": target.value,
            "exemplars": [e.to_wire() for e in exemplars_for(target)],
        }

    @app.post("/transcribe")
    async def transcribe(file: UploadFile, account: dict = Depends(require_account)):
        audio = await file.read()
        media_type = file.content_type or ""
        try:
            text = await state.gateway.transcribe(audio, media_type)
        except UnsupportedMedia as exc:
            raise ApiError(422, {"error": "unsupported_media", "detail": str(exc)})
        except ValueError as exc:
            raise ApiError(422, {"error": "validation", "detail": str(exc)})
        except GatewayError as exc:
            raise ApiError(502, {"error": "provider_failure", "message": str(exc)})
        return {"text": text}

    @app.get("/config/video")
    async def video_config():
        return {"video_url": settings.video_url}

    return app
