"""Request/response bodies for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, model_validator

from .engine import Alternative, NoticeDecision
from .model import AppRecord, SessionEvent


class ProfileChoice(BaseModel):
    profile_id: str


class SessionCreate(BaseModel):
    """Optional study metadata supplied when opening a session."""

    entry_concern: float | None = None
    exit_concern: float | None = None


class IgnoreRequest(BaseModel):
    reason: str = ""


class ExploratoryAnswer(BaseModel):
    keep: bool
    new_profile_id: str | None = None

    @model_validator(mode="after")
    def _check_choice(self) -> "ExploratoryAnswer":
        if self.keep and self.new_profile_id is not None:
            raise ValueError("keep=true does not take new_profile_id")
        if not self.keep and self.new_profile_id is None:
            raise ValueError("keep=false requires new_profile_id")
        return self


class Score(BaseModel):
    coefficient: float
    light: str


class Decision(BaseModel):
    outcome: str
    app_id: str
    score: Score
    downloaded: bool
    alternatives_available: bool | None = None

    @classmethod
    def from_engine(cls, decision: NoticeDecision) -> "Decision":
        return cls.model_validate(decision.to_dict())


class AlternativeOut(BaseModel):
    app_id: str
    name: str
    score: Score

    @classmethod
    def from_engine(cls, alt: Alternative) -> "AlternativeOut":
        return cls.model_validate(alt.to_dict())


class AlternativesOut(BaseModel):
    app_id: str
    alternatives: list[AlternativeOut]


class StoreApp(BaseModel):
    app_id: str
    name: str
    description: str
    keywords: list[str]
    practices: list[str]
    family_id: str | None
    score: Score

    @classmethod
    def from_record(cls, app: AppRecord, score: Score) -> "StoreApp":
        return cls(
            app_id=app.app_id,
            name=app.name,
            description=app.description,
            keywords=list(app.keywords),
            practices=sorted(p.key for p in app.practices),
            family_id=app.family_id,
            score=score,
        )


class Storefront(BaseModel):
    profile_id: str
    apps: list[StoreApp]


class SessionCreated(BaseModel):
    session_id: str


class SessionInfo(BaseModel):
    session_id: str
    profile_id: str | None
    exploratory_shown: bool
    pending_notice: str | None
    pending_app_id: str | None
    downloaded: list[str]
    entry_concern: float | None = None
    exit_concern: float | None = None


class EventOut(BaseModel):
    session_id: str
    elapsed_ms: int
    wall_time: str
    kind: str
    app_id: str | None = None
    profile_id: str | None = None
    reason: str | None = None
    kept_profile: bool | None = None

    @classmethod
    def from_event(cls, event: SessionEvent) -> "EventOut":
        return cls.model_validate(event.to_dict())


class SessionLog(BaseModel):
    session_id: str
    events: list[EventOut]


class Ack(BaseModel):
    ok: bool = True
