"""Session runtime: acceptability scoring and notice decisions.

All timing flows through integer milliseconds since session start, supplied
by the caller. The engine itself never reads a clock, which makes every
decision a pure function of (state, action, elapsed_ms) and lets a recorded
session be replayed event-for-event.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    NoPendingNotice,
    NotDownloaded,
    NoProfileSelected,
    OutOfRange,
    UnknownApp,
    UnknownPractice,
    UnknownProfile,
)
from .model import (
    GREEN_ABOVE,
    RED_BELOW,
    AcceptabilityScore,
    AppRecord,
    EventKind,
    SessionEvent,
    TrafficLight,
)
from .catalog import Catalog
from .profiles import ValueProfile

WINDOW_START_MS = 210_000
WINDOW_END_MS = 240_000
ALTERNATIVES_ABOVE = 0.1


def coefficient(profile: ValueProfile, app: AppRecord) -> float:
    """Minimal acceptability of an app for a profile.

    The minimum, over the app's declared practices, of the fraction of
    profile members who accept that practice. An app declaring no
    practices is fully acceptable (1.0).
    """
    if not app.practices:
        return 1.0
    worst = 1.0
    for practice in app.practices:
        frac = profile.acceptance_fraction.get(practice)
        if frac is None:
            raise UnknownPractice(practice.key)
        if frac < worst:
            worst = frac
    return worst


class NoticeKind(str, enum.Enum):
    PROCEED = "proceed"
    SELECTIVE = "selective"
    EXPLORATORY = "exploratory"


@dataclass(frozen=True)
class PendingNotice:
    kind: NoticeKind
    app_id: str


@dataclass(frozen=True)
class NoticeDecision:
    """Outcome of a download attempt (or of resolving a pending notice)."""

    outcome: NoticeKind
    app_id: str
    score: AcceptabilityScore
    downloaded: bool
    alternatives_available: bool | None = None  # set only for selective notices

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "app_id": self.app_id,
            "score": self.score.to_dict(),
            "downloaded": self.downloaded,
            "alternatives_available": self.alternatives_available,
        }


@dataclass(frozen=True)
class Alternative:
    app_id: str
    name: str
    score: AcceptabilityScore

    def to_dict(self) -> dict:
        return {"app_id": self.app_id, "name": self.name, "score": self.score.to_dict()}


@dataclass
class SessionState:
    session_id: str
    profile_id: str | None = None
    last_elapsed_ms: int = 0
    exploratory_shown: bool = False
    pending: PendingNotice | None = None
    downloaded: set[str] = field(default_factory=set)


class Engine:
    """Decides, per action, which notice fires and what gets downloaded.

    Selective notices fire when the current profile scores the app red.
    The exploratory notice takes precedence on the first download attempt
    whose elapsed time falls inside [window_start_ms, window_end_ms]; it is
    shown at most once per session, and once answered the interrupted
    attempt is re-evaluated under the ordinary selective rules.
    """

    def __init__(
        self,
        catalog: Catalog,
        profiles: Sequence[ValueProfile],
        *,
        window_start_ms: int = WINDOW_START_MS,
        window_end_ms: int = WINDOW_END_MS,
        alternatives_above: float = ALTERNATIVES_ABOVE,
        red_below: float = RED_BELOW,
        green_above: float = GREEN_ABOVE,
    ) -> None:
        if window_start_ms < 0 or window_end_ms < window_start_ms:
            raise OutOfRange("exploratory window is empty or negative")
        if not 0.0 < red_below <= alternatives_above < 1.0:
            raise OutOfRange("need 0 < red_below <= alternatives_above < 1")
        if not red_below <= green_above <= 1.0:
            raise OutOfRange("need red_below <= green_above <= 1")
        self.catalog = catalog
        self.profiles: Mapping[str, ValueProfile] = {p.profile_id: p for p in profiles}
        self.window_start_ms = window_start_ms
        self.window_end_ms = window_end_ms
        self.alternatives_above = alternatives_above
        self.red_below = red_below
        self.green_above = green_above

    # -- scoring ---------------------------------------------------------

    def _score(self, value: float) -> AcceptabilityScore:
        return AcceptabilityScore.from_coefficient(
            value, red_below=self.red_below, green_above=self.green_above
        )

    def _app(self, app_id: str) -> AppRecord:
        app = self.catalog.apps.get(app_id)
        if app is None:
            raise UnknownApp(app_id)
        return app

    def _profile(self, profile_id: str | None) -> ValueProfile:
        if profile_id is None:
            raise NoProfileSelected("no profile selected for this session")
        profile = self.profiles.get(profile_id)
        if profile is None:
            raise UnknownProfile(profile_id)
        return profile

    def score(self, profile_id: str, app_id: str) -> AcceptabilityScore:
        return self._score(coefficient(self._profile(profile_id), self._app(app_id)))

    def score_all(self, profile_id: str) -> dict[str, AcceptabilityScore]:
        profile = self._profile(profile_id)
        return {
            app_id: self._score(coefficient(profile, app))
            for app_id, app in sorted(self.catalog.apps.items())
        }

    def suggest_alternatives(self, profile_id: str, app_id: str) -> list[Alternative]:
        """Other members of the app's family scoring above the threshold.

        Ordered by coefficient descending, ties by name then app id; never
        includes the triggering app. Never contains a red app (the
        threshold sits on the red boundary).
        """
        self._app(app_id)
        profile = self._profile(profile_id)
        found = []
        for other_id in self.catalog.family_of(app_id) - {app_id}:
            other = self.catalog.apps[other_id]
            score = self._score(coefficient(profile, other))
            if score.coefficient > self.alternatives_above:
                found.append(Alternative(other_id, other.name, score))
        found.sort(key=lambda alt: (-alt.score.coefficient, alt.name, alt.app_id))
        return found

    # -- session actions -------------------------------------------------

    def new_session(self, session_id: str) -> SessionState:
        return SessionState(session_id=session_id)

    def _advance(self, state: SessionState, elapsed_ms: int) -> None:
        if elapsed_ms < state.last_elapsed_ms:
            raise OutOfRange(
                f"elapsed_ms went backwards: {elapsed_ms} < {state.last_elapsed_ms}"
            )
        state.last_elapsed_ms = elapsed_ms

    def _event(self, state: SessionState, elapsed_ms: int, wall_time: str,
               kind: EventKind, **extra) -> SessionEvent:
        return SessionEvent(
            session_id=state.session_id,
            elapsed_ms=elapsed_ms,
            wall_time=wall_time,
            kind=kind,
            **extra,
        )

    def select_profile(
        self, state: SessionState, profile_id: str, elapsed_ms: int, wall_time: str
    ) -> list[SessionEvent]:
        self._profile(profile_id)
        self._advance(state, elapsed_ms)
        state.profile_id = profile_id
        return [
            self._event(state, elapsed_ms, wall_time, EventKind.PROFILE_SELECTED,
                        profile_id=profile_id)
        ]

    def view_app(
        self, state: SessionState, app_id: str, elapsed_ms: int, wall_time: str
    ) -> list[SessionEvent]:
        self._app(app_id)
        self._advance(state, elapsed_ms)
        return [self._event(state, elapsed_ms, wall_time, EventKind.APP_VIEWED, app_id=app_id)]

    def _resolve_attempt(
        self, state: SessionState, app_id: str, elapsed_ms: int, wall_time: str
    ) -> tuple[NoticeDecision, list[SessionEvent]]:
        """Selective-or-proceed rules, shared by fresh attempts and
        attempts resumed after an exploratory answer."""
        profile = self._profile(state.profile_id)
        score = self._score(coefficient(profile, self._app(app_id)))
        if score.light is TrafficLight.RED:
            state.pending = PendingNotice(NoticeKind.SELECTIVE, app_id)
            available = bool(self.suggest_alternatives(state.profile_id, app_id))
            events = [
                self._event(state, elapsed_ms, wall_time, EventKind.SELECTIVE_NOTICE_SHOWN,
                            app_id=app_id, profile_id=state.profile_id)
            ]
            decision = NoticeDecision(
                NoticeKind.SELECTIVE, app_id, score, False, alternatives_available=available
            )
            return decision, events
        state.downloaded.add(app_id)
        events = [
            self._event(state, elapsed_ms, wall_time, EventKind.APP_DOWNLOADED,
                        app_id=app_id, profile_id=state.profile_id)
        ]
        return NoticeDecision(NoticeKind.PROCEED, app_id, score, True), events

    def attempt_download(
        self, state: SessionState, app_id: str, elapsed_ms: int, wall_time: str
    ) -> tuple[NoticeDecision, list[SessionEvent]]:
        """Decide on a download attempt: exploratory notice, selective
        notice, or proceed. A new attempt abandons any pending notice."""
        app = self._app(app_id)
        profile = self._profile(state.profile_id)
        self._advance(state, elapsed_ms)
        state.pending = None
        events = [
            self._event(state, elapsed_ms, wall_time, EventKind.DOWNLOAD_ATTEMPT,
                        app_id=app_id, profile_id=state.profile_id)
        ]
        in_window = self.window_start_ms <= elapsed_ms <= self.window_end_ms
        if in_window and not state.exploratory_shown:
            state.exploratory_shown = True
            state.pending = PendingNotice(NoticeKind.EXPLORATORY, app_id)
            score = self._score(coefficient(profile, app))
            events.append(
                self._event(state, elapsed_ms, wall_time, EventKind.EXPLORATORY_NOTICE_SHOWN,
                            app_id=app_id, profile_id=state.profile_id)
            )
            return NoticeDecision(NoticeKind.EXPLORATORY, app_id, score, False), events
        decision, more = self._resolve_attempt(state, app_id, elapsed_ms, wall_time)
        return decision, events + more

    def ignore_notice(
        self, state: SessionState, elapsed_ms: int, wall_time: str, reason: str = ""
    ) -> tuple[NoticeDecision, list[SessionEvent]]:
        """Override a pending selective notice: the reason is logged
        verbatim (empty permitted) and the download proceeds."""
        pending = state.pending
        if pending is None:
            raise NoPendingNotice("no notice to ignore")
        if pending.kind is not NoticeKind.SELECTIVE:
            raise NoPendingNotice("pending notice is exploratory; answer it instead")
        self._advance(state, elapsed_ms)
        state.pending = None
        app_id = pending.app_id
        score = self.score(state.profile_id, app_id)
        state.downloaded.add(app_id)
        events = [
            self._event(state, elapsed_ms, wall_time, EventKind.NOTICE_IGNORED,
                        app_id=app_id, profile_id=state.profile_id, reason=reason),
            self._event(state, elapsed_ms, wall_time, EventKind.APP_DOWNLOADED,
                        app_id=app_id, profile_id=state.profile_id),
        ]
        return NoticeDecision(NoticeKind.PROCEED, app_id, score, True), events

    def answer_exploratory(
        self,
        state: SessionState,
        elapsed_ms: int,
        wall_time: str,
        *,
        keep: bool,
        new_profile_id: str | None = None,
    ) -> tuple[NoticeDecision, list[SessionEvent]]:
        """Answer the pending exploratory notice: keep the profile or
        switch. The interrupted attempt is then re-evaluated under the
        profile in effect (the exploratory notice cannot fire again)."""
        pending = state.pending
        if pending is None or pending.kind is not NoticeKind.EXPLORATORY:
            raise NoPendingNotice("no exploratory notice is pending")
        if keep and new_profile_id is not None:
            raise OutOfRange("keep=true does not take a new profile")
        if not keep:
            self._profile(new_profile_id)
        self._advance(state, elapsed_ms)
        state.pending = None
        app_id = pending.app_id
        events = []
        if not keep:
            state.profile_id = new_profile_id
        events.append(
            self._event(state, elapsed_ms, wall_time, EventKind.EXPLORATORY_NOTICE_ANSWERED,
                        app_id=app_id, profile_id=state.profile_id, kept_profile=keep)
        )
        if not keep:
            events.append(
                self._event(state, elapsed_ms, wall_time, EventKind.PROFILE_SELECTED,
                            profile_id=state.profile_id)
            )
        decision, more = self._resolve_attempt(state, app_id, elapsed_ms, wall_time)
        return decision, events + more

    def remove_app(
        self, state: SessionState, app_id: str, elapsed_ms: int, wall_time: str
    ) -> list[SessionEvent]:
        self._app(app_id)
        if app_id not in state.downloaded:
            raise NotDownloaded(app_id)
        self._advance(state, elapsed_ms)
        state.downloaded.discard(app_id)
        return [
            self._event(state, elapsed_ms, wall_time, EventKind.APP_REMOVED,
                        app_id=app_id, profile_id=state.profile_id)
        ]

    def alternatives(
        self, state: SessionState, app_id: str, elapsed_ms: int, wall_time: str
    ) -> tuple[list[Alternative], list[SessionEvent]]:
        """suggest_alternatives for the session's profile, logged as an
        alternatives-page open."""
        found = self.suggest_alternatives(state.profile_id, app_id)
        self._advance(state, elapsed_ms)
        events = [
            self._event(state, elapsed_ms, wall_time, EventKind.ALTERNATIVES_OPENED,
                        app_id=app_id, profile_id=state.profile_id)
        ]
        return found, events
