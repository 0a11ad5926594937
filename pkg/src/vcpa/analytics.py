"""Post-hoc analysis of session event logs.

Everything here is a pure function of (log, catalog, profiles); nothing
reaches into live service state, and reruns are byte-identical. A download
counts as value-consistent when, under the profile in effect at download
time, the app's coefficient is strictly above the red cutoff; the
per-session tally covers apps still installed at session end (removed apps
drop out), and sessions with zero downloads carry no consistency value.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import stats
from .catalog import Catalog
from .engine import Engine, NoticeDecision, coefficient
from .errors import (
    EmptyGroup,
    ReplayMismatch,
    SchemaMismatch,
    TooFewSessions,
    UnknownProfile,
    VcpaError,
)
from .model import RED_BELOW, EventKind, SessionEvent
from .profiles import ValueProfile

HIGH_ENGAGEMENT_ABOVE = 0.9
LOW_ENGAGEMENT_BELOW = 0.1


@dataclass(frozen=True)
class SessionMetrics:
    session_id: str
    profile_id: str | None  # profile in effect at session end
    downloads_total: int  # installed at session end (removed apps excluded)
    downloads_consistent: int
    selective_notices: int
    alternatives_clicks: int
    ignored: int
    removed: int
    exploratory_shown: bool
    exploratory_answered: bool
    kept_profile: bool | None

    @property
    def consistency_pct(self) -> float | None:
        """Share of end-of-session apps consistent at download time; None
        when the session downloaded nothing (excluded, mirroring the
        study's log exclusions)."""
        if self.downloads_total == 0:
            return None
        return self.downloads_consistent / self.downloads_total

    @property
    def engagement_rate(self) -> float | None:
        """Alternatives opens per selective notice; None when no selective
        notice was shown (undefined, not zero)."""
        if self.selective_notices == 0:
            return None
        return self.alternatives_clicks / self.selective_notices


def group_by_session(events: Sequence[SessionEvent]) -> dict[str, list[SessionEvent]]:
    """Split a log into per-session streams, preserving append order."""
    grouped: dict[str, list[SessionEvent]] = {}
    for event in events:
        grouped.setdefault(event.session_id, []).append(event)
    return grouped


def session_metrics(
    events: Sequence[SessionEvent],
    catalog: Catalog,
    profiles: Sequence[ValueProfile],
    *,
    red_below: float = RED_BELOW,
    verify: bool = True,
) -> SessionMetrics:
    """Metrics for one session's event stream.

    With verify on, logged notices are checked against recomputation: a
    selective notice for a non-red app, or a straight download of a red
    one, raises ReplayMismatch.
    """
    if not events:
        raise EmptyGroup("no events for session")
    session_id = events[0].session_id
    by_id: Mapping[str, ValueProfile] = {p.profile_id: p for p in profiles}

    def coef(app_id: str, profile_id: str | None) -> float:
        profile = by_id.get(profile_id or "")
        if profile is None:
            raise UnknownProfile(f"{profile_id!r} in log for session {session_id}")
        return coefficient(profile, catalog.apps[app_id])

    profile_id: str | None = None
    installed: dict[str, bool] = {}  # app_id -> consistent at latest download
    selective = ignored = clicks = removed = 0
    exploratory_shown = exploratory_answered = False
    kept: bool | None = None
    previous: SessionEvent | None = None
    for event in events:
        if event.kind is EventKind.PROFILE_SELECTED:
            profile_id = event.profile_id
        elif event.kind is EventKind.SELECTIVE_NOTICE_SHOWN:
            selective += 1
            if verify and coef(event.app_id, event.profile_id) >= red_below:
                raise ReplayMismatch(
                    f"session {session_id}: selective notice logged for "
                    f"{event.app_id} but recomputed coefficient is not red"
                )
        elif event.kind is EventKind.NOTICE_IGNORED:
            ignored += 1
        elif event.kind is EventKind.ALTERNATIVES_OPENED:
            clicks += 1
        elif event.kind is EventKind.EXPLORATORY_NOTICE_SHOWN:
            exploratory_shown = True
        elif event.kind is EventKind.EXPLORATORY_NOTICE_ANSWERED:
            exploratory_answered = True
            kept = event.kept_profile
        elif event.kind is EventKind.APP_DOWNLOADED:
            consistent = coef(event.app_id, event.profile_id) > red_below
            if (
                verify
                and not consistent
                and previous is not None
                and previous.kind is EventKind.DOWNLOAD_ATTEMPT
                and previous.app_id == event.app_id
            ):
                raise ReplayMismatch(
                    f"session {session_id}: red app {event.app_id} downloaded "
                    "without any notice in between"
                )
            installed[event.app_id] = consistent
        elif event.kind is EventKind.APP_REMOVED:
            installed.pop(event.app_id, None)
            removed += 1
        previous = event
    return SessionMetrics(
        session_id=session_id,
        profile_id=profile_id,
        downloads_total=len(installed),
        downloads_consistent=sum(installed.values()),
        selective_notices=selective,
        alternatives_clicks=clicks,
        ignored=ignored,
        removed=removed,
        exploratory_shown=exploratory_shown,
        exploratory_answered=exploratory_answered,
        kept_profile=kept,
    )


def consistency(
    events: Sequence[SessionEvent],
    catalog: Catalog,
    profiles: Sequence[ValueProfile],
    *,
    red_below: float = RED_BELOW,
    verify: bool = True,
) -> list[SessionMetrics]:
    """Per-session metrics for a whole log, ordered by session id."""
    grouped = group_by_session(events)
    return [
        session_metrics(grouped[sid], catalog, profiles, red_below=red_below, verify=verify)
        for sid in sorted(grouped)
    ]


# -- engagement --------------------------------------------------------------


@dataclass(frozen=True)
class EngagementSplit:
    """Sessions bucketed by how often a selective notice led to the
    alternatives page. Buckets count only sessions with ≥1 notice."""

    noticed_sessions: int
    high: int  # engagement rate strictly above 0.9
    low: int  # engagement rate strictly below 0.1

    @property
    def high_fraction(self) -> float:
        return self.high / self.noticed_sessions if self.noticed_sessions else 0.0

    @property
    def low_fraction(self) -> float:
        return self.low / self.noticed_sessions if self.noticed_sessions else 0.0


@dataclass(frozen=True)
class EngagementReport:
    rates: Mapping[str, float | None]  # session_id -> rate (None = undefined)
    split: EngagementSplit


def engagement(events: Sequence[SessionEvent]) -> EngagementReport:
    """Alternatives engagement per session plus the high/low histogram.

    Needs only the log: rate = alternatives opens ÷ selective notices.
    """
    rates: dict[str, float | None] = {}
    for session_id, session_events in sorted(group_by_session(events).items()):
        notices = sum(1 for e in session_events if e.kind is EventKind.SELECTIVE_NOTICE_SHOWN)
        clicks = sum(1 for e in session_events if e.kind is EventKind.ALTERNATIVES_OPENED)
        rates[session_id] = clicks / notices if notices else None
    defined = [r for r in rates.values() if r is not None]
    split = EngagementSplit(
        noticed_sessions=len(defined),
        high=sum(1 for r in defined if r > HIGH_ENGAGEMENT_ABOVE),
        low=sum(1 for r in defined if r < LOW_ENGAGEMENT_BELOW),
    )
    return EngagementReport(rates=rates, split=split)


# -- group comparisons -------------------------------------------------------


def compare_profiles(
    metrics: Sequence[SessionMetrics], profile_a: str, profile_b: str
) -> stats.TestResult:
    """Welch t-test on per-session consistency between two profile groups.

    Sessions are grouped by their end-of-session profile; zero-download
    sessions carry no consistency value and are skipped.
    """

    def values(profile_id: str) -> list[float]:
        out = [
            m.consistency_pct
            for m in metrics
            if m.profile_id == profile_id and m.consistency_pct is not None
        ]
        if len(out) < 2:
            raise TooFewSessions(f"need >= 2 sessions with downloads for {profile_id!r}")
        return out

    return stats.welch_t(values(profile_a), values(profile_b))


def load_concern_csv(path: str | Path) -> tuple[list[float], list[float]]:
    """Read privacy-concern survey scores: columns respondent_id, phase, score."""
    entry: list[float] = []
    exit_: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"respondent_id", "phase", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise SchemaMismatch(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            phase = row["phase"].strip().lower()
            try:
                score = float(row["score"])
            except ValueError as exc:
                raise SchemaMismatch(f"{path}:{reader.line_num}: bad score {row['score']!r}") from exc
            if phase == "entry":
                entry.append(score)
            elif phase == "exit":
                exit_.append(score)
            else:
                raise SchemaMismatch(f"{path}:{reader.line_num}: unknown phase {row['phase']!r}")
    return entry, exit_


@dataclass(frozen=True)
class ConcernComparison:
    entry_n: int
    exit_n: int
    entry_mean: float
    exit_mean: float
    test: stats.TestResult


def entry_exit_concern(entry: Sequence[float], exit_: Sequence[float]) -> ConcernComparison:
    """Compare self-reported privacy concern before vs after use (unpaired,
    unequal group sizes expected)."""
    result = stats.welch_t(entry, exit_)
    return ConcernComparison(
        entry_n=len(entry),
        exit_n=len(exit_),
        entry_mean=sum(entry) / len(entry),
        exit_mean=sum(exit_) / len(exit_),
        test=result,
    )


# -- replay ------------------------------------------------------------------

_INITIATING = {
    EventKind.PROFILE_SELECTED,
    EventKind.APP_VIEWED,
    EventKind.DOWNLOAD_ATTEMPT,
    EventKind.NOTICE_IGNORED,
    EventKind.EXPLORATORY_NOTICE_ANSWERED,
    EventKind.ALTERNATIVES_OPENED,
    EventKind.APP_REMOVED,
}


def replay_session(events: Sequence[SessionEvent], engine: Engine) -> list[NoticeDecision]:
    """Re-drive one session's actions through the engine and demand the
    exact recorded event stream back; raises ReplayMismatch on the first
    divergence.

    The action stream is recovered from the log itself: notice-shown,
    download, and switch-triggered profile events are consequences of the
    preceding action, so comparison consumes them together with it.
    Returns the notice decisions recomputed along the way, in order, so a
    caller can also compare them with what the live service answered.
    """
    if not events:
        return []
    session_id = events[0].session_id
    state = engine.new_session(session_id)
    decisions: list[NoticeDecision] = []
    i = 0
    while i < len(events):
        event = events[i]
        if event.kind not in _INITIATING:
            raise ReplayMismatch(
                f"session {session_id}: event {i} ({event.kind.value}) cannot start an action"
            )
        try:
            if event.kind is EventKind.PROFILE_SELECTED:
                produced = engine.select_profile(
                    state, event.profile_id, event.elapsed_ms, event.wall_time
                )
            elif event.kind is EventKind.APP_VIEWED:
                produced = engine.view_app(
                    state, event.app_id, event.elapsed_ms, event.wall_time
                )
            elif event.kind is EventKind.DOWNLOAD_ATTEMPT:
                decision, produced = engine.attempt_download(
                    state, event.app_id, event.elapsed_ms, event.wall_time
                )
                decisions.append(decision)
            elif event.kind is EventKind.NOTICE_IGNORED:
                decision, produced = engine.ignore_notice(
                    state, event.elapsed_ms, event.wall_time, event.reason or ""
                )
                decisions.append(decision)
            elif event.kind is EventKind.EXPLORATORY_NOTICE_ANSWERED:
                keep = bool(event.kept_profile)
                decision, produced = engine.answer_exploratory(
                    state,
                    event.elapsed_ms,
                    event.wall_time,
                    keep=keep,
                    new_profile_id=None if keep else event.profile_id,
                )
                decisions.append(decision)
            elif event.kind is EventKind.ALTERNATIVES_OPENED:
                _, produced = engine.alternatives(
                    state, event.app_id, event.elapsed_ms, event.wall_time
                )
            else:  # APP_REMOVED
                produced = engine.remove_app(
                    state, event.app_id, event.elapsed_ms, event.wall_time
                )
        except ReplayMismatch:
            raise
        except VcpaError as exc:
            raise ReplayMismatch(
                f"session {session_id}: event {i} ({event.kind.value}) rejected on replay: {exc}"
            ) from exc
        recorded = list(events[i : i + len(produced)])
        if produced != recorded:
            raise ReplayMismatch(
                f"session {session_id}: divergence at event {i}: "
                f"replay produced {[e.to_dict() for e in produced]}, "
                f"log has {[e.to_dict() for e in recorded]}"
            )
        i += len(produced)
    return decisions


def replay_check(events: Sequence[SessionEvent], engine: Engine) -> int:
    """Replay every session in the log; returns the number verified."""
    grouped = group_by_session(events)
    for session_id in sorted(grouped):
        replay_session(grouped[session_id], engine)
    return len(grouped)


# -- report ------------------------------------------------------------------


def metrics_csv(metrics: Sequence[SessionMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "session_id", "profile_id", "downloads_total", "downloads_consistent",
            "consistency_pct", "selective_notices", "alternatives_clicks",
            "engagement_rate", "ignored", "removed", "exploratory_shown",
            "exploratory_answered", "kept_profile",
        ]
    )
    for m in metrics:
        writer.writerow(
            [
                m.session_id, m.profile_id or "", m.downloads_total, m.downloads_consistent,
                "" if m.consistency_pct is None else repr(m.consistency_pct),
                m.selective_notices, m.alternatives_clicks,
                "" if m.engagement_rate is None else repr(m.engagement_rate),
                m.ignored, m.removed, int(m.exploratory_shown),
                int(m.exploratory_answered),
                "" if m.kept_profile is None else int(m.kept_profile),
            ]
        )
    return buf.getvalue()


def _pct(part: int, whole: int) -> str:
    return f"{100.0 * part / whole:.1f}%" if whole else "n/a"


def report_text(metrics: Sequence[SessionMetrics], concern: ConcernComparison | None = None) -> str:
    sessions = len(metrics)
    with_downloads = [m for m in metrics if m.downloads_total > 0]
    downloads = sum(m.downloads_total for m in with_downloads)
    consistent = sum(m.downloads_consistent for m in with_downloads)
    shown = sum(m.selective_notices for m in metrics)
    ignored = sum(m.ignored for m in metrics)
    clicks = sum(m.alternatives_clicks for m in metrics)
    defined = [m.engagement_rate for m in metrics if m.engagement_rate is not None]
    split = EngagementSplit(
        noticed_sessions=len(defined),
        high=sum(1 for r in defined if r > HIGH_ENGAGEMENT_ABOVE),
        low=sum(1 for r in defined if r < LOW_ENGAGEMENT_BELOW),
    )
    exploratory = sum(1 for m in metrics if m.exploratory_shown)
    answered = sum(1 for m in metrics if m.exploratory_answered)
    switched = sum(1 for m in metrics if m.kept_profile is False)
    by_profile: dict[str, int] = {}
    for m in metrics:
        if m.profile_id:
            by_profile[m.profile_id] = by_profile.get(m.profile_id, 0) + 1
    lines = [
        f"sessions: {sessions} ({len(with_downloads)} with downloads, "
        f"{sessions - len(with_downloads)} excluded from consistency)",
        f"apps installed at session end: {downloads} "
        f"({consistent} consistent at download time, {_pct(consistent, downloads)})",
        f"selective notices: {shown} shown, {ignored} ignored, {clicks} alternatives opens",
        f"engagement: {split.high} of {split.noticed_sessions} noticed sessions above 90% "
        f"({_pct(split.high, split.noticed_sessions)}), {split.low} below 10% "
        f"({_pct(split.low, split.noticed_sessions)})",
        f"exploratory notices: {exploratory} shown, {answered} answered, {switched} switched profile",
    ]
    for profile_id in sorted(by_profile):
        group = [
            m.consistency_pct
            for m in metrics
            if m.profile_id == profile_id and m.consistency_pct is not None
        ]
        mean = f"{100.0 * sum(group) / len(group):.1f}%" if group else "n/a"
        lines.append(
            f"profile {profile_id}: {by_profile[profile_id]} sessions, mean consistency {mean}"
        )
    if concern is not None:
        lines.append(
            f"privacy concern: entry mean {concern.entry_mean:.3f} (n={concern.entry_n}), "
            f"exit mean {concern.exit_mean:.3f} (n={concern.exit_n}), "
            f"welch t={concern.test.statistic:.4f}, p={concern.test.p_value:.4f}"
        )
    return "\n".join(lines) + "\n"
