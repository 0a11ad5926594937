"""Seeded synthetic corpora and scripted end-to-end store sessions.

Three kinds of artifacts, all deterministic for a given seed:

* a survey population with three planted value archetypes (well-separated
  blobs in value space plus archetype-specific practice-acceptance rates),
* a store catalog input (10 seeded families sharing one app, plus
  exclusions) whose build mirrors the real pipeline's shape, and
* scripted browsing sessions driven through the live HTTP service with a
  fake clock, with ground-truth bookkeeping for every metric analytics is
  expected to recover.

Every family's grid contains one app with no practices at all (green for
everyone) and one requiring tracked sensitive data that no archetype
accepts (red for everyone), so scripts can always find both colors.
"""
from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

with warnings.catch_warnings():
    # fastapi's bundled testclient import path; harmless and not ours to fix
    warnings.filterwarnings(
        "ignore", message="Using `httpx` with `starlette.testclient` is deprecated"
    )
    from fastapi.testclient import TestClient

from .config import ServiceConfig
from .errors import InvalidPractice
from .model import (
    ALL_PRACTICES,
    CollectionMode,
    DataType,
    Practice,
    PreferenceSet,
    SurveyResponse,
    SurveyVariant,
    ValueName,
)
from .service import FakeClock, create_app
from .survey import (
    AV_COLUMNS,
    GV_COLUMNS,
    PREF_COLUMNS,
    SurveyDataset,
    close_preferences,
)

ARCHETYPES = ("adventurer", "goal_setter", "helpful_neighbor")

# Planted cluster centres on the 1-9 scale. Pairwise inter-centroid
# distances (6.9, 11.0, 12.0) are far beyond the +/-1 within-blob jitter
# (sd ~0.82), so Ward clustering must recover the blobs exactly.
VALUE_MEANS: dict[ValueName, tuple[int, int, int]] = {
    ValueName.POWER: (4, 8, 3),
    ValueName.ACHIEVEMENT: (5, 8, 4),
    ValueName.HEDONISM: (6, 8, 3),
    ValueName.STIMULATION: (8, 6, 3),
    ValueName.SELF_DIRECTION: (8, 6, 3),
    ValueName.UNIVERSALISM: (6, 5, 6),
    ValueName.BENEVOLENCE: (4, 5, 8),
    ValueName.TRADITION: (3, 4, 7),
    ValueName.CONFORMITY: (3, 5, 8),
    ValueName.SECURITY: (3, 5, 8),
}

# Acceptance probability per collection mode, by archetype.
_MODE_ACCEPT = {
    "adventurer": {CollectionMode.UNLINKED: 0.90, CollectionMode.LINKED: 0.65, CollectionMode.TRACKED: 0.25},
    "goal_setter": {CollectionMode.UNLINKED: 0.97, CollectionMode.LINKED: 0.92, CollectionMode.TRACKED: 0.80},
    "helpful_neighbor": {CollectionMode.UNLINKED: 0.55, CollectionMode.LINKED: 0.12, CollectionMode.TRACKED: 0.02},
}
_SENSITIVE = {
    DataType.SENSITIVE_INFO,
    DataType.FINANCIAL,
    DataType.CONTACT_INFO,
    DataType.OTHER_IDENTIFIERS,
}
_SENSITIVE_FACTOR = 0.4


def _accept_probability(archetype: str, mode: CollectionMode, data_type: DataType) -> float:
    if mode is CollectionMode.TRACKED and data_type is DataType.SENSITIVE_INFO:
        return 0.0  # nobody tolerates this; anchors a red app for every profile
    p = _MODE_ACCEPT[archetype][mode]
    if data_type in _SENSITIVE:
        p *= _SENSITIVE_FACTOR
    return p


def _clamp_score(x: int) -> int:
    return max(1, min(9, x))


def synthetic_survey(
    seed: int = 0, per_cluster: int = 30
) -> tuple[SurveyDataset, dict[str, str]]:
    """A survey population with three planted archetypes.

    Returns the dataset plus the ground-truth respondent -> archetype map.
    """
    rng = random.Random(seed)
    responses = []
    truth: dict[str, str] = {}
    counter = 0
    for idx, archetype in enumerate(ARCHETYPES):
        for _ in range(per_cluster):
            rid = f"r-{counter:04d}"
            counter += 1
            truth[rid] = archetype
            general = {
                v: _clamp_score(VALUE_MEANS[v][idx] + rng.choice((-1, 0, 1)))
                for v in ValueName
            }
            app_values = {
                v: _clamp_score(general[v] + rng.choice((-1, 0, 1))) for v in ValueName
            }
            accepted = set()
            for data_type in DataType:
                tracked = rng.random() < _accept_probability(archetype, CollectionMode.TRACKED, data_type)
                linked = tracked or rng.random() < _accept_probability(archetype, CollectionMode.LINKED, data_type)
                unlinked = linked or rng.random() < _accept_probability(archetype, CollectionMode.UNLINKED, data_type)
                if tracked:
                    accepted.add(Practice(CollectionMode.TRACKED, data_type))
                if linked:
                    accepted.add(Practice(CollectionMode.LINKED, data_type))
                if unlinked:
                    try:
                        accepted.add(Practice(CollectionMode.UNLINKED, data_type))
                    except InvalidPractice:
                        pass  # identifier types have no unlinked form
            responses.append(
                SurveyResponse(
                    respondent_id=rid,
                    general_values=general,
                    app_values=app_values,
                    preferences=close_preferences(PreferenceSet(frozenset(accepted))),
                    survey_variant=SurveyVariant.LOSE_IT if counter % 2 else SurveyVariant.OPEN_LITTER_MAP,
                    demographics={
                        "demo_age_range": rng.choice(("18-24", "25-34", "35-44", "45-54")),
                        "demo_region": rng.choice(("north", "south", "east", "west")),
                    },
                )
            )
    dataset = SurveyDataset(
        responses=tuple(responses),
        source_file="synthetic",
        ingested_at=datetime.now(timezone.utc).isoformat(),
    )
    return dataset, truth


def write_survey_csv(dataset: SurveyDataset, path: str | Path) -> None:
    """Serialize a dataset back to the ingest CSV layout."""
    demo_columns = sorted({k for r in dataset.responses for k in r.demographics})
    header = ["respondent_id", "variant", *GV_COLUMNS, *AV_COLUMNS, *PREF_COLUMNS, *demo_columns]
    lines = [",".join(header)]
    for r in dataset.responses:
        row = [r.respondent_id, r.survey_variant.value]
        row += [str(r.general_values[v]) for v in ValueName]
        row += [str(r.app_values[v]) for v in ValueName]
        row += ["1" if p in r.preferences else "0" for p in ALL_PRACTICES]
        row += [r.demographics.get(c, "") for c in demo_columns]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def generate_survey_csv(path: str | Path, *, seed: int = 0, per_cluster: int = 30) -> dict[str, str]:
    dataset, truth = synthetic_survey(seed=seed, per_cluster=per_cluster)
    write_survey_csv(dataset, path)
    return truth


# -- catalog corpus ----------------------------------------------------------

_THEMES: dict[str, list[str]] = {
    "stepcount": ["steps", "walking", "pedometer", "activity", "goals"],
    "running": ["running", "pace", "route", "activity", "training"],
    "nutrition": ["calories", "diet", "food", "logging", "goals"],
    "sleep": ["sleep", "bedtime", "cycles", "tracking", "rest"],
    "meditation": ["calm", "breathing", "mindfulness", "rest", "focus"],
    "workout": ["gym", "strength", "training", "exercises", "plans"],
    "cycling": ["cycling", "route", "speed", "gps", "training"],
    "hydration": ["water", "reminders", "logging", "goals", "health"],
    "heartrate": ["pulse", "monitor", "heart", "health", "tracking"],
    "yoga": ["yoga", "poses", "flexibility", "mindfulness", "plans"],
}

_PRACTICE_POOL = [
    Practice(CollectionMode.UNLINKED, DataType.USAGE_DATA),
    Practice(CollectionMode.UNLINKED, DataType.DIAGNOSTIC_DATA),
    Practice(CollectionMode.UNLINKED, DataType.HEALTH_AND_FITNESS),
    Practice(CollectionMode.LINKED, DataType.HEALTH_AND_FITNESS),
    Practice(CollectionMode.LINKED, DataType.LOCATION),
    Practice(CollectionMode.LINKED, DataType.USAGE_DATA),
    Practice(CollectionMode.LINKED, DataType.CONTACT_INFO),
    Practice(CollectionMode.LINKED, DataType.PURCHASE_HISTORY),
    Practice(CollectionMode.TRACKED, DataType.USAGE_DATA),
    Practice(CollectionMode.TRACKED, DataType.LOCATION),
    Practice(CollectionMode.TRACKED, DataType.BROWSING_HISTORY),
    Practice(CollectionMode.TRACKED, DataType.CONTACT_INFO),
]


def generate_catalog_input(path: str | Path, *, seed: int = 0) -> None:
    """Write a catalog build input: 10 themed families of 10 apps, one app
    cross-listed between two families (so the build merges 10 -> 9), and
    three excluded apps (100 gathered -> 97 kept)."""
    rng = random.Random(seed)
    apps: list[dict[str, Any]] = []
    seeds: list[dict[str, Any]] = []
    for theme, pool in _THEMES.items():
        ids = [f"{theme}-{k:02d}" for k in range(10)]
        for k, app_id in enumerate(ids):
            keywords = sorted(set(pool[:3] + rng.sample(pool, 2)))
            if k == 1:
                practices: list[Practice] = []  # data-free app: green for everyone
            elif k == 2:
                practices = [
                    Practice(CollectionMode.TRACKED, DataType.SENSITIVE_INFO),
                    Practice(CollectionMode.TRACKED, DataType.CONTACT_INFO),
                    Practice(CollectionMode.TRACKED, DataType.LOCATION),
                ]  # tracker: red for everyone
            else:
                practices = rng.sample(_PRACTICE_POOL, rng.randint(2, 5))
            apps.append(
                {
                    "app_id": app_id,
                    "name": f"{theme.capitalize()} {pool[k % len(pool)].capitalize()} {k}",
                    "description": f"A {theme} app focused on {pool[k % len(pool)]}.",
                    "keywords": keywords,
                    "practices": sorted(p.key for p in practices),
                    "icon_ref": f"icons/{app_id}.png",
                }
            )
        similars = list(ids[1:])
        if theme == "stepcount":
            similars.append("running-04")  # shared listing: merges the two families
        seeds.append({"seed_app_id": ids[0], "similar_app_ids": similars})
    doc = {
        "apps": apps,
        "seeds": seeds,
        "exclusions": [
            {"app_id": "nutrition-07", "reason": "region locked"},
            {"app_id": "cycling-08", "reason": "requires companion hardware"},
            {"app_id": "yoga-09", "reason": "paid placeholder listing"},
        ],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def generate_concern_csv(
    path: str | Path, *, seed: int = 0, entry_n: int = 111, exit_n: int = 66
) -> None:
    """Entry/exit privacy-concern scores (unequal groups, entry higher)."""
    rng = random.Random(seed)
    lines = ["respondent_id,phase,score"]
    for i in range(entry_n):
        score = min(9.0, max(1.0, rng.gauss(6.8, 1.1)))
        lines.append(f"c-{i:04d},entry,{score:.2f}")
    for i in range(exit_n):
        score = min(9.0, max(1.0, rng.gauss(6.2, 1.2)))
        lines.append(f"c-{entry_n + i:04d},exit,{score:.2f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- scripted sessions -------------------------------------------------------

BEHAVIOR_CLASSES = ("always_alternatives", "never_alternatives", "mixed", "mixed")


@dataclass(frozen=True)
class SessionGroundTruth:
    """What the simulator intended: analytics must recover this exactly.

    ``decisions`` holds every decision payload the live service answered,
    in action order, for comparison against an offline log replay.
    """

    session_id: str
    behavior_class: str
    profile_id: str  # profile in effect at session end
    downloads_total: int
    downloads_consistent: int
    selective_notices: int
    alternatives_clicks: int
    ignored: int
    removed: int
    exploratory_shown: bool
    exploratory_answered: bool
    kept_profile: bool | None
    decisions: tuple[dict[str, Any], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "behavior_class": self.behavior_class,
            "profile_id": self.profile_id,
            "downloads_total": self.downloads_total,
            "downloads_consistent": self.downloads_consistent,
            "selective_notices": self.selective_notices,
            "alternatives_clicks": self.alternatives_clicks,
            "ignored": self.ignored,
            "removed": self.removed,
            "exploratory_shown": self.exploratory_shown,
            "exploratory_answered": self.exploratory_answered,
            "kept_profile": self.kept_profile,
            "decisions": list(self.decisions),
        }


@dataclass(frozen=True)
class SimulationReport:
    log_path: Path
    sessions: tuple[SessionGroundTruth, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "log_path": str(self.log_path),
            "sessions": [s.to_dict() for s in self.sessions],
        }


class _ScriptError(RuntimeError):
    pass


def _expect(response, code: int = 200) -> dict:
    if response.status_code != code:
        raise _ScriptError(
            f"{response.request.method} {response.request.url.path}: "
            f"got {response.status_code}, expected {code}: {response.text}"
        )
    return response.json()


def run_simulation(
    catalog_path: str | Path,
    profiles_path: str | Path,
    log_path: str | Path,
    *,
    sessions: int = 32,
    seed: int = 0,
    red_below: float = 0.1,
) -> SimulationReport:
    """Drive scripted sessions through the service and record ground truth.

    Session i takes behavior class i mod 4 — 25% always open alternatives
    on a selective notice, 25% always ignore, half alternate — and every
    session meets exactly two selective notices, so the engagement
    histogram planted here is 25% above 0.9 and 25% below 0.1. Even
    sessions attempt a download inside the exploratory window and answer
    the notice (every eighth session switches profile).

    Deterministic for a given seed: fake clock, scripted choices, and
    fresh session counters make reruns byte-identical.
    """
    log_path = Path(log_path)
    if log_path.exists():
        log_path.unlink()  # a leftover log would break replay bookkeeping
    config = ServiceConfig(
        catalog_path=Path(catalog_path),
        profiles_path=Path(profiles_path),
        log_path=log_path,
    )
    clock = FakeClock()
    app = create_app(config, clock=clock)
    rng = random.Random(seed)
    truths: list[SessionGroundTruth] = []
    with TestClient(app) as client:
        profile_ids = [p["profile_id"] for p in json.loads(client.get("/profiles").text)["profiles"]]
        for i in range(sessions):
            behavior = BEHAVIOR_CLASSES[i % 4]
            session_id = _expect(client.post("/session"))["session_id"]
            start = clock.monotonic()

            def at(elapsed_s: float) -> None:
                target = start + elapsed_s
                if target < clock.monotonic():
                    raise _ScriptError(f"script time went backwards at {elapsed_s}s")
                clock.advance(target - clock.monotonic())

            profile_id = profile_ids[i % len(profile_ids)]
            at(2.0)
            _expect(client.post(f"/session/{session_id}/profile", json={"profile_id": profile_id}))
            store = _expect(client.get(f"/session/{session_id}/apps"))["apps"]
            greens = [a for a in store if a["score"]["light"] == "green"]
            reds = [a for a in store if a["score"]["light"] == "red"]
            clean = [a for a in greens if a["score"]["coefficient"] == 1.0]
            if len(greens) < 2 or len(reds) < 2 or not clean:
                raise _ScriptError(
                    f"catalog lacks scripted material for {profile_id}: "
                    f"{len(greens)} green, {len(reds)} red, {len(clean)} clean"
                )

            installed: dict[str, bool] = {}
            decisions: list[dict[str, Any]] = []
            selective = clicks = ignored = removed = 0
            exploratory_shown = exploratory_answered = False
            kept: bool | None = None

            def decide(response) -> dict[str, Any]:
                decision = _expect(response)
                decisions.append(decision)
                return decision

            t = 10.0
            at(t)
            _expect(client.post(f"/session/{session_id}/view/{rng.choice(store)['app_id']}"))
            for green in rng.sample(greens, 2):
                t += 7.0
                at(t)
                decision = decide(client.post(f"/session/{session_id}/download/{green['app_id']}"))
                if not decision["downloaded"]:
                    raise _ScriptError(f"green app {green['app_id']} did not download")
                installed[green["app_id"]] = decision["score"]["coefficient"] > red_below

            for j, red in enumerate(rng.sample(reds, 2)):
                t += 12.0
                at(t)
                decision = decide(client.post(f"/session/{session_id}/download/{red['app_id']}"))
                if decision["outcome"] != "selective":
                    raise _ScriptError(f"red app {red['app_id']} gave {decision['outcome']}")
                selective += 1
                open_alternatives = behavior == "always_alternatives" or (
                    behavior == "mixed" and j % 2 == 0
                )
                t += 3.0
                at(t)
                if open_alternatives:
                    body = _expect(client.get(f"/session/{session_id}/alternatives/{red['app_id']}"))
                    clicks += 1
                    if body["alternatives"]:
                        choice = body["alternatives"][0]
                        t += 3.0
                        at(t)
                        decision = decide(
                            client.post(f"/session/{session_id}/download/{choice['app_id']}")
                        )
                        if not decision["downloaded"]:
                            raise _ScriptError(
                                f"alternative {choice['app_id']} did not download cleanly"
                            )
                        installed[choice["app_id"]] = decision["score"]["coefficient"] > red_below
                else:
                    decision = decide(
                        client.post(
                            f"/session/{session_id}/ignore",
                            json={"reason": f"I still want {red['name']}"},
                        )
                    )
                    ignored += 1
                    installed[red["app_id"]] = decision["score"]["coefficient"] > red_below

            if i % 2 == 0:
                at(212.0 + (i % 14))
                target = clean[0]
                decision = decide(client.post(f"/session/{session_id}/download/{target['app_id']}"))
                if decision["outcome"] != "exploratory":
                    raise _ScriptError(f"expected exploratory notice, got {decision['outcome']}")
                exploratory_shown = True
                at(217.0 + (i % 14))
                if i % 8 == 0 and len(profile_ids) > 1:
                    kept = False
                    profile_id = profile_ids[(i + 1) % len(profile_ids)]
                    answer = {"keep": False, "new_profile_id": profile_id}
                else:
                    kept = True
                    answer = {"keep": True}
                decision = decide(
                    client.post(f"/session/{session_id}/exploratory-answer", json=answer)
                )
                exploratory_answered = True
                if not decision["downloaded"]:
                    raise _ScriptError("clean app should download after the exploratory answer")
                installed[target["app_id"]] = decision["score"]["coefficient"] > red_below

            if i % 5 == 0 and installed:
                at(280.0)
                victim = sorted(installed)[0]
                _expect(client.post(f"/session/{session_id}/remove/{victim}"))
                del installed[victim]
                removed += 1

            truths.append(
                SessionGroundTruth(
                    session_id=session_id,
                    behavior_class=behavior,
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
                    decisions=tuple(decisions),
                )
            )
    return SimulationReport(log_path=log_path, sessions=tuple(truths))
