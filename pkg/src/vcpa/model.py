"""Shared domain types: values, data practices, survey responses, apps, scores, events.

Everything here is an immutable value object with a canonical JSON form.
Enumerations serialize as their snake_case member values.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping

from .errors import InvalidPractice, OutOfRange


class ValueName(str, enum.Enum):
    """The ten basic human values, in canonical serialization order."""

    POWER = "power"
    ACHIEVEMENT = "achievement"
    HEDONISM = "hedonism"
    STIMULATION = "stimulation"
    SELF_DIRECTION = "self_direction"
    UNIVERSALISM = "universalism"
    BENEVOLENCE = "benevolence"
    TRADITION = "tradition"
    CONFORMITY = "conformity"
    SECURITY = "security"


SCORE_MIN = 1
SCORE_MAX = 9


@dataclass(frozen=True)
class ValueScore:
    """A single 1-9 importance rating for one value."""

    value: ValueName
    score: int

    def __post_init__(self) -> None:
        if not isinstance(self.score, int) or not SCORE_MIN <= self.score <= SCORE_MAX:
            raise OutOfRange(f"score {self.score!r} out of [{SCORE_MIN}, {SCORE_MAX}]")


def validate_value_scores(scores: Mapping[ValueName, int]) -> dict[ValueName, int]:
    """Check a value-score map is complete (all 10 values) and in range."""
    missing = [v.value for v in ValueName if v not in scores]
    if missing:
        raise OutOfRange(f"missing scores for: {', '.join(missing)}")
    for value, score in scores.items():
        ValueScore(value, score)
    return {v: scores[v] for v in ValueName}


class DataType(str, enum.Enum):
    """The 13 collected data categories from the app privacy labels."""

    HEALTH_AND_FITNESS = "health_and_fitness"
    FINANCIAL = "financial"
    LOCATION = "location"
    SENSITIVE_INFO = "sensitive_info"
    CONTACTS = "contacts"
    PHONE_CONTENT = "phone_content"
    BROWSING_HISTORY = "browsing_history"
    SEARCH_HISTORY = "search_history"
    PURCHASE_HISTORY = "purchase_history"
    USAGE_DATA = "usage_data"
    DIAGNOSTIC_DATA = "diagnostic_data"
    CONTACT_INFO = "contact_info"
    OTHER_IDENTIFIERS = "other_identifiers"


class CollectionMode(str, enum.Enum):
    """How collected data relates to the user's identity."""

    UNLINKED = "unlinked"
    LINKED = "linked"
    TRACKED = "tracked"

    @property
    def order(self) -> int:
        """Position in the Unlinked < Linked < Tracked ordering."""
        return _MODE_ORDER.index(self)


_MODE_ORDER = (CollectionMode.UNLINKED, CollectionMode.LINKED, CollectionMode.TRACKED)

# Contact info and other identifiers only exist in linked or tracked form.
_EXCLUDED_COMBINATIONS = frozenset(
    {
        (CollectionMode.UNLINKED, DataType.CONTACT_INFO),
        (CollectionMode.UNLINKED, DataType.OTHER_IDENTIFIERS),
    }
)


@dataclass(frozen=True)
class Practice:
    """One (collection mode, data type) pair an app may require."""

    mode: CollectionMode
    data_type: DataType

    def __post_init__(self) -> None:
        if (self.mode, self.data_type) in _EXCLUDED_COMBINATIONS:
            raise InvalidPractice(f"{self.data_type.value} has no {self.mode.value} form")

    @property
    def key(self) -> str:
        return f"{self.mode.value}:{self.data_type.value}"

    @classmethod
    def from_key(cls, key: str) -> "Practice":
        mode_s, _, dtype_s = key.partition(":")
        try:
            return cls(CollectionMode(mode_s), DataType(dtype_s))
        except ValueError as exc:
            raise InvalidPractice(f"bad practice key {key!r}") from exc


def validate_practice(mode: CollectionMode, data_type: DataType) -> Practice:
    """Return the Practice for a valid combination; raise InvalidPractice otherwise."""
    return Practice(mode, data_type)


def all_practices() -> tuple[Practice, ...]:
    """All 37 valid practices in canonical (mode-major) order."""
    return ALL_PRACTICES


ALL_PRACTICES: tuple[Practice, ...] = tuple(
    Practice(mode, dtype)
    for mode in _MODE_ORDER
    for dtype in DataType
    if (mode, dtype) not in _EXCLUDED_COMBINATIONS
)

_PRACTICE_INDEX = {p: i for i, p in enumerate(ALL_PRACTICES)}


def practice_sort_key(practice: Practice) -> int:
    return _PRACTICE_INDEX[practice]


@dataclass(frozen=True)
class PreferenceSet:
    """The set of practices a respondent is willing to accept.

    May be empty ("collect nothing"). After preference closure it is
    downward-closed in mode for every data type.
    """

    accepted: frozenset[Practice] = frozenset()

    def __contains__(self, practice: Practice) -> bool:
        return practice in self.accepted

    def __iter__(self) -> Iterator[Practice]:
        return iter(sorted(self.accepted, key=practice_sort_key))

    def __len__(self) -> int:
        return len(self.accepted)

    def to_keys(self) -> list[str]:
        return [p.key for p in self]

    @classmethod
    def from_keys(cls, keys: list[str]) -> "PreferenceSet":
        return cls(frozenset(Practice.from_key(k) for k in keys))


class SurveyVariant(str, enum.Enum):
    LOSE_IT = "lose_it"
    OPEN_LITTER_MAP = "open_litter_map"


@dataclass(frozen=True)
class SurveyResponse:
    """One participant's value ratings, app-context value ratings, and preferences."""

    respondent_id: str
    general_values: Mapping[ValueName, int]
    app_values: Mapping[ValueName, int]
    preferences: PreferenceSet
    survey_variant: SurveyVariant
    demographics: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "general_values", validate_value_scores(self.general_values))
        object.__setattr__(self, "app_values", validate_value_scores(self.app_values))

    def to_dict(self) -> dict[str, Any]:
        return {
            "respondent_id": self.respondent_id,
            "general_values": {v.value: self.general_values[v] for v in ValueName},
            "app_values": {v.value: self.app_values[v] for v in ValueName},
            "preferences": self.preferences.to_keys(),
            "survey_variant": self.survey_variant.value,
            "demographics": dict(sorted(self.demographics.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SurveyResponse":
        return cls(
            respondent_id=d["respondent_id"],
            general_values={ValueName(k): v for k, v in d["general_values"].items()},
            app_values={ValueName(k): v for k, v in d["app_values"].items()},
            preferences=PreferenceSet.from_keys(d["preferences"]),
            survey_variant=SurveyVariant(d["survey_variant"]),
            demographics=dict(d.get("demographics", {})),
        )


@dataclass(frozen=True)
class AppRecord:
    """A store catalog entry."""

    app_id: str
    name: str
    description: str = ""
    keywords: frozenset[str] = frozenset()
    practices: frozenset[Practice] = frozenset()
    icon_ref: str | None = None
    family_id: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "app_id": self.app_id,
            "name": self.name,
            "description": self.description,
            "keywords": sorted(self.keywords),
            "practices": [p.key for p in sorted(self.practices, key=practice_sort_key)],
            "icon_ref": self.icon_ref,
            "family_id": self.family_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AppRecord":
        return cls(
            app_id=d["app_id"],
            name=d["name"],
            description=d.get("description", ""),
            keywords=frozenset(d.get("keywords", [])),
            practices=frozenset(Practice.from_key(k) for k in d.get("practices", [])),
            icon_ref=d.get("icon_ref"),
            family_id=d.get("family_id"),
        )


class TrafficLight(str, enum.Enum):
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"

    @property
    def order(self) -> int:
        return (TrafficLight.RED, TrafficLight.YELLOW, TrafficLight.GREEN).index(self)


RED_BELOW = 0.1
GREEN_ABOVE = 0.5


def classify_light(
    coefficient: float,
    *,
    red_below: float = RED_BELOW,
    green_above: float = GREEN_ABOVE,
) -> TrafficLight:
    """Map an acceptability coefficient in [0, 1] to its traffic light.

    Red strictly below 0.1, green strictly above 0.5, yellow in between;
    both boundaries classify as yellow.
    """
    if not 0.0 <= coefficient <= 1.0:
        raise OutOfRange(f"coefficient {coefficient!r} outside [0, 1]")
    if coefficient < red_below:
        return TrafficLight.RED
    if coefficient <= green_above:
        return TrafficLight.YELLOW
    return TrafficLight.GREEN


@dataclass(frozen=True)
class AcceptabilityScore:
    """Minimal acceptability coefficient plus its traffic-light class."""

    coefficient: float
    light: TrafficLight

    @classmethod
    def from_coefficient(
        cls,
        coefficient: float,
        *,
        red_below: float = RED_BELOW,
        green_above: float = GREEN_ABOVE,
    ) -> "AcceptabilityScore":
        return cls(
            coefficient=coefficient,
            light=classify_light(coefficient, red_below=red_below, green_above=green_above),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"coefficient": self.coefficient, "light": self.light.value}


class EventKind(str, enum.Enum):
    PROFILE_SELECTED = "profile_selected"
    APP_VIEWED = "app_viewed"
    DOWNLOAD_ATTEMPT = "download_attempt"
    SELECTIVE_NOTICE_SHOWN = "selective_notice_shown"
    NOTICE_IGNORED = "notice_ignored"
    ALTERNATIVES_OPENED = "alternatives_opened"
    EXPLORATORY_NOTICE_SHOWN = "exploratory_notice_shown"
    EXPLORATORY_NOTICE_ANSWERED = "exploratory_notice_answered"
    APP_DOWNLOADED = "app_downloaded"
    APP_REMOVED = "app_removed"


@dataclass(frozen=True)
class SessionEvent:
    """One record in the append-only interaction log.

    elapsed_ms is monotonic time since session start and drives all timing
    logic; wall_time is for audit only. For an exploratory answer,
    profile_id is the profile in effect after the answer.
    """

    session_id: str
    elapsed_ms: int
    wall_time: str
    kind: EventKind
    app_id: str | None = None
    profile_id: str | None = None
    reason: str | None = None
    kept_profile: bool | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "session_id": self.session_id,
            "elapsed_ms": self.elapsed_ms,
            "wall_time": self.wall_time,
            "kind": self.kind.value,
        }
        for key in ("app_id", "profile_id", "reason", "kept_profile"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SessionEvent":
        return cls(
            session_id=d["session_id"],
            elapsed_ms=d["elapsed_ms"],
            wall_time=d["wall_time"],
            kind=EventKind(d["kind"]),
            app_id=d.get("app_id"),
            profile_id=d.get("profile_id"),
            reason=d.get("reason"),
            kept_profile=d.get("kept_profile"),
        )
