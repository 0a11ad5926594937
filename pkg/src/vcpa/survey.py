"""Survey ingestion, preference closure, and the value/preference correlation table.

CSV schema (header required, UTF-8, comma-separated), one row per respondent:

    respondent_id, variant,
    gv_<value> x10       general value scores, integers 1-9
    av_<value> x10       app-context value scores, integers 1-9
    pref_<mode>_<type>   0/1 acceptance flag for each of the 37 practices
    demo_*               optional free-form demographics, any number

Invalid rows are collected with line numbers, never silently dropped, and
never abort the ingest. Preferences are mode-closed at ingest so every
downstream consumer can assume tracked => linked => unlinked.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .errors import EmptyDataset, SchemaMismatch
from .model import (
    ALL_PRACTICES,
    CollectionMode,
    Practice,
    PreferenceSet,
    SurveyResponse,
    SurveyVariant,
    ValueName,
    practice_sort_key,
)
from .stats import TestResult, spearman
from .errors import DegenerateInput

SCHEMA_VERSION = "1"

GV_COLUMNS = [f"gv_{v.value}" for v in ValueName]
AV_COLUMNS = [f"av_{v.value}" for v in ValueName]
PREF_COLUMNS = [f"pref_{p.mode.value}_{p.data_type.value}" for p in ALL_PRACTICES]
REQUIRED_COLUMNS = ["respondent_id", "variant", *GV_COLUMNS, *AV_COLUMNS, *PREF_COLUMNS]


@dataclass(frozen=True)
class RowRejection:
    line_number: int
    reason: str

    def __str__(self) -> str:
        return f"line {self.line_number}: {self.reason}"


@dataclass(frozen=True)
class SurveyDataset:
    """Validated, closure-applied survey responses from one export file.

    ingested_at is audit metadata and is not part of the canonical JSON
    artifact, which stays byte-identical across reruns.
    """

    responses: tuple[SurveyResponse, ...]
    source_file: str
    ingested_at: str = field(default="", compare=False)

    def __len__(self) -> int:
        return len(self.responses)

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_file": self.source_file,
            "responses": [r.to_dict() for r in self.responses],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SurveyDataset":
        return cls(
            responses=tuple(SurveyResponse.from_dict(r) for r in d["responses"]),
            source_file=d.get("source_file", ""),
            ingested_at=d.get("ingested_at", ""),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SurveyDataset":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class IngestResult:
    dataset: SurveyDataset
    rejections: tuple[RowRejection, ...]

    @property
    def total_rows(self) -> int:
        return len(self.dataset) + len(self.rejections)


def close_preferences(prefs: PreferenceSet) -> PreferenceSet:
    """Minimal superset where accepting a mode implies accepting weaker ones.

    Tracked implies linked; linked implies unlinked wherever the unlinked
    form exists. Idempotent, extensive, and monotone.
    """
    closed = set(prefs.accepted)
    for practice in prefs.accepted:
        for mode in CollectionMode:
            if mode.order < practice.mode.order:
                try:
                    closed.add(Practice(mode, practice.data_type))
                except Exception:
                    continue  # no unlinked form for this data type
    return PreferenceSet(frozenset(closed))


def _parse_score(raw: str, column: str) -> int:
    try:
        score = int(raw)
    except (TypeError, ValueError):
        raise ValueError(f"{column}: score out of [1,9] (got {raw!r})")
    if not 1 <= score <= 9:
        raise ValueError(f"{column}: score out of [1,9] (got {raw!r})")
    return score


def _parse_row(row: dict[str, str]) -> SurveyResponse:
    respondent_id = (row.get("respondent_id") or "").strip()
    if not respondent_id:
        raise ValueError("empty respondent_id")
    try:
        variant = SurveyVariant(row["variant"].strip())
    except ValueError:
        raise ValueError(f"unknown variant {row['variant']!r}")
    general = {v: _parse_score(row[f"gv_{v.value}"], f"gv_{v.value}") for v in ValueName}
    app = {v: _parse_score(row[f"av_{v.value}"], f"av_{v.value}") for v in ValueName}
    accepted = set()
    for practice in ALL_PRACTICES:
        column = f"pref_{practice.mode.value}_{practice.data_type.value}"
        flag = row[column].strip()
        if flag not in ("0", "1"):
            raise ValueError(f"{column}: expected 0 or 1 (got {flag!r})")
        if flag == "1":
            accepted.add(practice)
    demographics = {
        k: v for k, v in row.items() if k.startswith("demo_") and v not in (None, "")
    }
    return SurveyResponse(
        respondent_id=respondent_id,
        general_values=general,
        app_values=app,
        preferences=close_preferences(PreferenceSet(frozenset(accepted))),
        survey_variant=variant,
        demographics=demographics,
    )


def ingest_csv(path: str | Path, schema_version: str = SCHEMA_VERSION) -> IngestResult:
    """Parse a survey export; valid rows are closed, invalid rows reported.

    Raises SchemaMismatch when the header (or schema version) is wrong;
    per-row problems are collected in the result, never fatal.
    """
    if schema_version != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported schema version {schema_version!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        unexpected = [
            c for c in header if c not in REQUIRED_COLUMNS and not c.startswith("demo_")
        ]
        if missing or unexpected:
            parts = []
            if missing:
                parts.append(f"missing columns: {', '.join(missing)}")
            if unexpected:
                parts.append(f"unexpected columns: {', '.join(unexpected)}")
            raise SchemaMismatch(f"{path}: " + "; ".join(parts))

        responses: list[SurveyResponse] = []
        rejections: list[RowRejection] = []
        seen_ids: set[str] = set()
        for row in reader:
            line = reader.line_num
            try:
                response = _parse_row(row)
            except ValueError as exc:
                rejections.append(RowRejection(line, str(exc)))
                continue
            if response.respondent_id in seen_ids:
                rejections.append(
                    RowRejection(line, f"duplicate respondent_id {response.respondent_id!r}")
                )
                continue
            seen_ids.add(response.respondent_id)
            responses.append(response)

    dataset = SurveyDataset(
        responses=tuple(responses),
        source_file=str(path),
        ingested_at=datetime.now(timezone.utc).isoformat(),
    )
    return IngestResult(dataset=dataset, rejections=tuple(rejections))


@dataclass(frozen=True)
class CorrelationRow:
    value: ValueName
    practice: Practice
    result: TestResult | None
    degenerate: bool

    @property
    def flagged(self) -> bool:
        return self.degenerate


def correlate_values_preferences(
    dataset: SurveyDataset, use_app_values: bool = False
) -> list[CorrelationRow]:
    """Spearman rho between each value's scores and each practice's 0/1 acceptance.

    One row per (value, practice) pair, 370 in total. Pairs where the
    acceptance indicator (or score vector) is constant are flagged
    degenerate rather than dropped.
    """
    if len(dataset) == 0:
        raise EmptyDataset("no responses to correlate")
    rows: list[CorrelationRow] = []
    score_of = (
        (lambda r, v: r.app_values[v]) if use_app_values else (lambda r, v: r.general_values[v])
    )
    for value in ValueName:
        scores = [score_of(r, value) for r in dataset.responses]
        for practice in ALL_PRACTICES:
            indicator = [1.0 if practice in r.preferences else 0.0 for r in dataset.responses]
            try:
                result = spearman(scores, indicator)
                rows.append(CorrelationRow(value, practice, result, degenerate=False))
            except DegenerateInput:
                rows.append(CorrelationRow(value, practice, None, degenerate=True))
    return rows


def correlation_table_csv(rows: Iterable[CorrelationRow]) -> str:
    """Render the correlation table as CSV text (deterministic)."""
    lines = ["value,practice,rho,p_value,degenerate"]
    for row in sorted(rows, key=lambda r: (list(ValueName).index(r.value), practice_sort_key(r.practice))):
        if row.result is None:
            lines.append(f"{row.value.value},{row.practice.key},,,"  "true")
        else:
            lines.append(
                f"{row.value.value},{row.practice.key},"
                f"{row.result.statistic!r},{row.result.p_value!r},false"
            )
    return "\n".join(lines) + "\n"
