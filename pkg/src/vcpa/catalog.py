"""Mock App Store catalog construction.

Families start from seed apps plus their similar-app lists, merge when they
share members, and lose duplicates to the family whose keyword union fits
best (Jaccard). Exclusion rules knock out individual apps with a recorded
reason. Apps never referenced by a seed are left out of the catalog.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import BothEmpty, DuplicateSeed, SchemaMismatch, UnknownApp
from .model import AppRecord


@dataclass(frozen=True)
class FamilySeed:
    seed_app_id: str
    similar_app_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.seed_app_id in self.similar_app_ids:
            raise DuplicateSeed(f"seed {self.seed_app_id!r} appears in its own similar list")

    @property
    def members(self) -> frozenset[str]:
        return frozenset((self.seed_app_id, *self.similar_app_ids))


@dataclass(frozen=True)
class ExclusionRule:
    app_id: str
    reason: str


def build_families(seeds: Sequence[FamilySeed]) -> dict[str, frozenset[str]]:
    """One provisional family per seed: the seed plus its similars."""
    if not seeds:
        raise SchemaMismatch("no family seeds given")
    families: dict[str, frozenset[str]] = {}
    for seed in seeds:
        family_id = f"fam-{seed.seed_app_id}"
        if family_id in families:
            raise DuplicateSeed(f"seed {seed.seed_app_id!r} given twice")
        families[family_id] = seed.members
    return families


def merge_shared(families: Mapping[str, frozenset[str]]) -> dict[str, frozenset[str]]:
    """Union families transitively whenever they share an app.

    Connected components over the share graph; a merged family takes the
    lexicographically smallest constituent family id. Idempotent and
    independent of input order.
    """
    parent: dict[str, str] = {fid: fid for fid in families}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            # keep the smaller id as the root
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra

    owner: dict[str, str] = {}
    for fid in sorted(families):
        for app_id in families[fid]:
            if app_id in owner:
                union(owner[app_id], fid)
            else:
                owner[app_id] = fid
    merged: dict[str, set[str]] = {}
    for fid in sorted(families):
        merged.setdefault(find(fid), set()).update(families[fid])
    return {fid: frozenset(apps) for fid, apps in merged.items()}


def jaccard(keywords_a: Iterable[str], keywords_b: Iterable[str]) -> float:
    a, b = set(keywords_a), set(keywords_b)
    if not a and not b:
        raise BothEmpty("jaccard undefined for two empty sets")
    return len(a & b) / len(a | b)


def resolve_duplicates(
    families: Mapping[str, frozenset[str]], apps: Mapping[str, AppRecord]
) -> dict[str, frozenset[str]]:
    """Assign every app still in multiple families to its best-fitting one.

    Fit is the Jaccard similarity between the app's keywords and the
    keyword union over the candidate family's members (pre-resolution
    composition, so the outcome does not depend on processing order). Ties
    go to the larger family, then the smaller family id. Families emptied
    by reassignment are dropped.
    """
    membership: dict[str, list[str]] = {}
    for fid in sorted(families):
        for app_id in families[fid]:
            membership.setdefault(app_id, []).append(fid)
    unions = {
        fid: frozenset().union(*(apps[a].keywords for a in members)) if members else frozenset()
        for fid, members in families.items()
    }
    resolved = {fid: set(members) for fid, members in families.items()}
    for app_id in sorted(membership):
        candidates = membership[app_id]
        if len(candidates) < 2:
            continue
        scored = sorted(
            candidates,
            key=lambda fid: (-jaccard(apps[app_id].keywords, unions[fid]), -len(families[fid]), fid),
        )
        for loser in scored[1:]:
            resolved[loser].discard(app_id)
    return {fid: frozenset(members) for fid, members in resolved.items() if members}


@dataclass(frozen=True)
class Catalog:
    """The built store: app records, their family partition, and what was excluded."""

    apps: Mapping[str, AppRecord]
    families: Mapping[str, frozenset[str]]
    exclusions: tuple[ExclusionRule, ...] = ()

    def family_of(self, app_id: str) -> frozenset[str]:
        app = self.apps.get(app_id)
        if app is None:
            raise UnknownApp(app_id)
        if app.family_id is None:
            return frozenset((app_id,))
        return self.families[app.family_id]

    def to_dict(self) -> dict[str, Any]:
        return {
            "apps": {app_id: self.apps[app_id].to_dict() for app_id in sorted(self.apps)},
            "families": {fid: sorted(self.families[fid]) for fid in sorted(self.families)},
            "exclusions": [
                {"app_id": e.app_id, "reason": e.reason} for e in self.exclusions
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Catalog":
        return cls(
            apps={k: AppRecord.from_dict(v) for k, v in d["apps"].items()},
            families={k: frozenset(v) for k, v in d["families"].items()},
            exclusions=tuple(
                ExclusionRule(e["app_id"], e["reason"]) for e in d.get("exclusions", [])
            ),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Catalog":
        return cls.from_dict(json.loads(Path(path).read_text()))


def apply_exclusions(catalog: Catalog, rules: Sequence[ExclusionRule]) -> Catalog:
    """Drop the listed apps, recording reasons; families emptied out disappear."""
    for rule in rules:
        if rule.app_id not in catalog.apps:
            raise UnknownApp(rule.app_id)
    removed = {rule.app_id for rule in rules}
    apps = {a: r for a, r in catalog.apps.items() if a not in removed}
    families = {
        fid: frozenset(m for m in members if m not in removed)
        for fid, members in catalog.families.items()
    }
    families = {fid: members for fid, members in families.items() if members}
    return Catalog(
        apps=apps,
        families=families,
        exclusions=tuple(catalog.exclusions) + tuple(rules),
    )


def build_catalog(
    apps: Sequence[AppRecord],
    seeds: Sequence[FamilySeed],
    exclusions: Sequence[ExclusionRule] = (),
) -> Catalog:
    """Full pipeline: provisional families, merge shared, dedupe, exclude."""
    by_id = {a.app_id: a for a in apps}
    if len(by_id) != len(apps):
        raise SchemaMismatch("duplicate app_id in app records")
    families = build_families(seeds)
    referenced = frozenset().union(*families.values())
    unknown = referenced - by_id.keys()
    if unknown:
        raise SchemaMismatch(f"seeds reference unknown app ids: {sorted(unknown)}")
    keywordless = sorted(a for a in referenced if not by_id[a].keywords)
    if keywordless:
        raise SchemaMismatch(f"apps without keywords cannot join families: {keywordless}")
    families = merge_shared(families)
    families = resolve_duplicates(families, by_id)
    included = {}
    for fid in sorted(families):
        for app_id in families[fid]:
            included[app_id] = replace(by_id[app_id], family_id=fid)
    catalog = Catalog(apps=included, families=families)
    return apply_exclusions(catalog, exclusions)


def load_catalog_input(path: str | Path) -> tuple[list[AppRecord], list[FamilySeed], list[ExclusionRule]]:
    """Read the build input document: app records, seeds, exclusion rules."""
    doc = json.loads(Path(path).read_text())
    try:
        apps = [AppRecord.from_dict(a) for a in doc["apps"]]
        seeds = [
            FamilySeed(s["seed_app_id"], tuple(s["similar_app_ids"])) for s in doc["seeds"]
        ]
        exclusions = [
            ExclusionRule(e["app_id"], e["reason"]) for e in doc.get("exclusions", [])
        ]
    except (KeyError, TypeError) as exc:
        raise SchemaMismatch(f"{path}: malformed catalog input ({exc})") from exc
    return apps, seeds, exclusions
