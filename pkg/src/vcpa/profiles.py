"""Profile mining: Ward clustering of general values, cluster characterization, personas.

The clusterer is agglomerative Ward linkage on Euclidean distance over the
z-scored n x 10 value matrix. It is fully deterministic: at equal merge
heights the pair with the lowest leaf indices merges first, so reruns and
platform changes cannot reshuffle profiles.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInput, EmptyCluster, OutOfRange, TooFewResponses
from .model import ALL_PRACTICES, Practice, ValueName
from .stats import dunn_posthoc, kruskal_wallis, zscore_by_variable
from .survey import SurveyDataset

SIGNIFICANCE_LEVEL = 0.05
DEFAULT_K = 3


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: cluster ids a < b joined at the given height."""

    a: int
    b: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Full merge sequence over n leaves; merged cluster i gets id n + i."""

    n_leaves: int
    merges: tuple[Merge, ...]

    def cut(self, k: int) -> list[frozenset[int]]:
        """Member leaf-index sets after stopping at k clusters, ordered by
        smallest member index."""
        if not 1 <= k <= self.n_leaves:
            raise OutOfRange(f"k must be in [1, {self.n_leaves}], got {k}")
        members: dict[int, frozenset[int]] = {i: frozenset((i,)) for i in range(self.n_leaves)}
        for step, merge in enumerate(self.merges[: self.n_leaves - k]):
            members[self.n_leaves + step] = members.pop(merge.a) | members.pop(merge.b)
        return sorted(members.values(), key=min)

    def leaf_order(self) -> list[int]:
        """Left-to-right leaf order for plotting."""
        if not self.merges:
            return list(range(self.n_leaves))
        children = {self.n_leaves + i: (m.a, m.b) for i, m in enumerate(self.merges)}
        order: list[int] = []
        stack = [self.n_leaves + len(self.merges) - 1]
        while stack:
            node = stack.pop()
            if node < self.n_leaves:
                order.append(node)
            else:
                a, b = children[node]
                stack.append(b)
                stack.append(a)
        return order

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_leaves": self.n_leaves,
            "merges": [[m.a, m.b, m.height, m.size] for m in self.merges],
            "leaf_order": self.leaf_order(),
        }


def ward_linkage(points: np.ndarray) -> Dendrogram:
    """Agglomerate n points to a single cluster with Ward's criterion.

    Distances update through the Lance-Williams recurrence; merge heights
    are the usual unsquared Ward distances and are non-decreasing. Ties
    resolve to the lexicographically smallest (i, j) slot pair, where a
    merged cluster keeps the slot of its smallest leaf.
    """
    n = points.shape[0]
    if n < 1:
        raise TooFewResponses("need at least one point")
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=float)
    slot_id = list(range(n))
    merges: list[Merge] = []
    for step in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], dist, np.inf)
        masked[np.tril_indices(n)] = np.inf
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        height = float(masked[i, j])
        ni, nj = sizes[i], sizes[j]
        merged_size = ni + nj
        # Lance-Williams update for Ward, applied in slot i
        k_mask = active.copy()
        k_mask[i] = k_mask[j] = False
        nk = sizes[k_mask]
        d_ik = dist[i, k_mask]
        d_jk = dist[j, k_mask]
        new_d = np.sqrt(
            ((ni + nk) * d_ik**2 + (nj + nk) * d_jk**2 - nk * height**2) / (merged_size + nk)
        )
        dist[i, k_mask] = new_d
        dist[k_mask, i] = new_d
        active[j] = False
        sizes[i] = merged_size
        id_a, id_b = sorted((slot_id[i], slot_id[j]))
        merges.append(Merge(id_a, id_b, height, int(merged_size)))
        slot_id[i] = n + step
    return Dendrogram(n_leaves=n, merges=tuple(merges))


def cluster_general_values(
    dataset: SurveyDataset, k: int = DEFAULT_K, per_respondent: bool = False
) -> tuple[Dendrogram, list[frozenset[str]]]:
    """Cluster respondents on z-scored general values, cut to exactly k.

    per_respondent standardizes within each respondent's row instead of
    per variable; it exists as a diagnostic only.
    """
    if k < 2:
        raise OutOfRange(f"k must be at least 2, got {k}")
    n = len(dataset)
    if n < k:
        raise TooFewResponses(f"need at least k={k} responses, got {n}")
    matrix = np.array(
        [[r.general_values[v] for v in ValueName] for r in dataset.responses], dtype=float
    )
    if per_respondent:
        z = zscore_by_variable(matrix.T).T
    else:
        z = zscore_by_variable(matrix)
    dendrogram = ward_linkage(z)
    member_sets = [
        frozenset(dataset.responses[i].respondent_id for i in leaves)
        for leaves in dendrogram.cut(k)
    ]
    return dendrogram, member_sets


@dataclass(frozen=True)
class ClusterCharacterization:
    """Per-cluster value profile relative to the other clusters."""

    top_values: tuple[ValueName, ...]
    significantly_higher: frozenset[ValueName]
    significantly_lower: frozenset[ValueName]
    significantly_higher_bonferroni: frozenset[ValueName]
    significantly_lower_bonferroni: frozenset[ValueName]
    mean_scores: Mapping[ValueName, float]


def _index_members(
    dataset: SurveyDataset, member_sets: Sequence[Iterable[str]]
) -> list[list[int]]:
    by_id = {r.respondent_id: i for i, r in enumerate(dataset.responses)}
    indexed = []
    for c, members in enumerate(member_sets):
        rows = sorted(by_id[m] for m in members)
        if not rows:
            raise EmptyCluster(f"cluster {c} has no members")
        indexed.append(rows)
    return indexed


def characterize_clusters(
    dataset: SurveyDataset, member_sets: Sequence[Iterable[str]]
) -> list[ClusterCharacterization]:
    """Kruskal-Wallis across clusters per value; Dunn post-hoc where p < 0.05.

    A value counts as significantly higher for a cluster only when every
    pairwise Dunn comparison against the other clusters is significant with
    that cluster's mean rank on top (mirrored for lower). Raw p < 0.05
    drives the primary sets; Bonferroni-adjusted sets ride along.
    """
    indexed = _index_members(dataset, member_sets)
    k = len(indexed)
    if k < 2:
        raise EmptyCluster("need at least 2 clusters to characterize")
    higher: list[set[ValueName]] = [set() for _ in range(k)]
    lower: list[set[ValueName]] = [set() for _ in range(k)]
    higher_bf: list[set[ValueName]] = [set() for _ in range(k)]
    lower_bf: list[set[ValueName]] = [set() for _ in range(k)]
    means: list[dict[ValueName, float]] = [{} for _ in range(k)]

    for value in ValueName:
        groups = [
            [float(dataset.responses[i].general_values[value]) for i in rows] for rows in indexed
        ]
        for c in range(k):
            means[c][value] = float(np.mean(groups[c]))
        try:
            overall = kruskal_wallis(groups)
        except DegenerateInput:
            continue  # every respondent gave the same score
        if overall.p_value >= SIGNIFICANCE_LEVEL:
            continue
        dunn = dunn_posthoc(groups)
        for c in range(k):
            others = [d for d in range(k) if d != c]
            for p_matrix, hi, lo in (
                (dunn.p, higher, lower),
                (dunn.p_adjusted, higher_bf, lower_bf),
            ):
                all_sig = all(p_matrix[c, d] < SIGNIFICANCE_LEVEL for d in others)
                if not all_sig:
                    continue
                if all(dunn.mean_ranks[c] > dunn.mean_ranks[d] for d in others):
                    hi[c].add(value)
                elif all(dunn.mean_ranks[c] < dunn.mean_ranks[d] for d in others):
                    lo[c].add(value)

    value_order = list(ValueName)
    out = []
    for c in range(k):
        top = tuple(
            sorted(value_order, key=lambda v: (-means[c][v], value_order.index(v)))[:3]
        )
        out.append(
            ClusterCharacterization(
                top_values=top,
                significantly_higher=frozenset(higher[c]),
                significantly_lower=frozenset(lower[c]),
                significantly_higher_bonferroni=frozenset(higher_bf[c]),
                significantly_lower_bonferroni=frozenset(lower_bf[c]),
                mean_scores=means[c],
            )
        )
    return out


def acceptance_fractions(
    dataset: SurveyDataset, member_set: Iterable[str]
) -> dict[Practice, float]:
    """Fraction of members whose (closed) preferences contain each practice."""
    counts, total = _acceptance_counts(dataset, member_set)
    return {p: counts[p] / total for p in ALL_PRACTICES}


def _acceptance_counts(
    dataset: SurveyDataset, member_set: Iterable[str]
) -> tuple[dict[Practice, int], int]:
    members = set(member_set)
    if not members:
        raise EmptyCluster("empty member set")
    rows = [r for r in dataset.responses if r.respondent_id in members]
    if len(rows) != len(members):
        missing = members - {r.respondent_id for r in rows}
        raise EmptyCluster(f"unknown respondent ids: {sorted(missing)}")
    counts = {
        p: sum(1 for r in rows if p in r.preferences) for p in ALL_PRACTICES
    }
    return counts, len(rows)


def value_label(value: ValueName) -> str:
    return value.value.replace("_", " ")


def _render_persona(
    display_name: str, stats: ClusterCharacterization
) -> str:
    top = [value_label(v) for v in stats.top_values]
    text = f"{display_name}s care most about {top[0]}, {top[1]}, and {top[2]}."
    value_order = list(ValueName)
    hi = [value_label(v) for v in sorted(stats.significantly_higher, key=value_order.index)]
    lo = [value_label(v) for v in sorted(stats.significantly_lower, key=value_order.index)]
    if hi:
        text += f" Compared to everyone else they place clearly more weight on {', '.join(hi)}."
    if lo:
        text += f" They place clearly less weight on {', '.join(lo)}."
    return text


@dataclass(frozen=True)
class ValueProfile:
    """A mined profile: who is in it, what they value, what they accept."""

    profile_id: str
    display_name: str
    persona_text: str
    member_ids: frozenset[str]
    top_values: tuple[ValueName, ...]
    significantly_higher: frozenset[ValueName]
    significantly_lower: frozenset[ValueName]
    significantly_higher_bonferroni: frozenset[ValueName]
    significantly_lower_bonferroni: frozenset[ValueName]
    acceptance_fraction: Mapping[Practice, float]
    acceptance_count: Mapping[Practice, int]
    member_count: int

    def to_dict(self) -> dict[str, Any]:
        value_order = list(ValueName)
        return {
            "profile_id": self.profile_id,
            "display_name": self.display_name,
            "persona_text": self.persona_text,
            "member_ids": sorted(self.member_ids),
            "member_count": self.member_count,
            "top_values": [v.value for v in self.top_values],
            "significantly_higher": [
                v.value for v in sorted(self.significantly_higher, key=value_order.index)
            ],
            "significantly_lower": [
                v.value for v in sorted(self.significantly_lower, key=value_order.index)
            ],
            "significantly_higher_bonferroni": [
                v.value
                for v in sorted(self.significantly_higher_bonferroni, key=value_order.index)
            ],
            "significantly_lower_bonferroni": [
                v.value
                for v in sorted(self.significantly_lower_bonferroni, key=value_order.index)
            ],
            "acceptance_fraction": {p.key: self.acceptance_fraction[p] for p in ALL_PRACTICES},
            "acceptance_count": {p.key: self.acceptance_count[p] for p in ALL_PRACTICES},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ValueProfile":
        return cls(
            profile_id=d["profile_id"],
            display_name=d["display_name"],
            persona_text=d["persona_text"],
            member_ids=frozenset(d["member_ids"]),
            top_values=tuple(ValueName(v) for v in d["top_values"]),
            significantly_higher=frozenset(ValueName(v) for v in d["significantly_higher"]),
            significantly_lower=frozenset(ValueName(v) for v in d["significantly_lower"]),
            significantly_higher_bonferroni=frozenset(
                ValueName(v) for v in d.get("significantly_higher_bonferroni", [])
            ),
            significantly_lower_bonferroni=frozenset(
                ValueName(v) for v in d.get("significantly_lower_bonferroni", [])
            ),
            acceptance_fraction={
                Practice.from_key(k): v for k, v in d["acceptance_fraction"].items()
            },
            acceptance_count={
                Practice.from_key(k): v for k, v in d["acceptance_count"].items()
            },
            member_count=d["member_count"],
        )


def assemble_profiles(
    dataset: SurveyDataset,
    k: int = DEFAULT_K,
    display_names: Sequence[str] | None = None,
) -> tuple[Dendrogram, list[ValueProfile]]:
    """Run the full mining pass: cluster, characterize, count acceptances, render.

    Profiles come back in cluster order (clusters ordered by their smallest
    respondent row index); display names map onto that order.
    """
    if display_names is not None and len(display_names) != k:
        raise OutOfRange(f"expected {k} display names, got {len(display_names)}")
    dendrogram, member_sets = cluster_general_values(dataset, k)
    characterizations = characterize_clusters(dataset, member_sets)
    profiles = []
    for i, (members, stats) in enumerate(zip(member_sets, characterizations)):
        counts, total = _acceptance_counts(dataset, members)
        fractions = {p: counts[p] / total for p in ALL_PRACTICES}
        name = display_names[i] if display_names else f"Profile {i + 1}"
        profiles.append(
            ValueProfile(
                profile_id=f"profile-{i + 1}",
                display_name=name,
                persona_text=_render_persona(name, stats),
                member_ids=members,
                top_values=stats.top_values,
                significantly_higher=stats.significantly_higher,
                significantly_lower=stats.significantly_lower,
                significantly_higher_bonferroni=stats.significantly_higher_bonferroni,
                significantly_lower_bonferroni=stats.significantly_lower_bonferroni,
                acceptance_fraction=fractions,
                acceptance_count=counts,
                member_count=total,
            )
        )
    return dendrogram, profiles


def value_variances(
    dataset: SurveyDataset, use_app_values: bool = False
) -> list[tuple[ValueName, float]]:
    """Sample variance of each value's scores, highest first."""
    if len(dataset) < 2:
        raise TooFewResponses("need at least 2 responses")
    value_order = list(ValueName)
    out = []
    for value in ValueName:
        scores = [
            (r.app_values if use_app_values else r.general_values)[value]
            for r in dataset.responses
        ]
        out.append((value, float(np.var(scores, ddof=1))))
    return sorted(out, key=lambda t: (-t[1], value_order.index(t[0])))


def profiles_document(profiles: Sequence[ValueProfile]) -> str:
    """Canonical JSON document consumed by the engine, the service, and the UI."""
    doc = {"profiles": [p.to_dict() for p in profiles]}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def save_profiles(profiles: Sequence[ValueProfile], path: str | Path) -> None:
    Path(path).write_text(profiles_document(profiles))


def load_profiles(path: str | Path) -> list[ValueProfile]:
    doc = json.loads(Path(path).read_text())
    return [ValueProfile.from_dict(d) for d in doc["profiles"]]


def save_dendrogram(dendrogram: Dendrogram, member_sets: Sequence[frozenset[str]], path: str | Path) -> None:
    doc = dendrogram.to_dict()
    doc["clusters"] = [sorted(m) for m in member_sets]
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
