from __future__ import annotations

import random

import numpy as np
import pytest
import scipy.cluster.hierarchy as sch

from vcpa.errors import EmptyCluster, OutOfRange, TooFewResponses
from vcpa.model import (
    ALL_PRACTICES,
    Practice,
    PreferenceSet,
    SurveyResponse,
    SurveyVariant,
    ValueName,
)
from vcpa.profiles import (
    ValueProfile,
    acceptance_fractions,
    assemble_profiles,
    characterize_clusters,
    cluster_general_values,
    load_profiles,
    save_dendrogram,
    save_profiles,
    value_variances,
    ward_linkage,
)
from vcpa.survey import SurveyDataset, close_preferences

VALUES = list(ValueName)


def make_response(rid, general, app=None, accepted=()):
    return SurveyResponse(
        respondent_id=rid,
        general_values=general,
        app_values=app or general,
        preferences=close_preferences(PreferenceSet(frozenset(accepted))),
        survey_variant=SurveyVariant.LOSE_IT,
    )


def make_dataset(responses):
    return SurveyDataset(responses=tuple(responses), source_file="test")


def planted_blobs(seed=0, per_cluster=12, means=None):
    """Dataset with three well-separated clusters in value space."""
    rng = random.Random(seed)
    means = means or {
        # cluster 0 high on power/achievement/hedonism, 1 on openness,
        # 2 on tradition/benevolence/security
        0: dict(zip(VALUES, [8, 8, 8, 5, 5, 4, 3, 2, 3, 2])),
        1: dict(zip(VALUES, [3, 4, 5, 8, 8, 7, 5, 3, 3, 3])),
        2: dict(zip(VALUES, [2, 3, 2, 3, 4, 5, 8, 8, 8, 8])),
    }
    responses, labels = [], {}
    n = 0
    for c in range(3):
        for _ in range(per_cluster):
            rid = f"r{n:03d}"
            n += 1
            labels[rid] = c
            general = {
                v: max(1, min(9, means[c][v] + rng.choice((-1, 0, 1)))) for v in VALUES
            }
            responses.append(make_response(rid, general))
    return make_dataset(responses), labels


def _partition(labels_by_rid, member_sets):
    assignment = {}
    for c, members in enumerate(member_sets):
        for rid in members:
            assignment[rid] = c
    return assignment


class TestWardLinkage:
    @pytest.mark.parametrize("seed,k", [(0, 2), (1, 3), (2, 5)])
    def test_partitions_match_scipy(self, seed, k):
        rng = np.random.default_rng(seed)
        points = rng.uniform(0, 10, size=(40, 6))
        ours = ward_linkage(points)
        z = sch.linkage(points, method="ward")
        assert np.allclose(sorted(m.height for m in ours.merges), np.sort(z[:, 2]), atol=1e-8)
        ours_cut = {frozenset(c) for c in ours.cut(k)}
        labels = sch.fcluster(z, k, criterion="maxclust")
        theirs = {}
        for i, lab in enumerate(labels):
            theirs.setdefault(lab, set()).add(i)
        assert ours_cut == {frozenset(c) for c in theirs.values()}

    def test_heights_non_decreasing(self):
        rng = np.random.default_rng(9)
        points = rng.normal(size=(25, 4))
        merges = ward_linkage(points).merges
        heights = [m.height for m in merges]
        assert heights == sorted(heights)
        assert merges[-1].size == 25

    def test_duplicate_points_do_not_break_determinism(self):
        points = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
        a = ward_linkage(points)
        b = ward_linkage(points.copy())
        assert a == b
        assert {frozenset(c) for c in a.cut(3)} == {
            frozenset({0, 1}), frozenset({2, 3}), frozenset({4}),
        }

    def test_cut_bounds(self):
        dend = ward_linkage(np.random.default_rng(1).normal(size=(6, 3)))
        with pytest.raises(OutOfRange):
            dend.cut(0)
        with pytest.raises(OutOfRange):
            dend.cut(7)
        assert len(dend.cut(1)) == 1
        assert len(dend.cut(6)) == 6


def test_cluster_general_values_recovers_planted_blobs():
    dataset, labels = planted_blobs(seed=3)
    _, member_sets = cluster_general_values(dataset, 3)
    got = _partition(labels, member_sets)
    # same partition as planted, up to relabeling
    by_planted = {}
    for rid, c in labels.items():
        by_planted.setdefault(c, set()).add(rid)
    by_found = {}
    for rid, c in got.items():
        by_found.setdefault(c, set()).add(rid)
    assert {frozenset(s) for s in by_planted.values()} == {
        frozenset(s) for s in by_found.values()
    }


def test_cluster_argument_validation():
    dataset, _ = planted_blobs(per_cluster=2)
    with pytest.raises(OutOfRange):
        cluster_general_values(dataset, 1)
    with pytest.raises(TooFewResponses):
        cluster_general_values(dataset, 99)


def test_characterize_flags_planted_extremes():
    dataset, labels = planted_blobs(seed=5, per_cluster=15)
    member_sets = []
    for c in range(3):
        member_sets.append(frozenset(rid for rid, lab in labels.items() if lab == c))
    stats = characterize_clusters(dataset, member_sets)
    assert {ValueName.POWER, ValueName.ACHIEVEMENT, ValueName.HEDONISM} <= stats[0].significantly_higher
    assert ValueName.TRADITION in stats[2].significantly_higher
    assert ValueName.POWER in stats[2].significantly_lower
    for s in stats:
        # bonferroni can only shrink the raw sets
        assert s.significantly_higher_bonferroni <= s.significantly_higher
        assert s.significantly_lower_bonferroni <= s.significantly_lower
        assert len(s.top_values) == 3
    assert stats[0].top_values[0] in {ValueName.POWER, ValueName.ACHIEVEMENT, ValueName.HEDONISM}


def test_constant_value_is_skipped_not_fatal():
    # everyone rates every value 5 -> no Kruskal-Wallis anywhere
    responses = [make_response(f"r{i}", {v: 5 for v in VALUES}) for i in range(12)]
    stats = characterize_clusters(
        make_dataset(responses),
        [frozenset(f"r{i}" for i in range(6)), frozenset(f"r{i}" for i in range(6, 12))],
    )
    for s in stats:
        assert not s.significantly_higher and not s.significantly_lower


def test_acceptance_fractions_are_exact_member_counts():
    tracked = Practice.from_key("tracked:location")
    responses = [
        make_response("a", {v: 5 for v in VALUES}, accepted={tracked}),
        make_response("b", {v: 5 for v in VALUES}, accepted={tracked}),
        make_response("c", {v: 5 for v in VALUES}),
        make_response("d", {v: 5 for v in VALUES}),
    ]
    dataset = make_dataset(responses)
    fractions = acceptance_fractions(dataset, {"a", "b", "c"})
    assert fractions[tracked] == 2 / 3
    assert fractions[Practice.from_key("linked:location")] == 2 / 3  # closure
    assert fractions[Practice.from_key("tracked:contacts")] == 0.0
    with pytest.raises(EmptyCluster):
        acceptance_fractions(dataset, set())
    with pytest.raises(EmptyCluster):
        acceptance_fractions(dataset, {"a", "ghost"})


def test_assemble_profiles_and_round_trip(tmp_path):
    dataset, _ = planted_blobs(seed=7)
    dendrogram, profiles = assemble_profiles(dataset, 3, ["One", "Two", "Three"])
    assert [p.profile_id for p in profiles] == ["profile-1", "profile-2", "profile-3"]
    assert {p.display_name for p in profiles} == {"One", "Two", "Three"}
    all_members = [rid for p in profiles for rid in p.member_ids]
    assert len(all_members) == len(dataset)
    assert len(set(all_members)) == len(all_members)
    for p in profiles:
        assert p.member_count == len(p.member_ids)
        for practice in ALL_PRACTICES:
            assert p.acceptance_fraction[practice] == (
                p.acceptance_count[practice] / p.member_count
            )
        assert p.display_name in p.persona_text

    path = tmp_path / "profiles.json"
    save_profiles(profiles, path)
    loaded = load_profiles(path)
    assert loaded == profiles

    with pytest.raises(OutOfRange):
        assemble_profiles(dataset, 3, ["only-one"])


def test_profiles_document_is_deterministic(tmp_path):
    dataset, _ = planted_blobs(seed=7)
    _, profiles = assemble_profiles(dataset, 3)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_profiles(profiles, a)
    save_profiles(assemble_profiles(dataset, 3)[1], b)
    assert a.read_bytes() == b.read_bytes()


def test_value_variances_sorted_desc():
    dataset, _ = planted_blobs(seed=2)
    ranked = value_variances(dataset)
    variances = [v for _, v in ranked]
    assert variances == sorted(variances, reverse=True)
    assert len(ranked) == 10


def test_save_dendrogram_includes_cut(tmp_path):
    import json

    dataset, _ = planted_blobs(seed=1, per_cluster=4)
    dendrogram, member_sets = cluster_general_values(dataset, 3)
    path = tmp_path / "dendrogram.json"
    save_dendrogram(dendrogram, member_sets, path)
    doc = json.loads(path.read_text())
    assert doc["n_leaves"] == 12
    assert len(doc["merges"]) == 11
    assert sorted(len(c) for c in doc["clusters"]) == sorted(len(m) for m in member_sets)
