"""Shared builders: a hand-sized catalog and profiles with known coefficients."""
from __future__ import annotations

import pytest

from vcpa.catalog import Catalog
from vcpa.model import ALL_PRACTICES, AppRecord, Practice
from vcpa.profiles import ValueProfile
from vcpa.service import FakeClock, create_app


def make_profile(
    profile_id: str = "p-main",
    member_count: int = 10,
    counts: dict[str, int] | None = None,
    display_name: str | None = None,
) -> ValueProfile:
    """A profile accepting everything except the overridden practice counts.

    ``counts`` maps practice keys to how many of the ``member_count``
    members accept them; unlisted practices are accepted by everyone.
    """
    full = {p: member_count for p in ALL_PRACTICES}
    for key, n in (counts or {}).items():
        full[Practice.from_key(key)] = n
    return ValueProfile(
        profile_id=profile_id,
        display_name=display_name or profile_id,
        persona_text=f"{profile_id} persona",
        member_ids=frozenset(f"{profile_id}-m{i}" for i in range(member_count)),
        top_values=(),
        significantly_higher=frozenset(),
        significantly_lower=frozenset(),
        significantly_higher_bonferroni=frozenset(),
        significantly_lower_bonferroni=frozenset(),
        acceptance_fraction={p: c / member_count for p, c in full.items()},
        acceptance_count=full,
        member_count=member_count,
    )


def _app(app_id, name, family_id, keywords, practice_keys):
    return AppRecord(
        app_id=app_id,
        name=name,
        keywords=frozenset(keywords),
        practices=frozenset(Practice.from_key(k) for k in practice_keys),
        family_id=family_id,
    )


@pytest.fixture
def profile_main() -> ValueProfile:
    # tracked:location 0/10 -> red apps; linked:location 3/10 -> yellow;
    # unlinked:usage_data 8/10 -> green
    return make_profile(
        "p-main",
        counts={
            "tracked:location": 0,
            "linked:location": 3,
            "unlinked:usage_data": 8,
            "linked:contact_info": 6,
        },
    )


@pytest.fixture
def profile_alt() -> ValueProfile:
    # same practices land differently: tracked:location is yellow here
    return make_profile(
        "p-alt",
        counts={
            "tracked:location": 2,
            "linked:location": 9,
            "unlinked:usage_data": 4,
        },
    )


@pytest.fixture
def catalog_small() -> Catalog:
    apps = {
        "maps-red": _app("maps-red", "Tracker Maps", "fam-maps", {"maps", "gps"},
                         ["tracked:location"]),
        "maps-yellow": _app("maps-yellow", "Casual Maps", "fam-maps", {"maps", "walks"},
                            ["linked:location"]),
        "maps-green": _app("maps-green", "Honest Maps", "fam-maps", {"maps", "offline"},
                           ["unlinked:usage_data"]),
        "maps-clean": _app("maps-clean", "Paper Maps", "fam-maps", {"maps", "paper"}, []),
        "solo-notes": _app("solo-notes", "Notes", "fam-solo", {"notes"},
                           ["unlinked:usage_data", "linked:contact_info"]),
    }
    families = {
        "fam-maps": frozenset({"maps-red", "maps-yellow", "maps-green", "maps-clean"}),
        "fam-solo": frozenset({"solo-notes"}),
    }
    return Catalog(apps=apps, families=families)


@pytest.fixture
def service_env(tmp_path, catalog_small, profile_main, profile_alt):
    """A live TestClient over real artifacts with a hand-cranked clock."""
    from fastapi.testclient import TestClient

    from vcpa.config import ServiceConfig
    from vcpa.profiles import save_profiles

    catalog_path = tmp_path / "catalog.json"
    profiles_path = tmp_path / "profiles.json"
    log_path = tmp_path / "events.ndjson"
    catalog_small.save(catalog_path)
    save_profiles([profile_main, profile_alt], profiles_path)
    config = ServiceConfig(
        catalog_path=catalog_path, profiles_path=profiles_path, log_path=log_path
    )
    clock = FakeClock()
    app = create_app(config, clock=clock)
    with TestClient(app) as client:
        yield client, clock, log_path
