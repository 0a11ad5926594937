"""Command-line pipeline driver and service launcher.

Stages write one artifact each and can register it in a shared manifest;
a stage handed a manifest verifies that the inputs it reads are the exact
bytes an earlier stage recorded. Exit codes: 0 ok, 1 user error (bad
arguments, malformed input, manifest mismatch), 2 internal error.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__, analytics
from .catalog import build_catalog, load_catalog_input, Catalog
from .config import load_config
from .engine import Engine
from .errors import ManifestMismatch, VcpaError
from .eventlog import EventLog
from .manifest import PipelineManifest, sha256_file
from .model import RED_BELOW
from .profiles import (
    assemble_profiles,
    cluster_general_values,
    load_profiles,
    save_dendrogram,
    save_profiles,
)
from .survey import SurveyDataset, correlate_values_preferences, correlation_table_csv, ingest_csv


def _load_manifest(path: Path) -> PipelineManifest:
    return PipelineManifest.load(path) if path.exists() else PipelineManifest()


def _verify_inputs(manifest: PipelineManifest, inputs: dict[str, Path]) -> None:
    """Inputs that an earlier stage recorded must hash to the recorded value."""
    for name, path in inputs.items():
        entry = manifest.artifacts.get(name)
        if entry is not None and sha256_file(path) != entry.sha256:
            raise ManifestMismatch(
                f"{name}: {path} does not match the hash recorded in the manifest"
            )


def _finish_stage(
    manifest_path: Path | None,
    inputs: dict[str, Path],
    name: str,
    output: Path,
) -> None:
    if manifest_path is None:
        return
    manifest = _load_manifest(manifest_path)
    _verify_inputs(manifest, inputs)
    manifest.record(name, output, base_dir=manifest_path.parent)
    manifest.save(manifest_path)


manifest_option = click.option(
    "--manifest",
    type=click.Path(path_type=Path),
    default=None,
    help="Pipeline manifest to verify inputs against and record the output in.",
)


@click.group()
@click.version_option(version=__version__, prog_name="vcpa")
def cli() -> None:
    """Value profiles, acceptability scoring, and the mock store service."""


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@manifest_option
def ingest(input_path: Path, output_path: Path, manifest: Path | None) -> None:
    """Parse a survey CSV into the canonical dataset artifact."""
    result = ingest_csv(input_path)
    result.dataset.save(output_path)
    for rejection in result.rejections:
        click.echo(f"rejected {rejection}", err=True)
    click.echo(
        f"ingested {len(result.dataset)} of {result.total_rows} rows -> {output_path}"
    )
    _finish_stage(manifest, {}, "dataset", output_path)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@click.option("--app-values", is_flag=True, help="Correlate app-specific instead of general values.")
@manifest_option
def correlate(input_path: Path, output_path: Path, app_values: bool, manifest: Path | None) -> None:
    """Rank correlations between value scores and practice acceptance."""
    if manifest is not None:
        _verify_inputs(_load_manifest(manifest), {"dataset": input_path})
    dataset = SurveyDataset.load(input_path)
    rows = correlate_values_preferences(dataset, use_app_values=app_values)
    Path(output_path).write_text(correlation_table_csv(rows), encoding="utf-8")
    degenerate = sum(1 for r in rows if r.degenerate)
    click.echo(f"wrote {len(rows)} correlations ({degenerate} degenerate) -> {output_path}")
    _finish_stage(manifest, {"dataset": input_path}, "correlations", output_path)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@click.option("--k", default=3, show_default=True, help="Number of clusters to cut.")
@manifest_option
def cluster(input_path: Path, output_path: Path, k: int, manifest: Path | None) -> None:
    """Cluster respondents on general values; write the dendrogram and cut."""
    if manifest is not None:
        _verify_inputs(_load_manifest(manifest), {"dataset": input_path})
    dataset = SurveyDataset.load(input_path)
    dendrogram, member_sets = cluster_general_values(dataset, k)
    save_dendrogram(dendrogram, member_sets, output_path)
    sizes = ", ".join(str(len(m)) for m in member_sets)
    click.echo(f"cut {len(dataset)} respondents into k={k} clusters ({sizes}) -> {output_path}")
    _finish_stage(manifest, {"dataset": input_path}, "dendrogram", output_path)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@click.option("--k", default=3, show_default=True, help="Number of profiles to mine.")
@click.option("--names", default=None, help="Comma-separated display names, one per cluster.")
@manifest_option
def profiles(
    input_path: Path, output_path: Path, k: int, names: str | None, manifest: Path | None
) -> None:
    """Mine value profiles: cluster, characterize, count practice acceptance."""
    if manifest is not None:
        _verify_inputs(_load_manifest(manifest), {"dataset": input_path})
    dataset = SurveyDataset.load(input_path)
    display_names = [n.strip() for n in names.split(",")] if names else None
    _, mined = assemble_profiles(dataset, k, display_names)
    save_profiles(mined, output_path)
    for p in mined:
        tops = ", ".join(v.value for v in p.top_values)
        click.echo(f"{p.profile_id} ({p.display_name}): {p.member_count} members, top values {tops}")
    click.echo(f"wrote {len(mined)} profiles -> {output_path}")
    _finish_stage(manifest, {"dataset": input_path}, "profiles", output_path)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@manifest_option
def catalog(input_path: Path, output_path: Path, manifest: Path | None) -> None:
    """Build the store catalog: families from seeds, merge, dedupe, exclude."""
    apps, seeds, exclusions = load_catalog_input(input_path)
    built = build_catalog(apps, seeds, exclusions)
    built.save(output_path)
    click.echo(
        f"catalog: {len(built.apps)} apps in {len(built.families)} families "
        f"({len(built.exclusions)} excluded) -> {output_path}"
    )
    _finish_stage(manifest, {}, "catalog", output_path)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--catalog", "catalog_path", type=click.Path(path_type=Path), default=None)
@click.option("--profiles", "profiles_path", type=click.Path(path_type=Path), default=None)
@click.option("--log", "log_path", type=click.Path(path_type=Path), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--red-threshold", type=float, default=None, help="Red traffic-light cutoff.")
def serve(
    config_path: Path | None,
    catalog_path: Path | None,
    profiles_path: Path | None,
    log_path: Path | None,
    host: str | None,
    port: int | None,
    red_threshold: float | None,
) -> None:
    """Run the store service (config file < flags)."""
    import dataclasses

    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    overrides = {
        "catalog_path": catalog_path,
        "profiles_path": profiles_path,
        "log_path": log_path,
        "host": host,
        "port": port,
        "red_below": red_threshold,
    }
    config = dataclasses.replace(
        config, **{k: v for k, v in overrides.items() if v is not None}
    )
    app = create_app(config)
    click.echo(f"serving on http://{config.host}:{config.port}", err=True)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@cli.command()
@click.option("--output-dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=0, show_default=True, help="Seed for all synthetic generation.")
@click.option("--sessions", default=32, show_default=True)
@click.option("--k", default=3, show_default=True)
def simulate(output_dir: Path, seed: int, sessions: int, k: int) -> None:
    """Generate a synthetic corpus, run the pipeline, drive scripted sessions.

    Writes survey.csv, dataset.json, profiles.json, catalog input and
    catalog.json, concern.csv, the session event log, the scripted ground
    truth, and a manifest covering all of it.
    """
    from .simulate import (
        generate_catalog_input,
        generate_concern_csv,
        run_simulation,
        synthetic_survey,
        write_survey_csv,
    )

    output_dir.mkdir(parents=True, exist_ok=True)
    survey_csv = output_dir / "survey.csv"
    dataset_path = output_dir / "dataset.json"
    profiles_path = output_dir / "profiles.json"
    catalog_input = output_dir / "catalog_input.json"
    catalog_path = output_dir / "catalog.json"
    concern_csv = output_dir / "concern.csv"
    log_path = output_dir / "events.ndjson"
    truth_path = output_dir / "ground_truth.json"

    dataset, _ = synthetic_survey(seed=seed)
    write_survey_csv(dataset, survey_csv)
    ingested = ingest_csv(survey_csv)
    if ingested.rejections:
        raise VcpaError(f"synthetic survey produced rejected rows: {ingested.rejections[0]}")
    ingested.dataset.save(dataset_path)
    _, mined = assemble_profiles(ingested.dataset, k)
    save_profiles(mined, profiles_path)
    generate_catalog_input(catalog_input, seed=seed)
    apps, seeds, exclusions = load_catalog_input(catalog_input)
    build_catalog(apps, seeds, exclusions).save(catalog_path)
    generate_concern_csv(concern_csv, seed=seed)

    report = run_simulation(
        catalog_path, profiles_path, log_path, sessions=sessions, seed=seed
    )
    truth_path.write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    manifest = PipelineManifest()
    for name, path in [
        ("survey", survey_csv),
        ("dataset", dataset_path),
        ("profiles", profiles_path),
        ("catalog_input", catalog_input),
        ("catalog", catalog_path),
        ("concern", concern_csv),
        ("log", log_path),
        ("ground_truth", truth_path),
    ]:
        manifest.record(name, path, base_dir=output_dir)
    manifest.save(output_dir / "manifest.json")
    click.echo(
        f"simulated {len(report.sessions)} sessions (seed {seed}) -> {output_dir}"
    )


@cli.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--profiles", "profiles_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--concern", "concern_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--red-threshold", type=float, default=None, help="Consistency cutoff (default 0.1).")
@click.option("--window-start-ms", type=int, default=210_000, show_default=True,
              help="Exploratory window assumed on replay; match the server's.")
@click.option("--window-end-ms", type=int, default=240_000, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None,
              help="Also write per-session metrics as CSV.")
@click.option("--output", "output_path", type=click.Path(path_type=Path), default=None,
              help="Write the report here instead of stdout.")
@click.option("--replay/--no-replay", default=True, show_default=True,
              help="Re-drive the log through the engine and verify it first.")
def report(
    log_path: Path,
    catalog_path: Path,
    profiles_path: Path,
    concern_path: Path | None,
    red_threshold: float | None,
    window_start_ms: int,
    window_end_ms: int,
    csv_path: Path | None,
    output_path: Path | None,
    replay: bool,
) -> None:
    """Summarize a session log: consistency, notices, engagement."""
    catalog_doc = Catalog.load(catalog_path)
    profile_list = load_profiles(profiles_path)
    events = EventLog(log_path).read_all()
    red_below = RED_BELOW if red_threshold is None else red_threshold
    if replay:
        engine = Engine(catalog_doc, profile_list, red_below=red_below,
                        window_start_ms=window_start_ms, window_end_ms=window_end_ms)
        verified = analytics.replay_check(events, engine)
        click.echo(f"replay: {verified} sessions verified against the log", err=True)
    metrics = analytics.consistency(events, catalog_doc, profile_list, red_below=red_below)
    concern = None
    if concern_path is not None:
        entry, exit_ = analytics.load_concern_csv(concern_path)
        concern = analytics.entry_exit_concern(entry, exit_)
    text = analytics.report_text(metrics, concern)
    if csv_path is not None:
        csv_path.write_text(analytics.metrics_csv(metrics), encoding="utf-8")
        click.echo(f"metrics csv -> {csv_path}", err=True)
    if output_path is not None:
        output_path.write_text(text, encoding="utf-8")
        click.echo(f"report -> {output_path}", err=True)
    else:
        click.echo(text, nl=False)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit codes (0 ok, 1 user, 2 internal)."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except VcpaError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc!r}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
