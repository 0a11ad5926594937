"""Pipeline manifest: which artifacts a run produced, with content hashes.

Each pipeline stage records its outputs here so a later stage (or a later
run) can verify it is reading exactly the bytes the earlier stage wrote.
Validation failures raise ManifestMismatch rather than silently mixing
artifacts from different runs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from .errors import ManifestMismatch, SchemaMismatch


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class ArtifactEntry:
    path: str  # as recorded; resolved relative to the manifest's directory
    sha256: str

    def to_dict(self) -> dict[str, str]:
        return {"path": self.path, "sha256": self.sha256}


@dataclass
class PipelineManifest:
    """Artifact registry for one pipeline run."""

    tool_version: str = __version__
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )
    artifacts: dict[str, ArtifactEntry] = field(default_factory=dict)

    def record(self, name: str, path: str | Path, *, base_dir: str | Path | None = None) -> None:
        """Hash the file at ``path`` and register it under ``name``.

        The stored path is relative to ``base_dir`` when the file lives
        underneath it, keeping manifests relocatable alongside their
        artifacts.
        """
        path = Path(path)
        stored = path
        if base_dir is not None:
            try:
                stored = path.resolve().relative_to(Path(base_dir).resolve())
            except ValueError:
                stored = path
        self.artifacts[name] = ArtifactEntry(path=str(stored), sha256=sha256_file(path))

    def resolve(self, name: str, base_dir: str | Path) -> Path:
        entry = self.artifacts.get(name)
        if entry is None:
            raise ManifestMismatch(f"manifest has no artifact named {name!r}")
        recorded = Path(entry.path)
        return recorded if recorded.is_absolute() else Path(base_dir) / recorded

    def validate(self, base_dir: str | Path, names: list[str] | None = None) -> None:
        """Verify recorded hashes against the files on disk.

        Checks the named artifacts (all of them by default) and raises
        ManifestMismatch describing every missing or altered file.
        """
        problems = []
        for name in sorted(names if names is not None else self.artifacts):
            entry = self.artifacts.get(name)
            if entry is None:
                problems.append(f"{name}: not recorded in manifest")
                continue
            target = self.resolve(name, base_dir)
            if not target.exists():
                problems.append(f"{name}: {target} is missing")
            elif sha256_file(target) != entry.sha256:
                problems.append(f"{name}: {target} does not match its recorded hash")
        if problems:
            raise ManifestMismatch("; ".join(problems))

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "created_at": self.created_at,
            "artifacts": {name: e.to_dict() for name, e in sorted(self.artifacts.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PipelineManifest":
        try:
            artifacts = {
                name: ArtifactEntry(path=e["path"], sha256=e["sha256"])
                for name, e in d.get("artifacts", {}).items()
            }
            return cls(
                tool_version=d["tool_version"],
                created_at=d.get("created_at", ""),
                artifacts=artifacts,
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise SchemaMismatch(f"malformed manifest: {exc!r}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "PipelineManifest":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaMismatch(f"cannot read manifest {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaMismatch(f"manifest {path} is not a JSON object")
        return cls.from_dict(doc)
