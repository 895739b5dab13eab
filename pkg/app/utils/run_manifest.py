"""
Run manifests embedded in every command output
"""

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from app import __version__


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def file_digest(path: Any) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_digest(inputs: Mapping[str, Any]) -> str:
    """sha256 of the canonical JSON of the run inputs"""
    canonical = json.dumps(inputs, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """Identifies a run: identical manifests give identical outputs"""

    command: str
    config_digest: str
    seed: Optional[int]
    tool_version: str = __version__
    started_at: str = field(default_factory=_utc_now)
    finished_at: Optional[str] = None
    inputs: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def start(
        cls,
        command: str,
        options: Mapping[str, Any],
        files: Optional[Mapping[str, Any]] = None,
        seed: Optional[int] = None,
    ) -> "RunManifest":
        """Digest the options together with the content hash of each input file"""
        hashed_files = {
            name: {"name": Path(path).name, "sha256": file_digest(path)}
            for name, path in (files or {}).items()
            if path is not None
        }
        inputs = {"options": dict(options), "files": hashed_files}
        return cls(
            command=command,
            config_digest=config_digest({"command": command, **inputs}),
            seed=seed,
            inputs=inputs,
        )

    def finish(self) -> "RunManifest":
        self.finished_at = _utc_now()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "inputs": self.inputs,
        }
