"""Reproducibility manifests written alongside every produced artifact.

The manifest carries provenance (command, scenario digest, seeds, model
digests, version, wall time). It is deliberately the one output allowed to
differ between reruns; all CSV/JSON payloads are byte-stable.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class RunManifest:
    def __init__(self, command: str, args: dict, scenario_digest: str | None = None):
        self.command = command
        self.args = {k: v for k, v in args.items() if v is not None}
        self.scenario_digest = scenario_digest
        self.seeds: dict = {}
        self.models: dict = {}
        self.outputs: list[str] = []
        self._t0 = time.monotonic()

    def add_seed(self, name: str, value: int) -> None:
        self.seeds[name] = int(value)

    def add_model(self, name: str, path) -> None:
        self.models[str(name)] = {"path": str(path), "sha256": file_digest(path)}

    def add_output(self, path) -> None:
        self.outputs.append(str(path))

    def write(self, primary_output) -> Path:
        from . import __version__

        path = Path(str(primary_output) + ".manifest.json")
        payload = {
            "command": self.command,
            "args": self.args,
            "scenario_sha256": self.scenario_digest,
            "seeds": self.seeds,
            "models": self.models,
            "outputs": self.outputs,
            "tool_version": __version__,
            "wall_ms": int(1000 * (time.monotonic() - self._t0)),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        return path
