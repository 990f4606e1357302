"""Run manifests: every batch command records what it did beside its output."""

from __future__ import annotations

import json
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone


@dataclass
class RunManifest:
    command: str
    config: dict = field(default_factory=dict)
    seed: int | None = None
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    started_at: str = ""
    tool_version: str = "0.1.0"

    @staticmethod
    def start(command: str, config: dict, seed: int | None, inputs: list[str]) -> "RunManifest":
        manifest = RunManifest(
            command=command,
            config=config,
            seed=seed,
            inputs=inputs,
            started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        manifest._t0 = time.monotonic()  # type: ignore[attr-defined]
        return manifest

    def finish(self, outputs: list[str], counts: dict) -> None:
        self.outputs = outputs
        self.counts = counts
        self.wall_time_s = round(time.monotonic() - getattr(self, "_t0", time.monotonic()), 3)

    def write_beside(self, output_path: str) -> str | None:
        """Write ``<output>.manifest.json``; falls back to stderr for stdout runs."""
        if output_path == "-":
            print(f"[manifest] {json.dumps(asdict(self), sort_keys=True)}", file=sys.stderr)
            return None
        path = output_path + ".manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
