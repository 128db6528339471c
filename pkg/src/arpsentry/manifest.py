"""Run manifests: resolved configuration plus output checksums, one per
CLI invocation, so pipeline runs are reproducible and diffable."""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ManifestWriter:
    """Collects run metadata and writes manifest_<subcommand>.json."""

    def __init__(self, subcommand: str, config: dict):
        self.subcommand = subcommand
        self.config = config
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self._start = time.monotonic()

    def add_input(self, path) -> None:
        path = Path(path)
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path) -> None:
        path = Path(path)
        self.outputs[str(path)] = sha256_file(path)

    def write(self, out_dir) -> Path:
        out_path = Path(out_dir) / f"manifest_{self.subcommand}.json"
        obj = {
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_clock_s": round(time.monotonic() - self._start, 3),
        }
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return out_path
