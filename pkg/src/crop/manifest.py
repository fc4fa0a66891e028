"""Run manifests: enough hashes and settings to reproduce an output byte for byte."""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: Mapping) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_manifest(
    command: str,
    config: Mapping,
    inputs: Sequence[str | Path],
    outputs: Sequence[str | Path],
    seeds: Mapping[str, int] | None = None,
) -> dict:
    return {
        "command": command,
        "config": dict(config),
        "config_sha256": config_hash(config),
        "inputs": {str(p): sha256_file(p) for p in sorted(map(str, inputs))},
        "outputs": [str(p) for p in outputs],
        "seeds": dict(seeds or {}),
        "versions": {
            "crop": __version__,
            "python": "{}.{}.{}".format(*sys.version_info[:3]),
        },
    }


def write_manifest(path: str | Path, manifest: Mapping) -> None:
    Path(path).write_text(
        json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
