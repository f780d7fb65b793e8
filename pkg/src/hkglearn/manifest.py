"""Run manifests: a canonical, digestable record of what produced an output.

The manifest holds the command line, content digests of every input file,
the seed and the model/grid configuration. Its own digest is stamped as
the first comment line of every output file, so an output can always be
traced to the exact invocation. Nothing time-dependent is stored;
identical invocations yield identical manifests and identical stamps.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import __version__

DIGEST_CHARS = 16


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: list
    inputs: dict = field(default_factory=dict)   # path -> sha256
    seed: int | None = None
    n_diseases: int | None = None
    n_symptoms: int | None = None
    model: str | None = None
    grids: dict | None = None
    version: str = __version__

    def to_json(self) -> str:
        payload = {
            "command": list(self.command),
            "inputs": dict(sorted(self.inputs.items())),
            "seed": self.seed,
            "n_diseases": self.n_diseases,
            "n_symptoms": self.n_symptoms,
            "model": self.model,
            "grids": self.grids,
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:DIGEST_CHARS]

    @property
    def header_line(self) -> str:
        return f"manifest {self.digest}"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")
