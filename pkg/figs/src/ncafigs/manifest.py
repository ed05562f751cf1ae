"""Reading the simulator's run manifest and CSV outputs.

These renderers never recompute physics: the manifest plus the CSV files it
indexes are the entire input surface.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

__all__ = ["RunEntry", "Manifest", "SchemaError", "read_manifest", "load_csv"]

EXPECTED_COLUMNS = {
    "dynamics": ["t", "sx", "sz", "trace", "min_eig", "purity"],
    "steady": ["alpha", "sx_steady", "sz_steady"],
    "spectrum": ["omega", "cz", "re_chi", "im_chi", "t2"],
    "transmission": ["epsilon", "omega", "t2"],
}


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class RunEntry:
    kind: str
    method: str
    alpha: float
    status: str
    file: str

    @property
    def diverged(self) -> bool:
        return self.status.startswith("diverged")


@dataclass(frozen=True)
class Manifest:
    path: str
    entries: tuple

    @property
    def directory(self) -> str:
        return os.path.dirname(os.path.abspath(self.path))

    def of_kind(self, kind: str):
        return [e for e in self.entries if e.kind == kind and not e.status.startswith("failed")]


def read_manifest(path: str) -> Manifest:
    runs: dict[int, dict] = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.startswith("run."):
                continue
            head, _, val = line.partition(" = ")
            _, idx, key = head.split(".", 2)
            runs.setdefault(int(idx), {})[key] = val
    entries = tuple(
        RunEntry(
            kind=r["kind"],
            method=r["method"],
            alpha=float(r["alpha"]),
            status=r["status"],
            file=r["file"],
        )
        for _, r in sorted(runs.items())
    )
    return Manifest(path=path, entries=entries)


def load_csv(manifest: Manifest, entry: RunEntry) -> dict[str, np.ndarray]:
    """Load one indexed CSV, validating its header against the published schema."""
    path = os.path.join(manifest.directory, entry.file)
    if not os.path.exists(path):
        raise SchemaError(f"{entry.file}: file listed in manifest is missing")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    expected = EXPECTED_COLUMNS[entry.kind]
    for col in expected:
        if col not in header:
            raise SchemaError(f"{entry.file}: missing column {col!r} (header: {header})")
    for col in header:
        if col not in expected:
            raise SchemaError(f"{entry.file}: unexpected column {col!r}")
    data = np.array([[float(x) for x in row] for row in rows]) if rows else np.empty((0, len(header)))
    return {col: data[:, i] for i, col in enumerate(header)}
