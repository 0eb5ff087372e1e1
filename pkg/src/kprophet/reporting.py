"""Run manifests and deterministic serialization.

Every artifact the service or CLI emits embeds a :class:`RunManifest`
describing the command and parameters that produced it. Reruns of a
seeded command must be byte-identical, so the manifest's timestamp is
null unless explicitly requested, and all floats are printed with
Python's shortest round-trip repr (17 significant digits at most, parsed
back to the same bits). The CSV writer uses the same float formatting so
CSV and JSON variants of one run carry numerically identical values.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from typing import Any

__all__ = ["RunManifest", "canonical_json", "bounds_csv", "TOOL_VERSION"]

TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict = field(default_factory=dict)
    tool_version: str = TOOL_VERSION
    seed: int | None = None
    timestamp: str | None = None

    @classmethod
    def create(
        cls,
        command: str,
        parameters: dict,
        seed: int | None = None,
        stamp: bool = False,
    ) -> "RunManifest":
        ts = _dt.datetime.now(_dt.timezone.utc).isoformat() if stamp else None
        return cls(command=command, parameters=parameters, seed=seed, timestamp=ts)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "timestamp": self.timestamp,
        }


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: fixed separators, repr floats, trailing newline."""
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def bounds_csv(rows: list[dict], manifest: RunManifest) -> str:
    """CSV table of bound rows with the manifest as a leading comment line.

    Header is ``k,v,y1,...`` padded to the widest row; rows with fewer
    breakpoints leave cells empty. Extra scalar columns (gamma for the
    finite model, theta_star for sweeps) are appended when present.
    """
    width = max((len(r.get("y", [])) for r in rows), default=0)
    extras = [c for c in ("gamma", "theta_star", "y1", "n") if any(r.get(c) is not None for r in rows)]
    header = ["k", "v"] + [f"y{i}" for i in range(1, width + 1)] + extras
    lines = [
        "# manifest: " + json.dumps(manifest.to_dict(), separators=(",", ":"), allow_nan=False),
        ",".join(header),
    ]
    for r in rows:
        y = list(r.get("y", []))
        cells = [_cell(r.get("k")), _cell(r.get("v"))]
        cells += [_cell(y[i]) if i < len(y) else "" for i in range(width)]
        cells += [_cell(r.get(c)) for c in extras]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
