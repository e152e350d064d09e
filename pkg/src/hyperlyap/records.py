"""Run records: one JSON document per CLI invocation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction

from . import __version__

SCHEMA_VERSION = 1


def jsonable(value):
    """Recursively convert Fractions (to "p/q" strings) and tuples for JSON."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()  # numpy scalars
    return value


@dataclass
class RunRecord:
    command: str
    config: dict
    results: dict
    duration: float
    timestamp: str
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(jsonable(asdict(self)), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RunRecord:
        data = json.loads(text)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema {data.get('schema_version')!r}")
        return cls(**data)

    def reproducible_part(self) -> dict:
        """Everything except wall-clock fields."""
        d = json.loads(self.to_json())
        d.pop("duration")
        d.pop("timestamp")
        return d
