"""Analysis reports and map fingerprints."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from enum import Enum
import json
import math

from cryptography.hazmat.primitives import hashes
import numpy as np

from .const import NAME, SIGNIFICANT_DIGITS, VERSION
from .quadapi.quadmap import QuadraticMap, map_to_dict


def round_float(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """Return value rounded to the given number of significant digits."""
    value = float(value)
    if not math.isfinite(value) or value == 0.0:
        return value
    return float(f"{value:.{digits}g}")


def plain(value):  # noqa: C901
    """Convert numpy arrays, complex numbers, enums and dataclasses to rounded JSON values."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, QuadraticMap):
        return map_to_dict(value)
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: plain(getattr(value, f.name)) for f in fields(value) if f.repr}
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, list | tuple):
        return [plain(v) for v in value]
    if isinstance(value, bool | np.bool_):
        return bool(value)
    if isinstance(value, int | np.integer):
        return int(value)
    if isinstance(value, complex | np.complexfloating):
        if value.imag == 0:
            return round_float(value.real)
        return [round_float(value.real), round_float(value.imag)]
    if isinstance(value, float | np.floating):
        return round_float(value)
    return value


def fingerprint(qmap: QuadraticMap) -> str:
    """Return the SHA-256 hex digest of the canonical JSON of the symmetrized map."""
    data = map_to_dict(qmap)
    data.pop("name", None)
    digest = hashes.Hash(hashes.SHA256())
    digest.update(json.dumps(plain(data), sort_keys=True, separators=(",", ":")).encode("utf-8"))
    return digest.finalize().hex()


@dataclass
class AnalysisReport:
    """Dataclass for the outcome of one command."""

    command: str
    arguments: dict = field(default_factory=dict)
    fingerprint: str = ""
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)
    status: str = "ok"
    result: dict = field(default_factory=dict)
    wall_time: float = 0.0
    program: str = f"{NAME} {VERSION}"

    def as_dict(self) -> dict:
        """Return the report as plain dictionary."""
        return {f.name: plain(getattr(self, f.name)) for f in fields(self)}

    def to_json(self, indent: int | None = 2) -> str:
        """Return the report as JSON with sorted keys."""
        return json.dumps(self.as_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> AnalysisReport:
        """Create a report from its JSON representation."""
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})
