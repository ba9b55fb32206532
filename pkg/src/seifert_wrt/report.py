"""Machine-readable verification records."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath as mp

from .numerics.precision import format_complex, format_real


def to_jsonable(value: Any):
    """Deterministic JSON form: complex and real multiprecision values become strings."""
    if isinstance(value, mp.mpc):
        return format_complex(value)
    if isinstance(value, mp.mpf):
        return format_real(value, 30)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        return format_complex(mp.mpc(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


@dataclass
class VerificationReport:
    claim: str
    passed: bool
    lhs: Any = None
    rhs: Any = None
    residual: Any = None
    tolerance: Any = None
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.passed)

    def row(self) -> dict:
        out = {"claim": self.claim}
        for key in ("K", "kappa"):
            if key in self.details:
                out[key] = to_jsonable(self.details[key])
        out.update({
            "lhs": to_jsonable(self.lhs),
            "rhs": to_jsonable(self.rhs),
            "residual": to_jsonable(self.residual),
            "tolerance": to_jsonable(self.tolerance),
            "pass": bool(self.passed),
        })
        return out

    def to_dict(self) -> dict:
        out = self.row()
        out["details"] = to_jsonable(self.details)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
