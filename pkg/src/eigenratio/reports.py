"""Inequality reports and the numeric constants they quote."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

E = math.e

IMPROVED_CHEEGER = 8.0 * math.sqrt(2.0)
RATIO_CONSTANT = (16.0 * E / (E - 1.0)) ** 2
BUSER_LEDOUX = (E - 1.0) / (math.sqrt(2.0) * E)
HIGHER_BUSER_LEDOUX = (E - 1.0) ** 2 / (16.0 * math.sqrt(2.0) * E**2)
# 6 * 16e/(e-1) = 151.87..., rounded up
CHENG_DIMENSION_FREE = 152.0

CONSTANTS = {
    "8*sqrt(2)": IMPROVED_CHEEGER,
    "(16e/(e-1))^2": RATIO_CONSTANT,
    "(e-1)/(sqrt(2)e)": BUSER_LEDOUX,
    "(e-1)^2/(16sqrt(2)e^2)": HIGHER_BUSER_LEDOUX,
    "152": CHENG_DIMENSION_FREE,
}

PASS, FAIL, REPORTED, SKIPPED, ERROR = "PASS", "FAIL", "REPORTED", "SKIPPED", "ERROR"


def within(lhs: float, rhs: float, rel: float = 1e-9) -> bool:
    return lhs <= rhs + rel * max(1.0, abs(rhs))


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    status: str
    constants: dict = field(default_factory=dict)
    note: str = ""
    model: str = ""
    k: Optional[int] = None
    extra: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model,
            "k": self.k,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "status": self.status,
            "constants": dict(self.constants),
            "note": self.note,
            "extra": _jsonable(self.extra),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def asserted(name, lhs, rhs, *, rel=1e-9, **kw) -> InequalityReport:
    """Report whose status is PASS iff ``lhs <= rhs + rel * max(1, |rhs|)``."""
    lhs, rhs = float(lhs), float(rhs)
    status = PASS if within(lhs, rhs, rel) else FAIL
    return InequalityReport(name=name, lhs=lhs, rhs=rhs, status=status, **kw)


def reported(name, lhs, rhs, **kw) -> InequalityReport:
    return InequalityReport(name=name, lhs=float(lhs), rhs=float(rhs), status=REPORTED, **kw)
