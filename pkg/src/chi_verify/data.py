"""Result structures of the verification and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any

from chi_verify.utils import elements, fmt_fraction


class VerdictKind(Enum):
    """Outcome of a verification method."""

    PROVED_EQUAL = "ProvedEqual"
    NOT_EQUAL = "NotEqual"
    INCONCLUSIVE = "Inconclusive"

    @property
    def exit_code(self) -> int:
        """Return the process exit code of the outcome."""
        return {
            VerdictKind.PROVED_EQUAL: 0,
            VerdictKind.NOT_EQUAL: 1,
            VerdictKind.INCONCLUSIVE: 2,
        }[self]


@dataclass(frozen=True)
class Witness:
    """A valuation where both sides disagree, with a point realizing it."""

    antichain: tuple[int, ...]
    point: tuple[Fraction, ...]
    lhs: int
    rhs: int

    def to_dict(self) -> dict[str, Any]:
        """Return a JSON-ready dict with sets as element lists and exact points."""
        return {
            "valuation": [elements(m) for m in self.antichain],
            "point": [fmt_fraction(x) for x in self.point],
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass
class Verdict:
    """Outcome of one method on one n.

    ``stats`` must only hold values that are determined by the input, so two
    runs print the same JSON apart from ``elapsed_ms``.
    """

    n: int
    method: str
    kind: VerdictKind
    residual_terms: int = 0
    witness: Witness | None = None
    elapsed_ms: int = 0
    stats: dict[str, Any] = field(default_factory=dict)
    message: str = ""

    def to_dict(self) -> dict[str, Any]:
        """Return the verdict with keys in their fixed order."""
        return {
            "n": self.n,
            "method": self.method,
            "verdict": self.kind.value,
            "residual_terms": self.residual_terms,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "elapsed_ms": self.elapsed_ms,
            "stats": self.stats,
            "message": self.message,
        }

    def to_json(self) -> str:
        """Return the verdict as one line of JSON."""
        return json.dumps(self.to_dict())

    @property
    def exit_code(self) -> int:
        """Return the exit code of the verdict."""
        return self.kind.exit_code


@dataclass(frozen=True)
class ConjectureRow:
    """Result of comparing the inner sum at one J with its simple form."""

    j: int
    passed: bool
    by_cancellation: bool
    witness: Witness | None = None

    def describe(self) -> str:
        """Return one line of the conjecture table."""
        j = "{" + ",".join(str(i) for i in elements(self.j)) + "}"
        how = "cancellation" if self.by_cancellation else "valuations"
        if self.passed:
            return f"{j:<14} pass ({how})"
        assert self.witness is not None
        vals = [elements(m) for m in self.witness.antichain]
        return f"{j:<14} FAIL at {vals}"
