"""Exceptions and resource budgets shared by every qforms module.

All long-running searches (lifting trees, lattice enumeration, box scans)
count abstract "node visits" against a budget so that a pathological input
fails loudly with partial progress instead of hanging.  The default budget
can be overridden with the environment variable ``QFORMS_BUDGET``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

DEFAULT_NODE_BUDGET = 10**8


class QFormsError(Exception):
    """Base class for all qforms errors."""


class InputError(QFormsError):
    """A precondition on user-supplied data failed (CLI exit code 2)."""


class BudgetError(QFormsError):
    """A search exceeded its node budget (CLI exit code 3).

    ``partial`` carries whatever progress marker the caller chose to attach
    (largest fully scanned bound, last completed prime, ...).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ContradictionError(QFormsError):
    """A precondition believed to hold was refuted mid-computation.

    Raised by the descent machinery when e.g. a step presupposes that strong
    local solubility fails but a nonsingular witness turns up; the witness is
    attached so the caller can report it.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def configured_budget() -> int:
    raw = os.environ.get("QFORMS_BUDGET")
    if raw is None:
        return DEFAULT_NODE_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise InputError(f"QFORMS_BUDGET must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise InputError("QFORMS_BUDGET must be positive")
    return value


@dataclass
class Budget:
    """Mutable spend counter; ``charge`` raises once the limit is crossed."""

    limit: int = field(default_factory=configured_budget)
    spent: int = 0

    def charge(self, amount: int, what: str = "search", partial=None) -> None:
        self.spent += amount
        if self.spent > self.limit:
            raise BudgetError(
                f"{what} exceeded node budget ({self.spent} > {self.limit})",
                partial=partial,
            )

    def would_exceed(self, amount: int) -> bool:
        return self.spent + amount > self.limit
