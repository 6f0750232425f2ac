"""Budgeted model selection: accuracy floor, then memory, then energy, then priority."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .estimate import ModelReport


class Priority(str, enum.Enum):
    ACCURACY = "accuracy"
    MEMORY = "memory"
    ENERGY = "energy"


@dataclass(frozen=True)
class Budget:
    acc_min: float
    mem_max: float       # bits
    energy_max: float    # joules
    priority: Priority = Priority.ACCURACY

    def __post_init__(self):
        object.__setattr__(self, "priority", Priority(self.priority))
        if not 0.0 <= self.acc_min <= 1.0:
            raise ValueError("acc_min must lie in [0, 1]")
        if not (self.mem_max > 0 and self.energy_max > 0):
            raise ValueError("memory and energy budgets must be > 0")


def check(report: ModelReport, budget: Budget) -> str | None:
    """First failed step (``"step-1"``..``"step-3"``) or None if the model fits."""
    if not report.accuracy >= budget.acc_min:
        return "step-1"
    if not report.memory_bits <= budget.mem_max:
        return "step-2"
    if not report.energy_joules <= budget.energy_max:
        return "step-3"
    return None


_KEY = {
    Priority.ACCURACY: lambda r: -r.accuracy,
    Priority.MEMORY: lambda r: r.memory_bits,
    Priority.ENERGY: lambda r: r.energy_joules,
}


@dataclass
class Selection:
    selected: ModelReport | None
    verdicts: list  # (id, verdict) in input order

    def to_dict(self) -> dict:
        return {
            "selected": None if self.selected is None else self.selected.id,
            "verdicts": [{"id": i, "verdict": v} for i, v in self.verdicts],
        }


def select_model(reports, budget: Budget) -> Selection:
    """Filter by the three budget checks, then pick the best on ``budget.priority``.

    Ties keep input order. Verdicts are ``"selected"``, ``"feasible"`` (passed
    all checks but lost on priority) or the first failed step.
    """
    reports = list(reports)
    reasons = [check(r, budget) for r in reports]
    feasible = [r for r, why in zip(reports, reasons) if why is None]
    best = min(feasible, key=_KEY[budget.priority]) if feasible else None
    verdicts = []
    for r, why in zip(reports, reasons):
        if r is best:
            why = "selected"
        verdicts.append((r.id, why or "feasible"))
    return Selection(best, verdicts)
