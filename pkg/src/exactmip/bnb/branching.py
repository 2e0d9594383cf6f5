"""Branching variable selection with plain and ancestral pseudocosts.

A pseudocost record is the per-unit change of the node LP value caused by a
branching.  Level-0 records are taken at the child created by the branching,
level-1 records one generation further down, attributing the grandchild's
gain to the grandparent's branching variable as well.  The ancestral score is
``APS = PS_0 + gamma * PS_1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..lp import LPResult
from ..model import Instance

__all__ = [
    "Direction",
    "BranchStep",
    "PseudocostStore",
    "DEFAULT_GAMMA",
    "fractional_candidates",
    "select_branch_var",
    "update_pseudocosts",
]

DEFAULT_GAMMA = Fraction(1, 5)


class Direction(str, enum.Enum):
    DOWN = "down"
    UP = "up"


@dataclass(frozen=True)
class BranchStep:
    """One branching on the path to a node.

    ``frac`` is the divisor of the record: ``{x}`` for the down child and
    ``1 - {x}`` for the up child.  ``parent_value`` is the LP value of the
    node that branched.
    """

    var: int
    direction: Direction
    frac: Fraction
    parent_value: Fraction


@dataclass
class _Avg:
    total: Fraction = Fraction(0)
    count: int = 0

    def add(self, value: Fraction):
        self.total += value
        self.count += 1

    @property
    def mean(self) -> Fraction | None:
        return self.total / self.count if self.count else None


@dataclass
class PseudocostStore:
    gamma: Fraction = DEFAULT_GAMMA
    reliability: int = 1
    level0: dict[tuple[int, Direction], _Avg] = field(default_factory=dict)
    level1: dict[tuple[int, Direction], _Avg] = field(default_factory=dict)

    def __post_init__(self):
        self.gamma = Fraction(self.gamma)
        if not 0 <= self.gamma <= 1:
            raise ValueError("discount factor must lie in [0, 1]")
        if self.reliability < 0:
            raise ValueError("reliability threshold must be nonnegative")

    def record(self, level: int, var: int, direction: Direction, value) -> None:
        table = self.level0 if level == 0 else self.level1
        table.setdefault((var, Direction(direction)), _Avg()).add(Fraction(value))

    def count(self, level: int, var: int, direction: Direction) -> int:
        table = self.level0 if level == 0 else self.level1
        avg = table.get((var, Direction(direction)))
        return avg.count if avg else 0

    def mean(self, level: int, var: int, direction: Direction) -> Fraction:
        table = self.level0 if level == 0 else self.level1
        avg = table.get((var, Direction(direction)))
        return avg.mean if avg and avg.count else Fraction(0)

    def aps(self, var: int, direction: Direction) -> Fraction:
        return self.mean(0, var, direction) + self.gamma * self.mean(1, var, direction)

    def reliable(self, var: int, ancestral: bool) -> bool:
        levels = (0, 1) if ancestral else (0,)
        return all(self.count(lv, var, d) >= self.reliability
                   for lv in levels for d in Direction)


def update_pseudocosts(store: PseudocostStore, lineage: Sequence[BranchStep],
                       value: Fraction) -> PseudocostStore:
    """Add the records caused by a node whose LP value is ``value``.

    ``lineage[-1]`` created the node, ``lineage[-2]`` (if any) created its parent.
    """
    if not lineage:
        return store
    last = lineage[-1]
    for step in lineage[-2:]:
        if step.frac <= 0:
            raise ValueError("fractional part must be positive")
    gain = Fraction(value) - last.parent_value
    store.record(0, last.var, last.direction, gain / last.frac)
    if len(lineage) >= 2:
        prev = lineage[-2]
        store.record(1, prev.var, prev.direction, gain / prev.frac)
    return store


def fractional_candidates(instance: Instance, point: Sequence[Fraction]) -> list[int]:
    return [j for j in instance.integral if Fraction(point[j]).denominator != 1]


def _most_fractional(cands, point):
    best, best_score = None, None
    for j in cands:
        f = point[j] - math.floor(point[j])
        score = min(f, 1 - f)
        if best_score is None or score > best_score:
            best, best_score = j, score
    return best


def select_branch_var(instance: Instance, lp: LPResult, store: PseudocostStore,
                      rule: str = "aps") -> int:
    """Pick a fractional integral variable of ``lp.primal``.

    ``aps`` scores by the product of down and up ancestral-pseudocost gains
    (sum as a secondary key), ``pscost`` by plain level-0 pseudocosts and
    ``firstfrac`` takes the lowest index.  If any candidate lacks reliable
    records the node falls back to the most fractional variable.
    """
    point = lp.primal
    cands = fractional_candidates(instance, point)
    if not cands:
        raise ValueError("no fractional integral variable to branch on")
    if rule == "firstfrac":
        return cands[0]
    if rule not in ("aps", "pscost"):
        raise ValueError(f"unknown branching rule {rule!r}")
    ancestral = rule == "aps" and store.gamma != 0
    if not all(store.reliable(j, ancestral) for j in cands):
        return _most_fractional(cands, point)
    best, best_key = None, None
    for j in cands:
        f = point[j] - math.floor(point[j])
        if ancestral:
            down = store.aps(j, Direction.DOWN) * f
            up = store.aps(j, Direction.UP) * (1 - f)
        else:
            down = store.mean(0, j, Direction.DOWN) * f
            up = store.mean(0, j, Direction.UP) * (1 - f)
        key = (down * up, down + up)
        if best_key is None or key > best_key:
            best, best_key = j, key
    return best
