"""Round-fix-and-complete repair of near-integral LP points."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from ..lp import LocalBounds, LPStatus, solve_lp
from ..model import Instance, check_feasible

__all__ = ["repair_solution"]


def _complete(instance: Instance, local: LocalBounds, x: list[Fraction]):
    ints = instance.integral
    if len(ints) == instance.n:
        return tuple(x) if check_feasible(instance, x) else None
    fixed = local
    for j in ints:
        fixed = fixed.tighten(j, "lower", x[j]).tighten(j, "upper", x[j])
    lp = solve_lp(instance, fixed)
    if lp.status is LPStatus.INFEASIBLE:
        return None
    return lp.primal


def repair_solution(instance: Instance, point: Sequence, local: LocalBounds | None = None):
    """Round every integral variable of ``point`` to the nearest integer inside
    its bounds, fix it there and re-optimise the continuous variables exactly.

    Returns a feasible point (a tuple of Fractions) or None.
    """
    local = local or LocalBounds.from_instance(instance)
    x = [Fraction(v) for v in point]
    for j in instance.integral:
        lo, up = local.lower[j], local.upper[j]
        if lo.is_finite and up.is_finite and math.ceil(lo.value) > math.floor(up.value):
            return None
        v = Fraction(math.floor(x[j] + Fraction(1, 2)))
        if lo.is_finite and v < lo.value:
            v = Fraction(math.ceil(lo.value))
        if up.is_finite and v > up.value:
            v = Fraction(math.floor(up.value))
        x[j] = v
    sol = _complete(instance, local, x)
    if sol is not None:
        assert check_feasible(instance, sol)
    return sol
