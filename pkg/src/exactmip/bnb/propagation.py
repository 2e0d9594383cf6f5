"""Activity-based bound propagation in exact arithmetic.

Every tightening is logged as a :class:`PropStep` so that the certificate
writer can replay it as a combination of the source row with bound lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..arith import ExtRational
from ..lp import LocalBounds
from ..model import Instance, LinearConstraint, Sense

__all__ = ["RowRef", "PropRow", "PropStep", "PropInfeasible", "PropagationResult",
           "rows_ge_form", "propagate_node"]


@dataclass(frozen=True)
class RowRef:
    """Where a ``>=``-form row comes from: ``kind`` is ``con``, ``cut`` or
    ``proof``; ``half`` is ``G`` or ``L`` for the side of the source row used."""

    kind: str
    index: int
    half: str = "G"


@dataclass(frozen=True)
class PropRow:
    coefs: dict[int, Fraction]
    rhs: Fraction
    ref: RowRef


@dataclass(frozen=True)
class PropStep:
    var: int
    side: str  # "lower" | "upper"
    value: Fraction
    ref: RowRef | None  # None: plain rounding of a fractional bound
    rounded: bool


@dataclass(frozen=True)
class PropInfeasible:
    var: int | None = None
    ref: RowRef | None = None


@dataclass
class PropagationResult:
    local: LocalBounds
    steps: list[PropStep] = field(default_factory=list)
    infeasible: PropInfeasible | None = None


def rows_ge_form(constraints: Sequence[LinearConstraint], kind: str = "con") -> list[PropRow]:
    rows = []
    for i, con in enumerate(constraints):
        if con.sense in (Sense.GE, Sense.EQ):
            rows.append(PropRow(dict(con.coefficients), con.rhs, RowRef(kind, i, "G")))
        if con.sense in (Sense.LE, Sense.EQ):
            rows.append(PropRow({j: -a for j, a in con.coefficients.items()}, -con.rhs,
                                RowRef(kind, i, "L")))
    return rows


def propagate_node(instance: Instance, local: LocalBounds,
                   rows: Iterable[PropRow] | None = None, max_rounds: int = 10) -> PropagationResult:
    """Tighten ``local`` until a fixpoint, infeasibility or ``max_rounds`` passes.

    ``rows`` defaults to the model constraints; callers add cuts and learned
    dual proofs.  Integral variables get their bounds rounded inward.
    """
    rows = rows_ge_form(instance.constraints) if rows is None else list(rows)
    lo, up = local.finite()
    integral = [v.integral for v in instance.variables]
    steps: list[PropStep] = []

    def done(witness=None):
        lower = tuple(ExtRational.finite(v) if v is not None else local.lower[j] for j, v in enumerate(lo))
        upper = tuple(ExtRational.finite(v) if v is not None else local.upper[j] for j, v in enumerate(up))
        return PropagationResult(LocalBounds(lower, upper), steps, witness)

    for j in range(instance.n):
        if lo[j] is not None and up[j] is not None and lo[j] > up[j]:
            return done(PropInfeasible(var=j))
        if not integral[j]:
            continue
        if lo[j] is not None and lo[j].denominator != 1:
            lo[j] = Fraction(math.ceil(lo[j]))
            steps.append(PropStep(j, "lower", lo[j], None, True))
        if up[j] is not None and up[j].denominator != 1:
            up[j] = Fraction(math.floor(up[j]))
            steps.append(PropStep(j, "upper", up[j], None, True))
        if lo[j] is not None and up[j] is not None and lo[j] > up[j]:
            return done(PropInfeasible(var=j))

    for _ in range(max_rounds):
        changed = False
        for row in rows:
            if not row.coefs:
                if row.rhs > 0:
                    return done(PropInfeasible(ref=row.ref))
                continue
            contrib = {}
            n_inf = 0
            total = Fraction(0)
            for j, g in row.coefs.items():
                b = up[j] if g > 0 else lo[j]
                if b is None:
                    contrib[j] = None
                    n_inf += 1
                else:
                    contrib[j] = g * b
                    total += contrib[j]
            if n_inf > 1:
                continue
            for k, g in row.coefs.items():
                if contrib[k] is None:
                    rest = total
                elif n_inf:
                    continue
                else:
                    rest = total - contrib[k]
                bound = (row.rhs - rest) / g
                if g > 0:
                    new = Fraction(math.ceil(bound)) if integral[k] else bound
                    if lo[k] is None or new > lo[k]:
                        lo[k] = new
                        steps.append(PropStep(k, "lower", new, row.ref, new != bound))
                        changed = True
                else:
                    new = Fraction(math.floor(bound)) if integral[k] else bound
                    if up[k] is None or new < up[k]:
                        up[k] = new
                        steps.append(PropStep(k, "upper", new, row.ref, new != bound))
                        changed = True
                if lo[k] is not None and up[k] is not None and lo[k] > up[k]:
                    return done(PropInfeasible(var=k))
        if not changed:
            break
    return done()
