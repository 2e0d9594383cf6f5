"""MILP data model: ``min c^T x  s.t.  A x (>=,<=,=) b,  l <= x <= u,  x_I integer``."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .arith import NEG_INF, POS_INF, ExtRational, as_rational, ext

__all__ = [
    "Sense",
    "Variable",
    "LinearConstraint",
    "Instance",
    "ModelError",
    "FeasibilityReport",
    "build_instance",
    "check_feasible",
    "objective_value",
    "activity",
]


class ModelError(ValueError):
    pass


class Sense(str, enum.Enum):
    GE = ">="
    LE = "<="
    EQ = "="

    @classmethod
    def parse(cls, text: str) -> "Sense":
        aliases = {">=": cls.GE, "=>": cls.GE, ">": cls.GE, "G": cls.GE,
                   "<=": cls.LE, "=<": cls.LE, "<": cls.LE, "L": cls.LE,
                   "=": cls.EQ, "==": cls.EQ, "E": cls.EQ}
        try:
            return aliases[text]
        except KeyError:
            raise ModelError(f"unknown constraint sense {text!r}") from None


@dataclass(frozen=True)
class Variable:
    name: str
    lower: ExtRational = ExtRational.finite(0)
    upper: ExtRational = POS_INF
    integral: bool = False

    def __post_init__(self):
        if not self.name:
            raise ModelError("variable name must be nonempty")
        lo, up = ext(self.lower), ext(self.upper)
        if lo.is_pos_inf:
            raise ModelError(f"variable {self.name}: lower bound +inf")
        if up.is_neg_inf:
            raise ModelError(f"variable {self.name}: upper bound -inf")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)


def _sparse(coefs: Mapping[int, object], n: int, what: str) -> dict[int, Fraction]:
    out = {}
    for idx, val in sorted(coefs.items()):
        if isinstance(val, ExtRational) and not val.is_finite:
            raise ModelError(f"{what}: infinite coefficient")
        if isinstance(val, float) and math.isinf(val):
            raise ModelError(f"{what}: infinite coefficient")
        if not isinstance(idx, int) or not 0 <= idx < n:
            raise ModelError(f"{what}: variable index {idx} out of range (n={n})")
        v = as_rational(val)
        if v != 0:
            out[idx] = v
    return out


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    coefficients: Mapping[int, Fraction]
    sense: Sense
    rhs: Fraction

    def __post_init__(self):
        object.__setattr__(self, "sense", Sense.parse(self.sense.value if isinstance(self.sense, Sense) else self.sense))
        object.__setattr__(self, "rhs", as_rational(self.rhs))
        coefs = {int(k): as_rational(v) for k, v in self.coefficients.items()}
        object.__setattr__(self, "coefficients", {k: v for k, v in sorted(coefs.items()) if v != 0})

    def activity(self, point: Sequence[Fraction]) -> Fraction:
        return sum((a * point[j] for j, a in self.coefficients.items()), Fraction(0))

    def satisfied_by(self, act: Fraction) -> bool:
        if self.sense is Sense.GE:
            return act >= self.rhs
        if self.sense is Sense.LE:
            return act <= self.rhs
        return act == self.rhs


@dataclass(frozen=True)
class Instance:
    """A minimisation MILP.

    ``maximize`` records the sense of the source model: the stored objective is
    already negated, and :meth:`external` maps internal values back.
    ``offset`` is the constant term of the internal objective.
    """

    variables: tuple[Variable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: Mapping[int, Fraction]
    offset: Fraction = Fraction(0)
    maximize: bool = False
    name: str = "problem"

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def integral(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.integral]

    def external(self, value):
        """Map an internal (minimisation) objective value to the source sense."""
        return -value if self.maximize else value

    def var_index(self, name: str) -> int:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return j
        raise KeyError(name)

    def with_constraints(self, constraints: Iterable[LinearConstraint]) -> "Instance":
        return build_instance(self.variables, list(constraints), self.objective,
                              offset=self.offset, maximize=self.maximize, name=self.name)

    def with_variables(self, variables: Iterable[Variable]) -> "Instance":
        return build_instance(list(variables), self.constraints, self.objective,
                              offset=self.offset, maximize=self.maximize, name=self.name)

    def with_objective(self, objective: Mapping[int, object], offset=0) -> "Instance":
        return build_instance(self.variables, self.constraints, objective,
                              offset=offset, maximize=False, name=self.name)

    def has_integral_objective(self) -> bool:
        """True if ``c^T x`` is integer at every integer-feasible point."""
        return all(self.variables[j].integral and c.denominator == 1
                   for j, c in self.objective.items())


def build_instance(variables: Sequence[Variable], constraints: Sequence[LinearConstraint],
                   objective: Mapping[int, object], *, offset=0, maximize: bool = False,
                   name: str = "problem") -> Instance:
    """Validate and normalise an instance (zero coefficients are dropped)."""
    variables = tuple(variables)
    seen = set()
    for v in variables:
        if v.name in seen:
            raise ModelError(f"duplicate variable name {v.name!r}")
        seen.add(v.name)
    n = len(variables)
    cons = []
    for i, c in enumerate(constraints):
        coefs = _sparse(c.coefficients, n, f"constraint {c.name or i}")
        cons.append(LinearConstraint(c.name, coefs, c.sense, c.rhs))
    obj = _sparse(objective, n, "objective")
    return Instance(variables, tuple(cons), obj, as_rational(offset), maximize, name)


@dataclass
class FeasibilityReport:
    bound_violations: list[tuple[int, str, Fraction, ExtRational]] = field(default_factory=list)
    constraint_violations: list[tuple[int, Fraction, Sense, Fraction]] = field(default_factory=list)
    fractional: list[int] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not (self.bound_violations or self.constraint_violations or self.fractional)

    def __bool__(self):
        return self.feasible


def _check_length(instance: Instance, point: Sequence) -> list[Fraction]:
    if len(point) != instance.n:
        raise ModelError(f"point has {len(point)} entries, instance has {instance.n} variables")
    return [as_rational(v) for v in point]


def check_feasible(instance: Instance, point: Sequence) -> FeasibilityReport:
    """Exact feasibility check with zero tolerance."""
    x = _check_length(instance, point)
    report = FeasibilityReport()
    for j, var in enumerate(instance.variables):
        if var.lower > x[j]:
            report.bound_violations.append((j, "lower", x[j], var.lower))
        if var.upper < x[j]:
            report.bound_violations.append((j, "upper", x[j], var.upper))
        if var.integral and x[j].denominator != 1:
            report.fractional.append(j)
    for i, con in enumerate(instance.constraints):
        act = con.activity(x)
        if not con.satisfied_by(act):
            report.constraint_violations.append((i, act, con.sense, con.rhs))
    return report


def objective_value(instance: Instance, point: Sequence) -> Fraction:
    """Internal objective ``c^T x + offset`` (minimisation sense)."""
    x = _check_length(instance, point)
    return instance.offset + sum((c * x[j] for j, c in instance.objective.items()), Fraction(0))


def activity(coefs: Mapping[int, Fraction], point: Sequence[Fraction]) -> Fraction:
    return sum((a * point[j] for j, a in coefs.items()), Fraction(0))
