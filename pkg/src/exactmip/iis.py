"""Irreducible infeasible subsystems over rows and variable bounds.

Elements are ordered deterministically: constraints in file order, then the
finite variable bounds by variable index with the lower bound first.  Every
infeasibility judgement comes from an exact branch-and-bound run with a node
limit; a run that hits the limit answers "unknown" and is never trusted to
drop an element.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .arith import NEG_INF, POS_INF
from .bnb.search import SolveParams, SolveStatus, solve
from .model import Instance, Variable, build_instance

__all__ = ["Element", "Verdict", "IISResult", "IISError", "FeasibleInstanceError",
           "iis_elements", "subsystem", "feasibility_oracle", "deletion_filter",
           "additive_method"]

DEFAULT_NODE_LIMIT = 2000


class IISError(RuntimeError):
    pass


class FeasibleInstanceError(IISError):
    def __init__(self):
        super().__init__("instance is feasible")


class Verdict(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass(frozen=True, order=True)
class Element:
    """``kind`` 0 is constraint ``index``; kind 1/2 the lower/upper bound of
    variable ``index`` (so sorting reproduces the element order)."""

    kind: int
    index: int

    @property
    def is_bound(self) -> bool:
        return self.kind != 0

    @property
    def side(self) -> str | None:
        return {1: "lower", 2: "upper"}.get(self.kind)

    def describe(self, instance: Instance) -> str:
        if self.kind == 0:
            return instance.constraints[self.index].name or f"row{self.index}"
        v = instance.variables[self.index]
        return f"{v.name}.{'lb' if self.kind == 1 else 'ub'}"


@dataclass
class IISResult:
    elements: list[Element]
    irreducible: bool
    method: str
    oracle_calls: int
    include_bounds: bool = True
    scans: int = 0

    @property
    def constraint_indices(self) -> frozenset:
        return frozenset(e.index for e in self.elements if e.kind == 0)

    @property
    def bound_indices(self) -> frozenset:
        return frozenset((e.index, e.side) for e in self.elements if e.is_bound)

    def subsystem(self, instance: Instance, keep_objective: bool = True) -> Instance:
        return subsystem(instance, self.elements, self.include_bounds, keep_objective)

    def summary(self) -> dict:
        return {"method": self.method, "irreducible": self.irreducible,
                "constraints": sorted(self.constraint_indices),
                "bounds": [[j, s] for j, s in sorted(self.bound_indices)],
                "oracle_calls": self.oracle_calls}


def iis_elements(instance: Instance, include_bounds: bool = True) -> list[Element]:
    out = [Element(0, i) for i in range(instance.m)]
    if include_bounds:
        for j, v in enumerate(instance.variables):
            if v.lower.is_finite:
                out.append(Element(1, j))
            if v.upper.is_finite:
                out.append(Element(2, j))
    return out


def subsystem(instance: Instance, elements: Iterable[Element], include_bounds: bool = True,
              keep_objective: bool = False) -> Instance:
    """The instance restricted to ``elements``; bounds that are not elements are
    dropped unless bounds are excluded from the search (then all are kept)."""
    chosen = set(elements)
    cons = [c for i, c in enumerate(instance.constraints) if Element(0, i) in chosen]
    variables = []
    for j, v in enumerate(instance.variables):
        if include_bounds:
            lower = v.lower if Element(1, j) in chosen else NEG_INF
            upper = v.upper if Element(2, j) in chosen else POS_INF
            v = Variable(v.name, lower, upper, v.integral)
        variables.append(v)
    objective = instance.objective if keep_objective else {}
    return build_instance(variables, cons, objective,
                          offset=instance.offset if keep_objective else 0,
                          maximize=instance.maximize if keep_objective else False,
                          name=instance.name)


def feasibility_oracle(instance: Instance, node_limit: int = DEFAULT_NODE_LIMIT,
                       time_limit: float | None = None) -> Verdict:
    res = solve(instance.with_objective({}),
                SolveParams(node_limit=node_limit, time_limit=time_limit))
    if res.status is SolveStatus.INFEASIBLE:
        return Verdict.INFEASIBLE
    if res.incumbent is not None:
        return Verdict.FEASIBLE
    return Verdict.UNKNOWN


@dataclass
class _Oracle:
    instance: Instance
    include_bounds: bool
    node_limit: int
    time_limit: float | None
    calls: int = 0
    unknown: bool = False

    def __call__(self, elements: Sequence[Element]) -> Verdict:
        self.calls += 1
        verdict = feasibility_oracle(subsystem(self.instance, elements, self.include_bounds),
                                     self.node_limit, self.time_limit)
        if verdict is Verdict.UNKNOWN:
            self.unknown = True
        return verdict


def _deletion_pass(oracle: _Oracle, elements: list[Element]) -> list[Element]:
    current = list(elements)
    for e in list(elements):
        trial = [x for x in current if x != e]
        if oracle(trial) is Verdict.INFEASIBLE:
            current = trial
    return current


def deletion_filter(instance: Instance, *, include_bounds: bool = True,
                    node_limit: int = DEFAULT_NODE_LIMIT,
                    time_limit: float | None = None) -> IISResult:
    """Drop elements one at a time while the remainder stays infeasible.

    One verification call checks the full system up front; after that each
    element costs exactly one call.  An element survives only if its removal
    was judged feasible, which (subsystems of feasible systems being
    feasible) makes the result irreducible unless some call was unknown.
    """
    oracle = _Oracle(instance, include_bounds, node_limit, time_limit)
    elements = iis_elements(instance, include_bounds)
    first = oracle(elements)
    if first is Verdict.FEASIBLE:
        raise FeasibleInstanceError()
    if first is Verdict.UNKNOWN:
        raise IISError("could not establish infeasibility of the instance")
    result = _deletion_pass(oracle, elements)
    return IISResult(result, not oracle.unknown, "deletion", oracle.calls, include_bounds, 1)


def additive_method(instance: Instance, *, include_bounds: bool = True, irreducible: bool = True,
                    node_limit: int = DEFAULT_NODE_LIMIT,
                    time_limit: float | None = None) -> IISResult:
    """Grow a core set: each scan adds elements on top of the core until the
    trial set turns infeasible, and the element that caused it joins the core.
    Stops once the core itself is infeasible; a deletion pass follows when
    ``irreducible`` is requested."""
    oracle = _Oracle(instance, include_bounds, node_limit, time_limit)
    elements = iis_elements(instance, include_bounds)
    core: list[Element] = []
    scans = 0
    while True:
        scans += 1
        trial = list(core)
        found = None
        for e in elements:
            if e in core:
                continue
            trial.append(e)
            if oracle(sorted(trial)) is Verdict.INFEASIBLE:
                found = e
                break
        if found is None:
            if scans == 1 and not oracle.unknown:
                raise FeasibleInstanceError()
            raise IISError("could not establish infeasibility of the instance")
        core = sorted(core + [found])
        if len(core) == len(trial) or oracle(core) is Verdict.INFEASIBLE:
            break
    if irreducible:
        oracle.unknown = False
        core = _deletion_pass(oracle, core)
        flag = not oracle.unknown
    else:
        flag = False
    return IISResult(core, flag, "additive", oracle.calls, include_bounds, scans)
