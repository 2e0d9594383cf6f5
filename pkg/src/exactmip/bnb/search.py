"""Best-bound branch-and-bound driver.

The search records everything the certificate writer needs to replay its
reasoning: per-node propagation steps, the LP duals or Farkas multipliers
used to close each leaf, the certified root cuts and the learned dual proofs.
"""

from __future__ import annotations

import enum
import heapq
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..arith import NEG_INF, POS_INF, ExtRational
from ..cuts import CutCertificationError, CutProof, certify_split_cut, generate_cuts
from ..lp import LocalBounds, LPResult, LPStatus, safe_dual_bound, solve_lp
from ..model import Instance, LinearConstraint, check_feasible, objective_value
from .branching import BranchStep, Direction, PseudocostStore, select_branch_var, update_pseudocosts
from .dualproof import DualProof, derive_dual_proof
from .propagation import PropInfeasible, PropStep, RowRef, propagate_node, rows_ge_form
from .repair import repair_solution

__all__ = ["SolveStatus", "SolveParams", "SolveStats", "NodeRecord", "SolveTrace",
           "SolveResult", "solve"]


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"


@dataclass
class SolveParams:
    node_limit: int | None = None
    time_limit: float | None = None
    cuts: bool = True
    max_cuts: int | None = 20
    heuristics: bool = True
    branching: str = "aps"
    gamma: Fraction = Fraction(1, 5)
    reliability: int = 1
    max_dual_proofs: int = 50
    propagation_rounds: int = 10


@dataclass
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    cuts_applied: int = 0
    repaired_solutions: int = 0
    dual_proofs: int = 0
    time_seconds: float = 0.0


@dataclass
class NodeRecord:
    """One search node.  ``outcome`` is ``branched``, ``prop_infeasible``,
    ``lp_infeasible``, ``bound`` (closed by its own LP) or ``unprocessed``
    (closed by the parent's duals over the node's box)."""

    id: int
    parent: int | None
    branch: tuple[int, str, Fraction] | None  # (var, "lower"/"upper", value)
    depth: int = 0
    steps: list[PropStep] = field(default_factory=list)
    outcome: str = "unprocessed"
    witness: PropInfeasible | None = None
    duals: tuple[Fraction, ...] | None = None
    farkas: LPResult | None = None
    bound: ExtRational = NEG_INF
    children: list[int] = field(default_factory=list)
    lp_bound: ExtRational | None = None  # the node's own (rounded) LP bound


@dataclass
class SolveTrace:
    instance: Instance
    rows: list[LinearConstraint]  # LP rows: model rows followed by cuts
    cuts: list[CutProof]
    proofs: list[DualProof]
    nodes: dict[int, NodeRecord]
    integral_objective: bool
    primal_value: ExtRational  # c^T x of the incumbent, offset excluded
    dual_value: ExtRational
    incumbent: tuple[Fraction, ...] | None
    proof_rows: dict[int, int] = field(default_factory=dict)  # dual proof -> creating node


@dataclass
class SolveResult:
    status: SolveStatus
    incumbent: tuple[Fraction, ...] | None
    primal_bound: ExtRational  # in the source objective sense, offset included
    dual_bound: ExtRational
    stats: SolveStats
    trace: SolveTrace | None = None

    def gap_closed(self) -> bool:
        return self.primal_bound == self.dual_bound


@dataclass(order=True)
class _Open:
    bound: ExtRational
    id: int
    local: LocalBounds = field(compare=False)
    lineage: tuple[BranchStep, ...] = field(compare=False, default=())
    parent_duals: tuple[Fraction, ...] | None = field(compare=False, default=None)


def _external(instance: Instance, internal: ExtRational) -> ExtRational:
    if internal.is_finite:
        internal = ExtRational.finite(internal.value + instance.offset)
    return -internal if instance.maximize else internal


class _Search:
    def __init__(self, instance: Instance, params: SolveParams):
        self.instance = instance
        self.params = params
        self.start = time.monotonic()
        self.stats = SolveStats()
        self.rows: list[LinearConstraint] = list(instance.constraints)
        self.lp_instance = instance
        self.cuts: list[CutProof] = []
        self.proofs: list[DualProof] = []
        self.active_proofs: list[int] = []
        self.proof_rows: dict[int, int] = {}
        self.nodes: dict[int, NodeRecord] = {}
        self.integral_objective = instance.has_integral_objective()
        self.incumbent = None
        self.inc_value = POS_INF
        self.store = PseudocostStore(params.gamma, params.reliability)
        self.heap: list[_Open] = []
        self.next_id = 0
        self.limit_hit = False

    # -- helpers -----------------------------------------------------------
    def _round(self, value: ExtRational) -> ExtRational:
        if self.integral_objective and value.is_finite and value.value.denominator != 1:
            return ExtRational.finite(math.ceil(value.value))
        return value

    def _cutoff(self, bound: ExtRational) -> bool:
        return self.incumbent is not None and bound >= self.inc_value

    def _offer(self, point) -> bool:
        value = ExtRational.finite(sum((c * point[j] for j, c in self.instance.objective.items()),
                                       Fraction(0)))
        if self.incumbent is None or value < self.inc_value:
            assert check_feasible(self.instance, point)
            self.incumbent, self.inc_value = tuple(point), value
            return True
        return False

    def _prop_rows(self):
        rows = rows_ge_form(self.instance.constraints)
        rows += rows_ge_form([c.cut.constraint for c in self.cuts], "cut")
        rows += rows_ge_form([self.proofs[p].constraint for p in self.active_proofs], "proof")
        # proof refs must point into the full proof list
        out = []
        for r in rows:
            if r.ref.kind == "proof":
                r = type(r)(r.coefs, r.rhs, RowRef("proof", self.active_proofs[r.ref.index], "G"))
            out.append(r)
        return out

    def _solve_lp(self, local):
        lp = solve_lp(self.lp_instance, local)
        self.stats.lp_iterations += lp.iterations
        return lp

    def _out_of_budget(self) -> bool:
        p = self.params
        if p.node_limit is not None and self.stats.nodes >= p.node_limit:
            return True
        if p.time_limit is not None and time.monotonic() - self.start >= p.time_limit:
            return True
        return False

    def _learn(self, local: LocalBounds, lp: LPResult, node_id: int):
        if self.params.max_dual_proofs <= 0:
            return
        try:
            proof = derive_dual_proof(self.lp_instance, local, lp, name=f"proof{len(self.proofs)}")
        except ValueError:
            return
        self.proofs.append(proof)
        self.proof_rows[len(self.proofs) - 1] = node_id
        self.active_proofs.append(len(self.proofs) - 1)
        if len(self.active_proofs) > self.params.max_dual_proofs:
            self.active_proofs.pop(0)
        self.stats.dual_proofs += 1

    def _add_root_cuts(self, lp: LPResult, local: LocalBounds):
        cands = generate_cuts(self.lp_instance, lp, self.params.max_cuts)
        for cand in cands:
            try:
                proof = certify_split_cut(self.instance, cand, local)
            except CutCertificationError:
                continue
            self.stats.lp_iterations += sum(s.lp.iterations for s in proof.sides or ())
            self.cuts.append(proof)
        if self.cuts:
            self.rows = list(self.instance.constraints) + [c.cut.constraint for c in self.cuts]
            self.lp_instance = self.instance.with_constraints(self.rows).with_objective(
                self.instance.objective, self.instance.offset)
            self.stats.cuts_applied = len(self.cuts)
            return True
        return False

    # -- node processing -----------------------------------------------------
    def _process(self, node: _Open, rec: NodeRecord, root: bool = False):
        self.stats.nodes += 1
        prop = propagate_node(self.instance, node.local, self._prop_rows(),
                              self.params.propagation_rounds)
        rec.steps = prop.steps
        if prop.infeasible is not None:
            rec.outcome, rec.witness, rec.bound = "prop_infeasible", prop.infeasible, POS_INF
            return
        local = prop.local
        lp = self._solve_lp(local)
        if lp.status is LPStatus.UNBOUNDED:
            raise _Unbounded()
        if root and lp.optimal and self.params.cuts and not self._integral(lp.primal):
            if self._add_root_cuts(lp, local):
                lp = self._solve_lp(local)
                if lp.status is LPStatus.UNBOUNDED:
                    raise _Unbounded()
        if lp.status is LPStatus.INFEASIBLE:
            rec.outcome, rec.farkas, rec.bound = "lp_infeasible", lp, POS_INF
            self._learn(local, lp, rec.id)
            return
        value = lp.objective
        if node.lineage:
            update_pseudocosts(self.store, node.lineage, value.value)
        bound = self._round(value)
        rec.lp_bound = bound
        if self._integral(lp.primal):
            self._offer(lp.primal)
            rec.outcome, rec.duals, rec.bound = "bound", lp.duals, bound
            return
        if self.params.heuristics:
            fixed = repair_solution(self.instance, lp.primal, local)
            if fixed is not None and self._offer(fixed):
                self.stats.repaired_solutions += 1
        if self._cutoff(bound):
            rec.outcome, rec.duals, rec.bound = "bound", lp.duals, bound
            return
        var = select_branch_var(self.instance, lp, self.store, self.params.branching)
        v = lp.primal[var]
        f = v - math.floor(v)
        down = Fraction(math.floor(v))
        rec.outcome = "branched"
        for side, val, direction, frac in (("upper", down, Direction.DOWN, f),
                                           ("lower", down + 1, Direction.UP, 1 - f)):
            cid = self.next_id
            self.next_id += 1
            step = BranchStep(var, direction, frac, value.value)
            child = _Open(bound, cid, local.tighten(var, side, val),
                          (node.lineage[-1:] + (step,)), lp.duals)
            self.nodes[cid] = NodeRecord(cid, rec.id, (var, side, val), rec.depth + 1,
                                         bound=bound)
            rec.children.append(cid)
            heapq.heappush(self.heap, child)

    def _integral(self, point) -> bool:
        return all(Fraction(point[j]).denominator == 1 for j in self.instance.integral)

    def _close_unprocessed(self, node: _Open):
        rec = self.nodes[node.id]
        rec.outcome, rec.duals = "unprocessed", node.parent_duals
        bound = self._round(safe_dual_bound(self.lp_instance, node.local, node.parent_duals))
        assert bound >= node.bound, "safe bound weaker than the parent's LP bound"
        rec.bound = bound

    def run(self) -> SolveResult:
        root = _Open(NEG_INF, 0, LocalBounds.from_instance(self.instance))
        self.next_id = 1
        self.nodes[0] = NodeRecord(0, None, None)
        self._process(root, self.nodes[0], root=True)
        while self.heap:
            if self._out_of_budget():
                self.limit_hit = True
                break
            node = heapq.heappop(self.heap)
            if self._cutoff(node.bound):
                self._close_unprocessed(node)
                continue
            self._process(node, self.nodes[node.id])
        for node in self.heap:
            self._close_unprocessed(node)
        self.heap = []
        return self._finish()

    def _subtree_bound(self, nid: int) -> ExtRational:
        # children always carry larger ids than their parent, so a reverse
        # sweep settles every subtree before its root (no recursion depth issue)
        for k in sorted((k for k in self.nodes if k >= nid), reverse=True):
            rec = self.nodes[k]
            if rec.outcome == "branched":
                rec.bound = min(self.nodes[c].bound for c in rec.children)
        return self.nodes[nid].bound

    def _finish(self) -> SolveResult:
        dual = self._subtree_bound(0)
        if self.incumbent is not None:
            dual = min(dual, self.inc_value)
            status = SolveStatus.LIMIT if self.limit_hit else SolveStatus.OPTIMAL
            if status is SolveStatus.OPTIMAL:
                assert dual == self.inc_value, "closed search but bounds disagree"
        else:
            status = SolveStatus.LIMIT if self.limit_hit else SolveStatus.INFEASIBLE
            if status is SolveStatus.INFEASIBLE:
                assert dual.is_pos_inf
        self.stats.time_seconds = time.monotonic() - self.start
        trace = SolveTrace(self.instance, self.rows, self.cuts, self.proofs, self.nodes,
                           self.integral_objective, self.inc_value, dual, self.incumbent,
                           self.proof_rows)
        return SolveResult(status, self.incumbent, _external(self.instance, self.inc_value),
                           _external(self.instance, dual), self.stats, trace)


class _Unbounded(Exception):
    pass


def solve(instance: Instance, params: SolveParams | None = None, **overrides) -> SolveResult:
    """Solve ``instance`` exactly.

    When the root LP is unbounded the objective is dropped and the search
    decides feasibility; a feasible instance is then reported unbounded.
    """
    params = params or SolveParams()
    for key, value in overrides.items():
        if not hasattr(params, key):
            raise TypeError(f"unknown solver parameter {key!r}")
        setattr(params, key, value)
    search = _Search(instance, params)
    try:
        return search.run()
    except _Unbounded:
        pass
    feas = solve(instance.with_objective({}), params)
    feas.stats.time_seconds = time.monotonic() - search.start
    if feas.status is SolveStatus.OPTIMAL:
        low = POS_INF if instance.maximize else NEG_INF
        return SolveResult(SolveStatus.UNBOUNDED, feas.incumbent, low, low, feas.stats, None)
    if feas.status is SolveStatus.INFEASIBLE:
        return SolveResult(SolveStatus.INFEASIBLE, None, _external(instance, POS_INF),
                           _external(instance, POS_INF), feas.stats, feas.trace)
    return SolveResult(SolveStatus.LIMIT, None, _external(instance, POS_INF),
                       _external(instance, NEG_INF), feas.stats, None)
