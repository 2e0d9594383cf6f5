"""Emit a line-oriented derivation certificate from a solve trace.

File layout (whitespace separated tokens, one record per line)::

    VER 1.0
    VAR n           followed by n variable names
    INT k           followed by one line of k variable indices
    OBJ min         followed by a sparse vector "nnz idx val ..."
    CON m           m lines "name sense rhs nnz idx val ..."
    RTP infeas | RTP range lb ub
    SOL s           s lines "name nnz idx val ..."
    DER d           d lines "name sense rhs nnz idx val ... rule args"

Rules are ``asm``, ``lin k i1 m1 ...``, ``rnd k i1 m1 ...`` and
``uns i1 a1 i2 a2``.  Line indices count CON lines first, then DER lines.
Every finite variable bound is written as its own CON line.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from ..arith import render
from ..bnb.propagation import PropStep, RowRef
from ..bnb.search import SolveResult, SolveStatus, SolveTrace
from ..cuts import CutProof
from ..lp import LPResult
from ..model import Instance, LinearConstraint, Sense

__all__ = ["CertificateError", "emit_certificate", "emit_cut_certificate"]

ZERO = Fraction(0)
_TOKEN = re.compile(r"^\S+$")


class CertificateError(ValueError):
    """The solve outcome cannot be certified (e.g. unbounded)."""


@dataclass
class _Line:
    name: str
    sense: str
    rhs: Fraction
    coefs: dict[int, Fraction]
    rule: str | None = None


def _sparse(coefs: dict[int, Fraction]) -> str:
    items = sorted((j, v) for j, v in coefs.items() if v)
    return " ".join([str(len(items))] + [f"{j} {render(v)}" for j, v in items])


def _safe(name: str, fallback: str) -> str:
    return name if name and _TOKEN.match(name) else fallback


class _Builder:
    def __init__(self, instance: Instance):
        self.instance = instance
        self.lines: list[_Line] = []
        self.n_con = 0
        self.row_lines: list[dict[str, int]] = []
        self.lower_lines: list[int | None] = []
        self.upper_lines: list[int | None] = []
        for i, con in enumerate(instance.constraints):
            base = _safe(con.name, f"c{i}")
            halves = {}
            if con.sense is Sense.EQ:
                halves["G"] = self._con(f"{base}_G", "G", con.rhs, con.coefficients)
                halves["L"] = self._con(f"{base}_L", "L", con.rhs, con.coefficients)
            else:
                half = "G" if con.sense is Sense.GE else "L"
                halves[half] = self._con(base, half, con.rhs, con.coefficients)
            self.row_lines.append(halves)
        for j, var in enumerate(instance.variables):
            lo = hi = None
            if var.lower.is_finite:
                lo = self._con(f"lb{j}", "G", var.lower.value, {j: Fraction(1)})
            if var.upper.is_finite:
                hi = self._con(f"ub{j}", "L", var.upper.value, {j: Fraction(1)})
            self.lower_lines.append(lo)
            self.upper_lines.append(hi)
        self.n_con = len(self.lines)

    def _con(self, name, sense, rhs, coefs) -> int:
        self.lines.append(_Line(name, sense, Fraction(rhs), dict(coefs)))
        return len(self.lines) - 1

    def _der(self, sense, rhs, coefs, rule) -> int:
        idx = len(self.lines)
        self.lines.append(_Line(f"d{idx - self.n_con}", sense, Fraction(rhs),
                                {j: v for j, v in coefs.items() if v}, rule))
        return idx

    def combine(self, terms):
        coefs: dict[int, Fraction] = {}
        rhs = ZERO
        for idx, mult in terms:
            line = self.lines[idx]
            rhs += mult * line.rhs
            for j, a in line.coefs.items():
                coefs[j] = coefs.get(j, ZERO) + mult * a
        return {j: v for j, v in coefs.items() if v}, rhs

    def lin(self, terms, sense="G", rounded=False, stated=None) -> tuple[int, dict, Fraction]:
        terms = [(i, Fraction(m)) for i, m in terms if m]
        coefs, rhs = self.combine(terms)
        if rounded:
            rhs = Fraction(math.ceil(rhs) if sense == "G" else math.floor(rhs))
        if stated is not None:
            coefs_s, rhs_s = stated
            assert coefs_s == coefs, "stated constraint differs from combination"
            assert (rhs >= rhs_s) if sense == "G" else (rhs <= rhs_s)
            rhs = rhs_s
        rule = "rnd" if rounded else "lin"
        args = " ".join([rule, str(len(terms))] + [f"{i} {render(m)}" for i, m in terms])
        return self._der(sense, rhs, coefs, args), coefs, rhs

    def asm(self, sense, rhs, coefs) -> int:
        return self._der(sense, rhs, coefs, "asm")

    def uns(self, sense, rhs, coefs, i1, a1, i2, a2) -> int:
        return self._der(sense, rhs, coefs, f"uns {i1} {a1} {i2} {a2}")


class _Entry:
    """A variable bound known along the current branch: either an emitted line
    or a pending combination that is only written out when first needed."""

    __slots__ = ("value", "line", "sense", "terms", "rounded")

    def __init__(self, value, line=None, sense=None, terms=None, rounded=False):
        self.value, self.line = value, line
        self.sense, self.terms, self.rounded = sense, terms, rounded


class _BoundMap:
    """Current bound entry of every variable along a branch."""

    def __init__(self, b: _Builder):
        inst = b.instance
        self.lower = [_Entry(v.lower.value, b.lower_lines[j]) if b.lower_lines[j] is not None
                      else None for j, v in enumerate(inst.variables)]
        self.upper = [_Entry(v.upper.value, b.upper_lines[j]) if b.upper_lines[j] is not None
                      else None for j, v in enumerate(inst.variables)]

    def copy(self):
        other = object.__new__(_BoundMap)
        other.lower, other.upper = list(self.lower), list(self.upper)
        return other

    def entry_for(self, j: int, positive: bool) -> _Entry:
        """Bound used to cancel a coefficient: the upper one for positive ones."""
        entry = self.upper[j] if positive else self.lower[j]
        if entry is None:
            raise CertificateError(f"variable {j} lacks the bound needed by a derivation")
        return entry


# Result of a (sub)derivation: (line index, "obj" | "contra", rhs)
_Res = tuple


class _Emitter:
    def __init__(self, instance: Instance, trace: SolveTrace | None):
        self.b = _Builder(instance)
        self.instance = instance
        self.trace = trace
        self.cut_lines: list[int] = []
        self.proof_lines: dict[int, int] = {}
        self.m = instance.m

    # -- bound entries ------------------------------------------------------
    def materialize(self, entry: _Entry) -> int:
        if entry.line is None:
            terms = [(t if isinstance(t, int) else self.materialize(t), m) for t, m in entry.terms]
            idx, _, rhs = self.b.lin(terms, entry.sense, rounded=entry.rounded)
            assert rhs == entry.value, "pending bound disagrees with its derivation"
            entry.line, entry.terms = idx, None
        return entry.line

    def expand(self, terms) -> list[tuple[int, Fraction]]:
        """Resolve entries to lines, inlining unrounded pending ones one level."""
        merged: dict[int, Fraction] = {}
        for src, mult in terms:
            if isinstance(src, _Entry) and src.line is None and not src.rounded:
                parts = [(t if isinstance(t, int) else self.materialize(t), mult * m)
                         for t, m in src.terms]
            else:
                parts = [(src if isinstance(src, int) else self.materialize(src), mult)]
            for line, m in parts:
                merged[line] = merged.get(line, ZERO) + m
        return [(line, m) for line, m in merged.items() if m]

    def _value(self, src) -> Fraction:
        return src.value if isinstance(src, _Entry) else self.b.lines[src].rhs

    # -- row lookup ----------------------------------------------------------
    def _model_row(self, i: int, y: Fraction) -> tuple[LinearConstraint, int]:
        con = self.instance.constraints[i]
        halves = self.b.row_lines[i]
        if con.sense is Sense.GE:
            return con, halves["G"]
        if con.sense is Sense.LE:
            return con, halves["L"]
        return con, halves["G" if y > 0 else "L"]

    def _lp_row(self, k: int, y: Fraction):
        if k < self.m:
            return self._model_row(k, y)
        return self.trace.rows[k], self.cut_lines[k - self.m]

    @staticmethod
    def _clamp(con: LinearConstraint, y: Fraction) -> Fraction:
        if (con.sense is Sense.GE and y < 0) or (con.sense is Sense.LE and y > 0):
            return ZERO
        return y

    # -- leaves ----------------------------------------------------------------
    def dual_leaf(self, duals, lookup: Callable, objective: dict, bmap: _BoundMap,
                  integral: bool, expect=None) -> _Res:
        terms = []
        d = dict(objective)
        for k, y in enumerate(duals):
            if not y:
                continue
            con, line = lookup(k, y)
            y = self._clamp(con, Fraction(y))
            if not y:
                continue
            terms.append((line, y))
            for j, a in con.coefficients.items():
                d[j] = d.get(j, ZERO) - y * a
        for j in sorted(d):
            if d[j]:
                terms.append((bmap.entry_for(j, d[j] < 0), d[j]))
        terms = self.expand(terms)
        coefs, rhs = self.b.combine(terms)
        assert coefs == {j: v for j, v in objective.items() if v}
        if expect is not None:
            assert rhs == expect, f"dual combination gives {rhs}, expected {expect}"
        rounded = integral and rhs.denominator != 1
        idx, _, rhs = self.b.lin(terms, "G", rounded=rounded)
        return idx, "obj", rhs

    def farkas_leaf(self, lp: LPResult, lookup: Callable, bmap: _BoundMap) -> _Res:
        terms = []
        for k, lam in enumerate(lp.farkas or ()):
            if lam:
                terms.append((lookup(k, lam)[1], lam))
        for j, (mu_l, mu_u) in enumerate(lp.farkas_bounds or ()):
            if mu_l:
                terms.append((bmap.entry_for(j, False), mu_l))
            if mu_u:
                terms.append((bmap.entry_for(j, True), -mu_u))
        idx, coefs, rhs = self.b.lin(self.expand(terms), "G")
        assert not coefs and rhs > 0, "Farkas multipliers do not yield a contradiction"
        return idx, "contra", rhs

    # -- propagation -------------------------------------------------------------
    def _ref_row(self, ref: RowRef):
        """(G-form coefs, line, sign) of a propagation source row."""
        if ref.kind == "con":
            con = self.instance.constraints[ref.index]
            line = self.b.row_lines[ref.index][ref.half]
            sign = 1 if ref.half == "G" else -1
            return {j: sign * a for j, a in con.coefficients.items()}, line, sign
        if ref.kind == "cut":
            return dict(self.trace.cuts[ref.index].cut.coefficients), self.cut_lines[ref.index], 1
        if ref.kind == "proof":
            return (dict(self.trace.proofs[ref.index].constraint.coefficients),
                    self.proof_lines[ref.index], 1)
        raise CertificateError(f"unknown row kind {ref.kind!r}")

    def replay(self, step: PropStep, bmap: _BoundMap):
        k = step.var
        sense = "G" if step.side == "lower" else "L"
        if step.ref is None:
            old = bmap.lower[k] if sense == "G" else bmap.upper[k]
            terms = [(old, Fraction(1))]
            rounded = True
        else:
            g, line, sign = self._ref_row(step.ref)
            gk = g[k]
            terms = [(line, Fraction(sign) / gk)]
            for j in sorted(g):
                if j != k:
                    terms.append((bmap.entry_for(j, g[j] > 0), -g[j] / gk))
            rounded = step.rounded
        rhs = sum((m * self._value(t) for t, m in terms), ZERO)
        if rounded:
            rhs = Fraction(math.ceil(rhs) if sense == "G" else math.floor(rhs))
        assert rhs == step.value, "replayed propagation disagrees with the search"
        entry = _Entry(rhs, sense=sense, terms=terms, rounded=rounded)
        (bmap.lower if sense == "G" else bmap.upper)[k] = entry

    def prop_witness(self, witness, bmap: _BoundMap) -> _Res:
        if witness.var is not None:
            j = witness.var
            terms = [(bmap.lower[j], Fraction(1)), (bmap.upper[j], Fraction(-1))]
        else:
            _g, line, sign = self._ref_row(witness.ref)
            terms = [(line, Fraction(sign))]
        idx, coefs, rhs = self.b.lin(self.expand(terms), "G")
        assert not coefs and rhs > 0
        return idx, "contra", rhs

    # -- combination of two branches ----------------------------------------------
    def join(self, r1: _Res, a1: int, r2: _Res, a2: int, objective: dict,
             stated: tuple | None = None) -> _Res:
        if stated is not None:
            coefs, rhs = stated
            kind = "obj"
        else:
            kinds = (r1[1], r2[1])
            if kinds == ("contra", "contra"):
                coefs, rhs, kind = {}, min(r1[2], r2[2]), "contra"
            else:
                rhs = min(r[2] for r in (r1, r2) if r[1] == "obj")
                coefs, kind = dict(objective), "obj"
        idx = self.b.uns("G", rhs, coefs, r1[0], a1, r2[0], a2)
        return idx, kind, rhs

    # -- sections ------------------------------------------------------------------
    def emit_cut(self, proof: CutProof, bmap: _BoundMap) -> int:
        cut = proof.cut
        stated = (dict(cut.coefficients), cut.rhs)
        if proof.row is not None:
            i, half, t = proof.row
            line = self.b.row_lines[i][half]
            sign = 1 if half == "G" else -1
            idx, _, _ = self.b.lin([(line, sign * t)], "G", stated=stated)
            return idx
        results = []
        for side in proof.sides:
            a = side.assumption
            sense = "L" if a.sense is Sense.LE else "G"
            asm = self.b.asm(sense, a.rhs, a.coefficients)

            def lookup(k, y, asm=asm):
                if k < self.m:
                    return self._model_row(k, y)
                return a, asm
            if side.infeasible:
                res = self.farkas_leaf(side.lp, lookup, bmap)
            else:
                res = self.dual_leaf(side.lp.duals, lookup, cut.coefficients, bmap, False,
                                     expect=side.lp.objective.value)
            results.append((res, asm))
        (r1, a1), (r2, a2) = results
        idx, _, _ = self.join(r1, a1, r2, a2, cut.coefficients, stated=stated)
        return idx

    def emit_proofs(self):
        for p, proof in enumerate(self.trace.proofs):
            terms = []
            for k, lam in enumerate(proof.multipliers):
                if lam:
                    terms.append((self._lp_row(k, lam)[1], lam))
            c = proof.constraint
            idx, _, _ = self.b.lin(terms, "G", stated=(dict(c.coefficients), c.rhs))
            self.proof_lines[p] = idx

    def emit_tree(self, bmap: _BoundMap, root_steps_done: bool) -> _Res:
        trace = self.trace
        objective = dict(trace.instance.objective)
        integral = trace.integral_objective

        def node(nid: int, bmap: _BoundMap, skip_steps=False) -> tuple[_Res, int | None]:
            rec = trace.nodes[nid]
            asm = None
            if rec.branch is not None:
                var, side, value = rec.branch
                sense = "G" if side == "lower" else "L"
                asm = self.b.asm(sense, value, {var: Fraction(1)})
                (bmap.lower if sense == "G" else bmap.upper)[var] = _Entry(value, asm)
            if not skip_steps:
                for step in rec.steps:
                    self.replay(step, bmap)
            if rec.outcome == "prop_infeasible":
                return self.prop_witness(rec.witness, bmap), asm
            if rec.outcome == "lp_infeasible":
                return self.farkas_leaf(rec.farkas, self._lp_row, bmap), asm
            if rec.outcome in ("bound", "unprocessed"):
                res = self.dual_leaf(rec.duals, self._lp_row, objective, bmap, integral)
                assert res[2] >= rec.bound.value
                return res, asm
            c1, c2 = rec.children
            r1, a1 = node(c1, bmap.copy())
            r2, a2 = node(c2, bmap.copy())
            return self.join(r1, a1, r2, a2, objective), asm

        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 4 * len(trace.nodes) + 1000))
        try:
            res, _ = node(0, bmap, skip_steps=root_steps_done)
        finally:
            sys.setrecursionlimit(limit)
        return res

    # -- text --------------------------------------------------------------------------
    def render(self, rtp: str, solutions: Sequence[tuple[str, Sequence[Fraction]]]) -> bytes:
        inst = self.instance
        out = ["VER 1.0", f"VAR {inst.n}"]
        out += [_safe(v.name, f"x{j}") for j, v in enumerate(inst.variables)]
        ints = inst.integral
        out.append(f"INT {len(ints)}")
        if ints:
            out.append(" ".join(map(str, ints)))
        out += ["OBJ min", _sparse(dict(inst.objective))]
        out.append(f"CON {self.b.n_con}")
        for line in self.b.lines[:self.b.n_con]:
            out.append(f"{line.name} {line.sense} {render(line.rhs)} {_sparse(line.coefs)}")
        out.append(f"RTP {rtp}")
        out.append(f"SOL {len(solutions)}")
        for name, point in solutions:
            out.append(f"{name} {_sparse({j: Fraction(v) for j, v in enumerate(point)})}")
        ders = self.b.lines[self.b.n_con:]
        out.append(f"DER {len(ders)}")
        for line in ders:
            out.append(f"{line.name} {line.sense} {render(line.rhs)} {_sparse(line.coefs)} {line.rule}")
        return ("\n".join(out) + "\n").encode("ascii")


def emit_certificate(result: SolveResult, instance: Instance | None = None) -> bytes:
    """Certificate for a finished (or limit-stopped) solve.

    ``instance`` supplies the objective written to the file; it defaults to the
    instance recorded in the trace.  Objective values in the file exclude the
    instance's constant offset.
    """
    trace = result.trace
    if trace is None:
        raise CertificateError(f"no certificate for status {result.status.value}")
    model = trace.instance
    if instance is not None:
        if (instance.variables != model.variables or instance.constraints != model.constraints):
            raise CertificateError("instance does not match the solve trace")
        model = instance
    em = _Emitter(model, trace)
    em.instance = model
    bmap = _BoundMap(em.b)
    if result.status is SolveStatus.INFEASIBLE:
        rtp = "infeas"
        lb_finite = True
    elif result.status in (SolveStatus.OPTIMAL, SolveStatus.LIMIT):
        lb, ub = trace.dual_value, trace.primal_value
        rtp = f"range {_ext(lb)} {_ext(ub)}"
        lb_finite = lb.is_finite
    else:
        raise CertificateError(f"no certificate for status {result.status.value}")
    if lb_finite:
        for step in trace.nodes[0].steps:
            em.replay(step, bmap)
        for proof in trace.cuts:
            em.cut_lines.append(em.emit_cut(proof, bmap))
        em.emit_proofs()
        em.emit_tree(bmap, root_steps_done=True)
    sols = [("best", trace.incumbent)] if trace.incumbent is not None else []
    return em.render(rtp, sols)


def emit_cut_certificate(instance: Instance, proofs: Sequence[CutProof]) -> bytes:
    """Certificate that only derives the given cuts (``RTP range -inf inf``)."""
    em = _Emitter(instance, None)
    bmap = _BoundMap(em.b)
    for proof in proofs:
        em.cut_lines.append(em.emit_cut(proof, bmap))
    return em.render("range -inf inf", [])


def _ext(value) -> str:
    if value.is_finite:
        return render(value.value)
    return "inf" if value.is_pos_inf else "-inf"
