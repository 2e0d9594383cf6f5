"""Gomory mixed-integer cuts and their split-disjunction certificates.

A GMI cut is read off an optimal tableau row ``x_b + sum a_j s_j = beta`` with
fractional ``beta``.  It is valid because it holds on both sides of the split
``D <= floor(beta)`` or ``D >= floor(beta) + 1`` where
``D = x_b + sum k_j s_j`` only involves integral columns with integer
multipliers ``k_j``.  :func:`certify_split_cut` re-proves this with two exact
side LPs so the cut can be written into a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import lcm, gcd
from typing import Sequence

from .lp import LocalBounds, LPResult, LPStatus, solve_lp, tableau_row
from .model import Instance, LinearConstraint, Sense

__all__ = [
    "CutCandidate",
    "SplitSide",
    "CutProof",
    "CutCertificationError",
    "gmi_sources",
    "generate_gmi",
    "rounding_cuts",
    "lattice_cuts",
    "generate_cuts",
    "certify_split_cut",
]


class CutCertificationError(ValueError):
    """A candidate cut could not be justified by its split disjunction."""


@dataclass(frozen=True)
class CutCandidate:
    """A cut ``constraint`` (always ``>=``) with the split it was derived from:
    ``split . x <= split_rhs`` or ``split . x >= split_rhs + 1``.  ``basic`` is
    the tableau row's basic column, or -1 for a rounded model row."""

    constraint: LinearConstraint
    basic: int
    split: dict[int, Fraction]
    split_rhs: Fraction

    @property
    def coefficients(self):
        return self.constraint.coefficients

    @property
    def rhs(self):
        return self.constraint.rhs

    @property
    def split_var(self) -> int | None:
        """The disjunction variable when the split is a plain variable split."""
        if len(self.split) == 1:
            (j, a), = self.split.items()
            if a == 1:
                return j
        return None

    @property
    def split_value(self) -> Fraction:
        return self.split_rhs

    def is_violated_by(self, point: Sequence[Fraction]) -> bool:
        return self.constraint.activity(point) < self.constraint.rhs


@dataclass
class SplitSide:
    """One side of the disjunction and the side LP minimising the cut's
    left-hand side with the side's row appended to the model rows."""

    assumption: LinearConstraint
    lp: LPResult

    @property
    def infeasible(self) -> bool:
        return self.lp.status is LPStatus.INFEASIBLE


@dataclass
class CutProof:
    cut: CutCandidate
    sides: tuple[SplitSide, SplitSide] | None = None
    row: tuple[int, str, Fraction] | None = None  # (constraint, half, scale)

    @property
    def branch_duals(self):
        if self.sides is None:
            return None
        return tuple(s.lp.duals if s.lp.duals is not None else s.lp.farkas for s in self.sides)


def _normalise(coefs: dict[int, Fraction], rhs: Fraction):
    values = [v for v in coefs.values() if v] + ([rhs] if rhs else [])
    if not values:
        return coefs, rhs
    den = 1
    for v in values:
        den = lcm(den, v.denominator)
    num = 0
    for v in coefs.values():
        num = gcd(num, (v * den).numerator)
    scale = Fraction(den, num or 1)
    return {j: v * scale for j, v in coefs.items() if v}, rhs * scale


def _slack_expression(instance: Instance, state, col: int, status: str):
    """``s_col`` as ``coefs . x + const``."""
    lo, up = state.lo[col], state.up[col]
    if col < instance.n:
        base = {col: Fraction(1)}
    else:
        base = dict(instance.constraints[col - instance.n].coefficients)
    if status == "L":
        return base, -lo
    return {j: -a for j, a in base.items()}, up


def gmi_sources(instance: Instance, lp: LPResult) -> list[int]:
    """Basic integral variables with a fractional LP value, by index."""
    if not lp.optimal:
        return []
    basic = set(lp.basis)
    return [j for j in instance.integral
            if j in basic and Fraction(lp.primal[j]).denominator != 1]


def generate_gmi(instance: Instance, lp: LPResult, basic_var: int) -> CutCandidate | None:
    """GMI cut from the tableau row of ``basic_var``; None if the row contains a
    free nonbasic column (no valid cut of this form)."""
    if basic_var >= instance.n or not instance.variables[basic_var].integral:
        raise ValueError("GMI source must be an integral structural variable")
    beta = Fraction(lp.primal[basic_var]) if lp.primal else None
    if beta is None or beta.denominator == 1:
        raise ValueError("GMI source variable is not fractional")
    row = tableau_row(lp, instance, basic_var)
    if "F" in row.status.values():
        return None
    state = lp._state
    f0 = beta - math.floor(beta)
    cut: dict[int, Fraction] = {}
    cut_rhs = Fraction(1)
    split: dict[int, Fraction] = {basic_var: Fraction(1)}
    split_rhs = Fraction(math.floor(beta))
    for col in sorted(row.coefs):
        a = row.coefs[col]
        status = row.status[col]
        coefs, const = _slack_expression(instance, state, col, status)
        bound = state.lo[col] if status == "L" else state.up[col]
        integral_col = (col < instance.n and instance.variables[col].integral
                        and bound.denominator == 1)
        if integral_col:
            fj = a - math.floor(a)
            if fj <= f0:
                pi, k = fj / f0, math.floor(a)
            else:
                pi, k = (1 - fj) / (1 - f0), math.ceil(a)
            if k:
                for j, v in coefs.items():
                    split[j] = split.get(j, Fraction(0)) + k * v
                split_rhs -= k * const
        else:
            pi = a / f0 if a >= 0 else -a / (1 - f0)
        if pi:
            for j, v in coefs.items():
                cut[j] = cut.get(j, Fraction(0)) + pi * v
            cut_rhs -= pi * const
    cut = {j: v for j, v in cut.items() if v}
    split = {j: v for j, v in split.items() if v}
    cut, cut_rhs = _normalise(cut, cut_rhs)
    con = LinearConstraint(f"gmi_{instance.variables[basic_var].name}", cut, Sense.GE, cut_rhs)
    return CutCandidate(con, basic_var, split, split_rhs)


def _integer_scale(coefs: dict[int, Fraction]) -> Fraction:
    den = 1
    for v in coefs.values():
        den = lcm(den, v.denominator)
    num = 0
    for v in coefs.values():
        num = gcd(num, (v * den).numerator)
    return Fraction(den, num)


def rounding_cuts(instance: Instance, point: Sequence[Fraction]) -> list[CutCandidate]:
    """Rows over integral columns only, scaled to coprime integer coefficients
    ``g``, with a fractional right-hand side ``h`` give ``g x >= ceil(h)``.
    Only the ones violated by ``point`` are returned."""
    out = []
    for i, con in enumerate(instance.constraints):
        if not con.coefficients or any(not instance.variables[j].integral for j in con.coefficients):
            continue
        scale = _integer_scale(con.coefficients)
        halves = []
        if con.sense in (Sense.GE, Sense.EQ):
            halves.append(("G", scale))
        if con.sense in (Sense.LE, Sense.EQ):
            halves.append(("L", -scale))
        for half, t in halves:
            rhs = con.rhs * t
            if rhs.denominator == 1:
                continue
            g = {j: a * t for j, a in con.coefficients.items()}
            up = Fraction(math.ceil(rhs))
            cut = LinearConstraint(f"round_{con.name}_{half}", g, Sense.GE, up)
            cand = CutCandidate(cut, -1, g, up - 1)
            if cand.is_violated_by(point):
                out.append(cand)
    return out


def _independent_rows(rows):
    """Indices of a maximal linearly independent subset (rational elimination)."""
    basis: list[tuple[int, dict[int, Fraction]]] = []
    keep = []
    for i, (coefs, _rhs) in enumerate(rows):
        vec = dict(coefs)
        for piv, brow in basis:
            f = vec.get(piv)
            if f:
                for j, a in brow.items():
                    vec[j] = vec.get(j, Fraction(0)) - f * a
                vec = {j: a for j, a in vec.items() if a}
        if vec:
            piv = min(vec)
            basis.append((piv, {j: a / vec[piv] for j, a in vec.items()}))
            keep.append(i)
    return keep


def _column_echelon(mat: list[list[int]]) -> list[list[int]]:
    """Unimodular column operations turning a full-row-rank integer matrix
    into ``[T 0]`` with ``T`` lower triangular; returns ``T``."""
    m, n = len(mat), len(mat[0])
    cols = [[mat[i][j] for i in range(m)] for j in range(n)]
    for k in range(m):
        while True:
            nz = [j for j in range(k, n) if cols[j][k]]
            p = min(nz, key=lambda j: abs(cols[j][k]))
            cols[k], cols[p] = cols[p], cols[k]
            done = True
            for j in range(k + 1, n):
                if cols[j][k]:
                    q = cols[j][k] // cols[k][k]
                    cols[j] = [a - q * b for a, b in zip(cols[j], cols[k])]
                    done = done and not cols[j][k]
            if done:
                break
    return [[cols[j][i] for j in range(m)] for i in range(m)]


def _integer_equalities(instance: Instance, lower, upper):
    """Equalities over integral columns implied by the model's equality rows:
    fixed columns move to the right-hand side and the remaining continuous
    columns are eliminated by rational pivoting."""
    rows = []
    for c in instance.constraints:
        if c.sense is not Sense.EQ:
            continue
        coefs, rhs = {}, c.rhs
        for j, a in c.coefficients.items():
            if lower[j] is not None and lower[j] == upper[j]:
                rhs -= a * lower[j]
            else:
                coefs[j] = a
        if coefs:
            rows.append((coefs, rhs))
    cont = sorted({j for coefs, _ in rows for j in coefs if not instance.variables[j].integral})
    for j in cont:
        piv = next((r for r in rows if j in r[0]), None)
        if piv is None:
            continue
        rows.remove(piv)
        pc, pr = piv
        reduced = []
        for coefs, rhs in rows:
            f = coefs.get(j)
            if f:
                t = f / pc[j]
                coefs = dict(coefs)
                for k, a in pc.items():
                    coefs[k] = coefs.get(k, Fraction(0)) - t * a
                coefs = {k: a for k, a in coefs.items() if a}
                rhs -= t * pr
            if coefs:
                reduced.append((coefs, rhs))
        rows = reduced
    return rows


def lattice_cuts(instance: Instance, point: Sequence[Fraction], lower=None,
                 upper=None) -> list[CutCandidate]:
    """Equality rows may have no integer solution even though they are
    consistent.  Then some combination of them has integer coefficients ``g``
    on integral columns only and a fractional right-hand side ``h``; the two
    rounded halves ``g x >= ceil(h)`` and ``-g x >= -floor(h)`` contradict each
    other.  ``lower``/``upper`` are the (local) bounds used to spot fixed columns."""
    if lower is None:
        lower = [v.lower.value if v.lower.is_finite else None for v in instance.variables]
        upper = [v.upper.value if v.upper.is_finite else None for v in instance.variables]
    eqs = _integer_equalities(instance, lower, upper)
    if not eqs:
        return []
    eqs = [eqs[i] for i in _independent_rows(eqs)]
    cols = sorted({j for coefs, _ in eqs for j in coefs})
    scales, mat, rhs = [], [], []
    for coefs, b in eqs:
        s = _integer_scale(coefs)
        scales.append(s)
        mat.append([int(coefs.get(j, 0) * s) for j in cols])
        rhs.append(b * s)
    tri = _column_echelon(mat)
    m = len(eqs)
    z = []
    for k in range(m):
        z.append((rhs[k] - sum((tri[k][j] * z[j] for j in range(k)), Fraction(0))) / tri[k][k])
    bad = [k for k in range(m) if z[k].denominator != 1]
    if not bad:
        return []
    k = bad[0]
    # u solves T^T u = e_k, so u^T A is integral while u^T b = z_k is not
    u = [Fraction(0)] * m
    for i in reversed(range(m)):
        acc = Fraction(int(i == k)) - sum((tri[r][i] * u[r] for r in range(i + 1, m)), Fraction(0))
        u[i] = acc / tri[i][i]
    g: dict[int, Fraction] = {}
    h = Fraction(0)
    for ui, s, (coefs, b) in zip(u, scales, eqs):
        for j, a in coefs.items():
            g[j] = g.get(j, Fraction(0)) + ui * s * a
        h += ui * s * b
    g = {j: a for j, a in g.items() if a}
    if not g:
        return []
    t = _integer_scale(g)
    g, h = {j: a * t for j, a in g.items()}, h * t
    out = []
    for name, coefs, bound in (("lattice_G", g, h), ("lattice_L", {j: -a for j, a in g.items()}, -h)):
        up = Fraction(math.ceil(bound))
        cand = CutCandidate(LinearConstraint(name, coefs, Sense.GE, up), -1, coefs, up - 1)
        if cand.is_violated_by(point):
            out.append(cand)
    return out


def generate_cuts(instance: Instance, lp: LPResult, max_cuts: int | None = None) -> list[CutCandidate]:
    """Violated row-rounding and lattice cuts first, then GMI cuts from the tableau."""
    cuts = rounding_cuts(instance, lp.primal)
    seen = {(tuple(sorted(c.coefficients.items())), c.rhs) for c in cuts}
    lower = lp.lower or None
    upper = lp.upper or None
    for cand in lattice_cuts(instance, lp.primal, lower, upper):
        if (tuple(sorted(cand.coefficients.items())), cand.rhs) not in seen:
            cuts.append(cand)
    if max_cuts is not None:
        cuts = cuts[:max_cuts]
        if len(cuts) >= max_cuts:
            return cuts
    for j in gmi_sources(instance, lp):
        cand = generate_gmi(instance, lp, j)
        if cand is not None and cand.is_violated_by(lp.primal):
            cuts.append(cand)
            if max_cuts is not None and len(cuts) >= max_cuts:
                break
    return cuts


def _implying_row(instance: Instance, cut: CutCandidate):
    target = cut.coefficients
    if not target:
        return None
    for i, con in enumerate(instance.constraints):
        halves = []
        if con.sense in (Sense.GE, Sense.EQ):
            halves.append(("G", con.coefficients, con.rhs))
        if con.sense in (Sense.LE, Sense.EQ):
            halves.append(("L", {j: -a for j, a in con.coefficients.items()}, -con.rhs))
        for half, g, h in halves:
            if g.keys() != target.keys():
                continue
            j0 = next(iter(target))
            t = target[j0] / g[j0]
            if t > 0 and all(target[j] == t * g[j] for j in g) and t * h >= cut.rhs:
                return (i, half, t)
    return None


def certify_split_cut(instance: Instance, cut: CutCandidate,
                      local: LocalBounds | None = None) -> CutProof:
    """Prove ``cut`` valid for ``instance`` (over ``local`` bounds).

    A cut that is a positive multiple of a model row needs no disjunction.
    Otherwise both sides of the split are solved as LPs minimising the cut's
    left-hand side; each must be infeasible or reach the cut's rhs.
    """
    row = _implying_row(instance, cut)
    if row is not None:
        return CutProof(cut, row=row)
    for j, a in cut.split.items():
        if a.denominator != 1 or not instance.variables[j].integral:
            raise CutCertificationError("split must have integer coefficients on integral variables")
    if cut.split_rhs.denominator != 1:
        raise CutCertificationError("split right-hand side must be integral")
    sides = []
    for sense, rhs, tag in ((Sense.LE, cut.split_rhs, "down"), (Sense.GE, cut.split_rhs + 1, "up")):
        assumption = LinearConstraint(f"{cut.constraint.name}_{tag}", cut.split, sense, rhs)
        side = instance.with_constraints(list(instance.constraints) + [assumption])
        side = side.with_objective(cut.coefficients)
        res = solve_lp(side, local)
        if res.status is LPStatus.UNBOUNDED or (res.optimal and res.objective.value < cut.rhs):
            raise CutCertificationError(
                f"cut {cut.constraint.name} is not implied on the {tag} side of its split")
        sides.append(SplitSide(assumption, res))
    return CutProof(cut, sides=tuple(sides))
