"""Exact bounded-variable primal simplex over the rationals.

Every row ``a_i x (sense) b_i`` is written as ``a_i x - r_i = 0`` with a row
variable ``r_i`` whose bounds encode the sense.  Column ids are therefore
``j < n`` for structural variables and ``n + i`` for the row variable of
constraint ``i``.  Phase 1 uses one artificial per violated row; Bland's
smallest-index rule is used for entering and leaving choices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .arith import NEG_INF, POS_INF, ExtRational, as_rational
from .model import Instance, Sense

__all__ = [
    "LocalBounds",
    "LPStatus",
    "LPResult",
    "TableauRow",
    "solve_lp",
    "tableau_row",
    "safe_dual_bound",
    "farkas_gap",
    "column_name",
]

ZERO = Fraction(0)


@dataclass(frozen=True)
class LocalBounds:
    lower: tuple[ExtRational, ...]
    upper: tuple[ExtRational, ...]

    @classmethod
    def from_instance(cls, instance: Instance) -> "LocalBounds":
        return cls(tuple(v.lower for v in instance.variables),
                   tuple(v.upper for v in instance.variables))

    def __len__(self):
        return len(self.lower)

    def tighten(self, var: int, side: str, value) -> "LocalBounds":
        value = value if isinstance(value, ExtRational) else ExtRational.finite(value)
        if side == "lower":
            lower = list(self.lower)
            lower[var] = value
            return LocalBounds(tuple(lower), self.upper)
        if side == "upper":
            upper = list(self.upper)
            upper[var] = value
            return LocalBounds(self.lower, tuple(upper))
        raise ValueError(f"bad side {side!r}")

    def finite(self) -> tuple[list[Fraction | None], list[Fraction | None]]:
        return ([b.value for b in self.lower], [b.value for b in self.upper])

    def is_empty(self) -> bool:
        return any(lo > up for lo, up in zip(self.lower, self.upper))


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    """Outcome of :func:`solve_lp`.

    ``objective`` is ``c^T x`` without the instance's constant offset.  Duals
    follow the usual minimisation signs (``>=`` rows nonnegative, ``<=`` rows
    nonpositive).  ``farkas`` holds row multipliers of the aggregated ``>=``
    system and ``farkas_bounds`` nonnegative multipliers of ``x_j >= l_j`` and
    ``-x_j >= -u_j``.
    """

    status: LPStatus
    objective: ExtRational
    primal: tuple[Fraction, ...] | None = None
    ray: tuple[Fraction, ...] | None = None
    duals: tuple[Fraction, ...] | None = None
    reduced_costs: tuple[Fraction, ...] | None = None
    basis: tuple[int, ...] = ()
    farkas: tuple[Fraction, ...] | None = None
    farkas_bounds: tuple[tuple[Fraction, Fraction], ...] | None = None
    iterations: int = 0
    lower: tuple[Fraction | None, ...] = ()
    upper: tuple[Fraction | None, ...] = ()
    _state: "_FinalState | None" = field(default=None, repr=False, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


@dataclass
class _FinalState:
    n: int
    m: int
    rows: dict[int, list[Fraction]]  # basic column -> tableau row over all columns
    values: list[Fraction]
    lo: list[Fraction | None]
    up: list[Fraction | None]
    basic: set[int]


def _row_bounds(sense: Sense, rhs: Fraction):
    if sense is Sense.GE:
        return rhs, None
    if sense is Sense.LE:
        return None, rhs
    return rhs, rhs


class _Simplex:
    def __init__(self, n, rows, lower, upper, max_iterations=None):
        self.n, self.m = n, len(rows)
        m = self.m
        self.ncol = n + 2 * m
        self.lo = list(lower) + [None] * (2 * m)
        self.up = list(upper) + [None] * (2 * m)
        self.val = [ZERO] * self.ncol
        self.iterations = 0
        self.max_iterations = max_iterations
        for j in range(n):
            lo, up = self.lo[j], self.up[j]
            self.val[j] = lo if lo is not None else (up if up is not None else ZERO)
        self.basis = [0] * m
        self.T = []
        for i, (coefs, sense, rhs) in enumerate(rows):
            rl, ru = _row_bounds(sense, rhs)
            r, a = n + i, n + m + i
            self.lo[r], self.up[r] = rl, ru
            act = sum((c * self.val[j] for j, c in coefs.items()), ZERO)
            row = [ZERO] * self.ncol
            if (rl is None or act >= rl) and (ru is None or act <= ru):
                # r_i basic: r_i - a_i x = 0
                for j, c in coefs.items():
                    row[j] = -c
                row[r] = Fraction(1)
                row[a] = Fraction(1)
                self.basis[i] = r
                self.val[r] = act
                self.lo[a] = self.up[a] = ZERO
            else:
                target = rl if rl is not None and act < rl else ru
                sigma = 1 if target > act else -1
                # a_i x - r_i + sigma * art = 0, scaled so art has coefficient 1
                for j, c in coefs.items():
                    row[j] = c * sigma
                row[r] = Fraction(-sigma)
                row[a] = Fraction(1)
                self.basis[i] = a
                self.val[r] = target
                self.val[a] = abs(target - act)
                self.lo[a] = ZERO
            self.T.append(row)

    def reduced_costs(self, cost):
        d = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.T[i]
                for j in range(self.ncol):
                    if row[j]:
                        d[j] -= cb * row[j]
        return d

    def run(self, cost):
        """Iterate to optimality; returns None or (entering, direction) of a ray."""
        basic = set(self.basis)
        while True:
            if self.max_iterations is not None and self.iterations >= self.max_iterations:
                raise RuntimeError("simplex iteration limit exceeded")
            d = self.reduced_costs(cost)
            enter, direction = None, 0
            for j in range(self.ncol):
                if j in basic or d[j] == 0:
                    continue
                lo, up, v = self.lo[j], self.up[j], self.val[j]
                if d[j] < 0 and (up is None or v < up):
                    enter, direction = j, 1
                    break
                if d[j] > 0 and (lo is None or v > lo):
                    enter, direction = j, -1
                    break
            if enter is None:
                return None
            best_t, best_idx, leave_row = None, None, None
            if direction > 0 and self.up[enter] is not None:
                best_t, best_idx = self.up[enter] - self.val[enter], enter
            elif direction < 0 and self.lo[enter] is not None:
                best_t, best_idx = self.val[enter] - self.lo[enter], enter
            for i, b in enumerate(self.basis):
                alpha = -self.T[i][enter] * direction
                if alpha > 0 and self.up[b] is not None:
                    t = (self.up[b] - self.val[b]) / alpha
                elif alpha < 0 and self.lo[b] is not None:
                    t = (self.lo[b] - self.val[b]) / alpha
                else:
                    continue
                if best_t is None or t < best_t or (t == best_t and b < best_idx):
                    best_t, best_idx, leave_row = t, b, i
            if best_t is None:
                return enter, direction
            self.iterations += 1
            step = best_t * direction
            if step:
                self.val[enter] += step
                for i, b in enumerate(self.basis):
                    coef = self.T[i][enter]
                    if coef:
                        self.val[b] -= coef * step
            if best_idx == enter:
                self.val[enter] = self.up[enter] if direction > 0 else self.lo[enter]
                continue
            leaving = self.basis[leave_row]
            alpha = -self.T[leave_row][enter] * direction
            self.val[leaving] = self.up[leaving] if alpha > 0 else self.lo[leaving]
            self._pivot(leave_row, enter)
            basic.discard(leaving)
            basic.add(enter)

    def _pivot(self, r, e):
        prow = self.T[r]
        piv = prow[e]
        if piv != 1:
            prow = [v / piv for v in prow]
            self.T[r] = prow
        nz = [j for j, v in enumerate(prow) if v]
        for i, row in enumerate(self.T):
            if i == r:
                continue
            f = row[e]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
        self.basis[r] = e


def _farkas_bounds(g: Sequence[Fraction], lower, upper):
    mults = []
    for j, gj in enumerate(g):
        if gj > 0:
            mults.append((ZERO, gj))
        elif gj < 0:
            mults.append((-gj, ZERO))
        else:
            mults.append((ZERO, ZERO))
    return tuple(mults)


def farkas_gap(rows, lower, upper, lam: Sequence[Fraction]) -> ExtRational:
    """``lam^T b - max_{box} (lam^T A) x`` for the aggregated ``>=`` system.

    Positive means the multipliers prove infeasibility.
    """
    n = len(lower)
    g = [ZERO] * n
    rhs = ZERO
    for (coefs, _sense, b), li in zip(rows, lam):
        if li:
            rhs += li * b
            for j, a in coefs.items():
                g[j] += li * a
    if any(lo is not None and up is not None and lo > up for lo, up in zip(lower, upper)):
        return POS_INF
    best = ZERO
    for j, gj in enumerate(g):
        if gj > 0:
            if upper[j] is None:
                return NEG_INF
            best += gj * upper[j]
        elif gj < 0:
            if lower[j] is None:
                return NEG_INF
            best += gj * lower[j]
    return ExtRational.finite(rhs - best)


def _rows_of(instance: Instance):
    return [(c.coefficients, c.sense, c.rhs) for c in instance.constraints]


def solve_lp(instance: Instance, local: LocalBounds | None = None, *,
             max_iterations: int | None = None) -> LPResult:
    """Solve the LP relaxation of ``instance`` over ``local`` bounds exactly."""
    local = local or LocalBounds.from_instance(instance)
    lower, upper = local.finite()
    rows = _rows_of(instance)
    n, m = instance.n, len(rows)
    for j in range(n):
        if lower[j] is not None and upper[j] is not None and lower[j] > upper[j]:
            fb = [(ZERO, ZERO)] * n
            fb[j] = (Fraction(1), Fraction(1))
            return LPResult(LPStatus.INFEASIBLE, POS_INF, farkas=tuple([ZERO] * m),
                            farkas_bounds=tuple(fb), lower=tuple(lower), upper=tuple(upper))

    sx = _Simplex(n, rows, lower, upper, max_iterations)
    phase1 = [ZERO] * sx.ncol
    for i in range(m):
        phase1[n + m + i] = Fraction(1)
    sx.run(phase1)
    infeas = sum(sx.val[n + m:], ZERO)
    if infeas > 0:
        d = sx.reduced_costs(phase1)
        lam = tuple(d[n:n + m])
        g = [ZERO] * n
        for (coefs, _s, _b), li in zip(rows, lam):
            for j, a in coefs.items():
                g[j] += li * a
        gap = farkas_gap(rows, lower, upper, lam)
        assert gap.is_finite and gap.value == infeas, "inconsistent Farkas multipliers"
        return LPResult(LPStatus.INFEASIBLE, POS_INF, farkas=lam,
                        farkas_bounds=_farkas_bounds(g, lower, upper),
                        iterations=sx.iterations, lower=tuple(lower), upper=tuple(upper))

    for i in range(m):
        sx.lo[n + m + i] = sx.up[n + m + i] = ZERO
    cost = [ZERO] * sx.ncol
    for j, c in instance.objective.items():
        cost[j] = c
    ray = sx.run(cost)
    primal = tuple(sx.val[:n])
    objective = sum((c * primal[j] for j, c in instance.objective.items()), ZERO)
    if ray is not None:
        enter, direction = ray
        direction_vec = [ZERO] * sx.ncol
        direction_vec[enter] = Fraction(direction)
        for i, b in enumerate(sx.basis):
            direction_vec[b] = -sx.T[i][enter] * direction
        return LPResult(LPStatus.UNBOUNDED, NEG_INF, primal=primal,
                        ray=tuple(direction_vec[:n]), basis=tuple(sx.basis),
                        iterations=sx.iterations, lower=tuple(lower), upper=tuple(upper))
    d = sx.reduced_costs(cost)
    state = _FinalState(n, m, {b: list(sx.T[i]) for i, b in enumerate(sx.basis)},
                        list(sx.val), list(sx.lo), list(sx.up), set(sx.basis))
    return LPResult(LPStatus.OPTIMAL, ExtRational.finite(objective), primal=primal,
                    duals=tuple(d[n:n + m]), reduced_costs=tuple(d[:n]),
                    basis=tuple(sx.basis), iterations=sx.iterations,
                    lower=tuple(lower), upper=tuple(upper), _state=state)


def column_name(instance: Instance, col: int) -> str:
    if col < instance.n:
        return instance.variables[col].name
    i = col - instance.n
    if i < instance.m:
        return f"row:{instance.constraints[i].name or i}"
    return f"art:{i - instance.m}"


@dataclass(frozen=True)
class TableauRow:
    """``z_basic + sum(coefs[j] * s_j) = rhs`` with ``s_j >= 0`` the distance of
    nonbasic column ``j`` from its active bound (``status[j]`` is ``"L"`` or
    ``"U"``; ``"F"`` marks a free column at zero, where ``s_j = z_j``)."""

    basic: int
    coefs: dict[int, Fraction]
    rhs: Fraction
    status: dict[int, str]


def tableau_row(result: LPResult, instance: Instance, basic_var: int) -> TableauRow:
    if result.status is not LPStatus.OPTIMAL or result._state is None:
        raise ValueError("tableau rows need an optimal LP result")
    st = result._state
    if basic_var not in st.rows:
        raise ValueError(f"column {column_name(instance, basic_var)} is not basic")
    row = st.rows[basic_var]
    coefs, status = {}, {}
    rhs = ZERO
    for j in range(st.n + st.m):
        t = row[j]
        if j in st.basic or not t:
            continue
        lo, up = st.lo[j], st.up[j]
        if lo is not None and lo == up:
            rhs -= t * lo
            continue
        v = st.values[j]
        if lo is not None and v == lo:
            coefs[j], status[j] = t, "L"
            rhs -= t * lo
        elif up is not None and v == up:
            coefs[j], status[j] = -t, "U"
            rhs -= t * up
        else:
            coefs[j], status[j] = t, "F"
    assert rhs == st.values[basic_var]
    return TableauRow(basic_var, coefs, rhs, status)


def clamp_duals(instance: Instance, duals: Sequence) -> list[Fraction]:
    out = []
    for con, y in zip(instance.constraints, duals):
        y = as_rational(y)
        if con.sense is Sense.GE and y < 0 or con.sense is Sense.LE and y > 0:
            y = ZERO
        out.append(y)
    return out


def safe_dual_bound(instance: Instance, local: LocalBounds | None,
                    candidate_duals: Sequence) -> ExtRational:
    """Valid lower bound on the LP value from arbitrary (sign-clamped) duals."""
    local = local or LocalBounds.from_instance(instance)
    if len(candidate_duals) != instance.m:
        raise ValueError("one dual value per constraint expected")
    y = clamp_duals(instance, candidate_duals)
    d = [ZERO] * instance.n
    for j, c in instance.objective.items():
        d[j] = c
    total = ZERO
    for con, yi in zip(instance.constraints, y):
        if yi:
            total += yi * con.rhs
            for j, a in con.coefficients.items():
                d[j] -= yi * a
    for j, dj in enumerate(d):
        if dj > 0:
            lo = local.lower[j]
            if not lo.is_finite:
                return NEG_INF
            total += dj * lo.value
        elif dj < 0:
            up = local.upper[j]
            if not up.is_finite:
                return NEG_INF
            total += dj * up.value
    return ExtRational.finite(total)
