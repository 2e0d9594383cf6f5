"""Independent reference solvers used as test oracles.

They share no code with the package beyond the model containers: integer
programs are solved by enumerating the lattice points of the bounding box
(vectorised with numpy on integer-scaled data), mixed programs with a single
continuous variable by exact interval intersection per lattice point, and
LPs by enumerating basic solutions with Fraction Gaussian elimination.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def _box(instance):
    ranges = []
    for v in instance.variables:
        if not (v.lower.is_finite and v.upper.is_finite):
            if v.integral:
                raise ValueError("oracle needs finite bounds")
            ranges.append(None)
            continue
        ranges.append((math.ceil(v.lower.value), math.floor(v.upper.value)))
    return ranges


def _scaled_rows(instance):
    rows = []
    for con in instance.constraints:
        den = 1
        for a in list(con.coefficients.values()) + [con.rhs]:
            den = math.lcm(den, Fraction(a).denominator)
        vec = np.zeros(instance.n, dtype=np.int64)
        for j, a in con.coefficients.items():
            vec[j] = int(a * den)
        rows.append((vec, con.sense.value, int(con.rhs * den)))
    return rows


def _grid(ranges):
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ranges]
    if any(len(a) == 0 for a in axes):
        return np.zeros((0, len(ranges)), dtype=np.int64)
    if not axes:
        return np.zeros((1, 0), dtype=np.int64)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def brute_force_ip(instance):
    """Optimum of a pure integer program: (internal value, point) or None."""
    assert len(instance.integral) == instance.n
    pts = _grid(_box(instance))
    mask = np.ones(len(pts), dtype=bool)
    for vec, sense, rhs in _scaled_rows(instance):
        act = pts @ vec
        if sense == ">=":
            mask &= act >= rhs
        elif sense == "<=":
            mask &= act <= rhs
        else:
            mask &= act == rhs
    feas = pts[mask]
    if len(feas) == 0:
        return None
    den = 1
    for c in instance.objective.values():
        den = math.lcm(den, c.denominator)
    cvec = np.zeros(instance.n, dtype=np.int64)
    for j, c in instance.objective.items():
        cvec[j] = int(c * den)
    vals = feas @ cvec
    k = int(np.argmin(vals))
    return Fraction(int(vals[k]), den), tuple(Fraction(int(v)) for v in feas[k])


def brute_force_mixed(instance):
    """Optimum of a MILP with exactly one continuous variable.

    Returns (value, point), None if infeasible, or "unbounded".
    """
    cont = [j for j in range(instance.n) if not instance.variables[j].integral]
    assert len(cont) == 1
    y = cont[0]
    ints = instance.integral
    vy = instance.variables[y]
    ranges = [r for j, r in enumerate(_box(instance)) if j != y]
    best = None
    for combo in itertools.product(*[range(lo, hi + 1) for lo, hi in ranges]):
        x = dict(zip(ints, map(Fraction, combo)))
        lo = vy.lower.value if vy.lower.is_finite else None
        hi = vy.upper.value if vy.upper.is_finite else None
        ok = True
        for con in instance.constraints:
            rest = sum((a * x[j] for j, a in con.coefficients.items() if j != y), Fraction(0))
            g = con.coefficients.get(y, Fraction(0))
            b = con.rhs - rest
            sense = con.sense.value
            if g == 0:
                if (sense == ">=" and b > 0) or (sense == "<=" and b < 0) or (sense == "=" and b != 0):
                    ok = False
                    break
                continue
            t = b / g
            if sense == "=":
                lo = t if lo is None else max(lo, t)
                hi = t if hi is None else min(hi, t)
            elif (sense == ">=") == (g > 0):
                lo = t if lo is None else max(lo, t)
            else:
                hi = t if hi is None else min(hi, t)
        if not ok or (lo is not None and hi is not None and lo > hi):
            continue
        cy = instance.objective.get(y, Fraction(0))
        if cy > 0:
            if lo is None:
                return "unbounded"
            yv = lo
        elif cy < 0:
            if hi is None:
                return "unbounded"
            yv = hi
        else:
            yv = lo if lo is not None else (hi if hi is not None else Fraction(0))
        point = dict(x)
        point[y] = yv
        vec = tuple(point[j] for j in range(instance.n))
        val = sum((c * vec[j] for j, c in instance.objective.items()), Fraction(0))
        if best is None or val < best[0]:
            best = (val, vec)
    return best


def _solve_square(mat, rhs):
    n = len(mat)
    a = [list(row) + [b] for row, b in zip(mat, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def lp_vertex_oracle(instance):
    """Minimum of the LP relaxation over a bounded box by vertex enumeration.

    Returns the internal value (offset excluded) or None if infeasible.
    """
    n = instance.n
    hyper = []
    for con in instance.constraints:
        hyper.append(([con.coefficients.get(j, Fraction(0)) for j in range(n)], con.rhs))
    for j, v in enumerate(instance.variables):
        unit = [Fraction(int(i == j)) for i in range(n)]
        for b in (v.lower, v.upper):
            if not b.is_finite:
                raise ValueError("oracle needs finite bounds")
            hyper.append((unit, b.value))
    best = None
    for combo in itertools.combinations(range(len(hyper)), n):
        sol = _solve_square([hyper[i][0] for i in combo], [hyper[i][1] for i in combo])
        if sol is None:
            continue
        if any(sol[j] < v.lower.value or sol[j] > v.upper.value
               for j, v in enumerate(instance.variables)):
            continue
        if not all(c.satisfied_by(c.activity(sol)) for c in instance.constraints):
            continue
        val = sum((c * sol[j] for j, c in instance.objective.items()), Fraction(0))
        if best is None or val < best:
            best = val
    return best


def feasible_lattice_points(instance):
    """All integer-feasible points of a pure integer program (numpy array)."""
    assert len(instance.integral) == instance.n
    pts = _grid(_box(instance))
    mask = np.ones(len(pts), dtype=bool)
    for vec, sense, rhs in _scaled_rows(instance):
        act = pts @ vec
        if sense == ">=":
            mask &= act >= rhs
        elif sense == "<=":
            mask &= act <= rhs
        else:
            mask &= act == rhs
    return pts[mask]


def mixed_segments(instance):
    """For a MILP with one continuous variable ``y``: every integer assignment
    with a nonempty feasible ``y`` interval, as (assignment dict, lo, hi)."""
    cont = [j for j in range(instance.n) if not instance.variables[j].integral]
    assert len(cont) == 1
    y = cont[0]
    vy = instance.variables[y]
    ranges = [r for j, r in enumerate(_box(instance)) if j != y]
    out = []
    for combo in itertools.product(*[range(lo, hi + 1) for lo, hi in ranges]):
        x = dict(zip(instance.integral, map(Fraction, combo)))
        lo, hi = vy.lower.value, vy.upper.value
        ok = True
        for con in instance.constraints:
            rest = sum((a * x[j] for j, a in con.coefficients.items() if j != y), Fraction(0))
            g = con.coefficients.get(y, Fraction(0))
            b = con.rhs - rest
            sense = con.sense.value
            if g == 0:
                if (sense == ">=" and b > 0) or (sense == "<=" and b < 0) or (sense == "=" and b != 0):
                    ok = False
                    break
                continue
            t = b / g
            if sense == "=" or (sense == ">=") == (g > 0):
                lo = max(lo, t)
            if sense == "=" or (sense == ">=") != (g > 0):
                hi = min(hi, t)
        if ok and lo <= hi:
            out.append((x, lo, hi))
    return out


def milp_oracle(instance):
    """Dispatch to the lattice or the one-continuous-variable oracle."""
    if len(instance.integral) == instance.n:
        return brute_force_ip(instance)
    return brute_force_mixed(instance)
