import random
from fractions import Fraction

import pytest

from exactmip.arith import NEG_INF, POS_INF, ExtRational
from exactmip.lp import (LocalBounds, LPStatus, farkas_gap, safe_dual_bound, solve_lp,
                         tableau_row)
from exactmip.model import LinearConstraint, Sense, Variable, build_instance

from oracles import lp_vertex_oracle


def box(name, lo=0, up=None):
    return Variable(name, NEG_INF if lo is None else ExtRational.finite(lo),
                    POS_INF if up is None else ExtRational.finite(up))


def row(coefs, sense, rhs, name="r"):
    return LinearConstraint(name, coefs, sense, rhs)


def test_max_x_below_three_halves():
    inst = build_instance([box("x")], [row({0: 1}, Sense.LE, Fraction(3, 2))], {0: -1})
    res = solve_lp(inst)
    assert res.status is LPStatus.OPTIMAL
    assert res.primal == (Fraction(3, 2),) and res.objective == Fraction(-3, 2)
    assert res.duals == (-1,)


def test_direct_contradiction_farkas():
    inst = build_instance([box("x", None)], [row({0: 1}, Sense.GE, 2, "a"), row({0: 1}, Sense.LE, 1, "b")], {})
    res = solve_lp(inst)
    assert res.status is LPStatus.INFEASIBLE
    assert res.farkas == (1, -1)   # the <= row enters the >= aggregation negated
    lower, upper = LocalBounds.from_instance(inst).finite()
    rows = [(c.coefficients, c.sense, c.rhs) for c in inst.constraints]
    assert farkas_gap(rows, lower, upper, res.farkas) == 1


def test_bland_tie_breaking_vertex():
    inst = build_instance([box("x"), box("y")], [row({0: 1, 1: 1}, Sense.LE, 1)], {0: -1, 1: -1})
    res = solve_lp(inst)
    assert res.objective == -1 == lp_vertex_oracle(
        build_instance([box("x", 0, 1), box("y", 0, 1)], inst.constraints, inst.objective))
    assert res.primal == (1, 0)


def test_empty_lp():
    res = solve_lp(build_instance([], [], {}))
    assert res.status is LPStatus.OPTIMAL and res.objective == 0


def test_unbounded_with_ray():
    inst = build_instance([box("x"), box("y", 0, 1)], [row({0: 1, 1: -1}, Sense.GE, 0)], {0: -1})
    res = solve_lp(inst)
    assert res.status is LPStatus.UNBOUNDED and res.objective == NEG_INF
    assert sum(c * res.ray[j] for j, c in inst.objective.items()) < 0
    # the ray keeps the row satisfied
    assert res.ray[0] - res.ray[1] >= 0 and res.ray[1] == 0


def test_free_variable_is_handled():
    inst = build_instance([box("x", None), box("y", None)],
                          [row({0: 1, 1: 1}, Sense.EQ, 3), row({0: 1, 1: -1}, Sense.EQ, -1)], {0: 1})
    res = solve_lp(inst)
    assert res.status is LPStatus.OPTIMAL and res.primal == (1, 2)


def test_crossed_local_bounds_infeasible():
    inst = build_instance([box("x", 0, 5)], [], {0: 1})
    local = LocalBounds.from_instance(inst).tighten(0, "lower", 3).tighten(0, "upper", 2)
    res = solve_lp(inst, local)
    assert res.status is LPStatus.INFEASIBLE
    assert res.farkas_bounds[0] == (1, 1)


def test_tableau_row_of_single_row():
    inst = build_instance([box("x")], [row({0: 2}, Sense.LE, 3)], {0: -1})
    res = solve_lp(inst)
    tr = tableau_row(res, inst, 0)
    assert tr.coefs == {1: Fraction(1, 2)} and tr.rhs == Fraction(3, 2)
    with pytest.raises(ValueError):
        tableau_row(res, inst, 1)


def test_tableau_row_identity_case():
    inst = build_instance([box("x", None)], [row({0: 1}, Sense.EQ, 4)], {0: 1})
    res = solve_lp(inst)
    tr = tableau_row(res, inst, 0)
    assert tr.rhs == 4 and tr.coefs == {}


def test_tableau_row_reproduces_basic_value():
    rng = random.Random(5)
    checked = 0
    for _ in range(40):
        inst = _random_box_lp(rng)
        res = solve_lp(inst)
        if not res.optimal:
            continue
        for b in res.basis:
            if b >= inst.n + inst.m:
                continue
            tr = tableau_row(res, inst, b)
            value = res.primal[b] if b < inst.n else inst.constraints[b - inst.n].activity(res.primal)
            assert tr.rhs == value
            checked += 1
    assert checked > 20


def test_tableau_needs_optimal_result():
    inst = build_instance([box("x")], [row({0: 1}, Sense.LE, -1)], {})
    with pytest.raises(ValueError):
        tableau_row(solve_lp(inst), inst, 0)


def _random_box_lp(rng):
    n, m = rng.randint(1, 4), rng.randint(1, 4)
    variables = [box(f"v{j}", rng.randint(-3, 0), rng.randint(0, 3)) for j in range(n)]
    cons = [row({j: Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for j in range(n)},
                rng.choice([Sense.GE, Sense.LE, Sense.EQ]), rng.randint(-4, 4), f"r{i}") for i in range(m)]
    return build_instance(variables, cons, {j: rng.randint(-3, 3) for j in range(n)})


def test_safe_dual_bound_examples():
    inst = build_instance([box("x", 0, 4), box("y", -1, 2)],
                          [row({0: 1, 1: 1}, Sense.GE, 2), row({0: 1, 1: -1}, Sense.LE, 1)], {0: 2, 1: 1})
    res = solve_lp(inst)
    assert safe_dual_bound(inst, None, res.duals) == res.objective
    # zero duals: the box bound sum_j min(c_j l_j, c_j u_j)
    assert safe_dual_bound(inst, None, [0, 0]) == 2 * 0 + 1 * -1
    free = build_instance([box("x", None)], [], {0: 1})
    assert safe_dual_bound(free, None, []) == NEG_INF


def test_safe_dual_bound_never_exceeds_lp_optimum():
    rng = random.Random(11)
    trials = 0
    while trials < 200:
        inst = _random_box_lp(rng)
        res = solve_lp(inst)
        if not res.optimal:
            continue
        i = rng.randrange(inst.m)
        duals = list(res.duals)
        duals[i] += Fraction(1, 10) * rng.choice([1, -1])
        bound = safe_dual_bound(inst, None, duals)
        assert bound <= res.objective
        trials += 1


def test_deterministic():
    rng = random.Random(3)
    inst = _random_box_lp(rng)
    a, b = solve_lp(inst), solve_lp(inst)
    assert (a.status, a.primal, a.duals, a.basis, a.iterations) == (b.status, b.primal, b.duals, b.basis, b.iterations)
