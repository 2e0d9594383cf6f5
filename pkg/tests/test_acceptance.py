"""Acceptance gate: one test per criterion, summarised as PASS/FAIL lines."""

from __future__ import annotations

import math
import os
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from exactmip.arith import ExtRational, parse_rational
from exactmip.bnb import SolveStatus, solve
from exactmip.bnb.branching import (DEFAULT_GAMMA, BranchStep, Direction, PseudocostStore,
                                    select_branch_var, update_pseudocosts)
from exactmip.certificate import emit_certificate, emit_cut_certificate, verify_certificate
from exactmip.cuts import certify_split_cut, generate_cuts
from exactmip.iis import (Verdict, additive_method, deletion_filter, feasibility_oracle,
                          iis_elements, subsystem)
from exactmip.io import read_file, read_instance, write_instance
from exactmip.lp import LPResult, LPStatus, solve_lp
from exactmip.model import (LinearConstraint, Sense, Variable, build_instance, check_feasible)

from catalog import INVALID_CERTIFICATES
from instances import random_milp
from oracles import (feasible_lattice_points, lp_vertex_oracle, milp_oracle, mixed_segments)
from suite import SUITE_SIZE, solve_suite, suite_instance

DATA = Path(__file__).parent / "data"
CORPUS = sorted(list(DATA.glob("*.lp")) + list(DATA.glob("*.mps")))


@pytest.fixture(scope="module")
def suite():
    start = time.monotonic()
    results = solve_suite()
    return results, time.monotonic() - start


@pytest.fixture(scope="module")
def corpus_results():
    out = []
    for path in CORPUS:
        inst = read_file(path)
        out.append((path, inst, solve(inst)))
    return out


# -- 1 -------------------------------------------------------------------------
@pytest.mark.criterion(1, "MILP oracle equivalence on 200 random instances")
def test_criterion_1_milp_oracle_equivalence(suite):
    results, elapsed = suite
    assert len(results) == SUITE_SIZE
    mismatches = []
    statuses = {"optimal": 0, "infeasible": 0}
    for seed, (inst, res, _cert, _stats) in enumerate(results):
        assert inst.n <= 6 and inst.m <= 6
        for v in inst.variables:
            assert -5 <= v.lower.value <= v.upper.value <= 5
        ref = milp_oracle(inst)
        if ref is None:
            ok = res.status is SolveStatus.INFEASIBLE
        else:
            ok = (res.status is SolveStatus.OPTIMAL and res.primal_bound.value == ref[0]
                  and res.dual_bound.value == ref[0])
        statuses[res.status.value] = statuses.get(res.status.value, 0) + 1
        if not ok:
            mismatches.append((seed, res.status, ref and ref[0], res.primal_bound))
    assert not mismatches
    assert statuses["optimal"] >= 100 and statuses["infeasible"] >= 10
    assert sum(r.stats.nodes > 1 for _, r, _, _ in results) >= 10
    assert elapsed < 300


# -- 2 -------------------------------------------------------------------------
def _random_lp(rng: random.Random):
    n, m = rng.randint(1, 4), rng.randint(0, 4)
    variables = []
    for j in range(n):
        lo = rng.randint(-5, 4)
        variables.append(Variable(f"v{j}", ExtRational.finite(lo),
                                  ExtRational.finite(rng.randint(lo, 5))))
    cons = []
    for i in range(m):
        coefs = {j: Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for j in range(n)
                 if rng.random() < 0.8}
        sense = rng.choice([Sense.GE, Sense.LE, Sense.LE, Sense.EQ])
        cons.append(LinearConstraint(f"r{i}", coefs, sense, Fraction(rng.randint(-10, 10), rng.randint(1, 3))))
    obj = {j: Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for j in range(n)}
    return build_instance(variables, cons, obj)


def _farkas_unsatisfiable(inst, res: LPResult) -> bool:
    lam = res.farkas
    g = [Fraction(0)] * inst.n
    rhs = Fraction(0)
    for con, li in zip(inst.constraints, lam):
        if (con.sense is Sense.GE and li < 0) or (con.sense is Sense.LE and li > 0):
            return False
        rhs += li * con.rhs
        for j, a in con.coefficients.items():
            g[j] += li * a
    top = Fraction(0)
    for j, gj in enumerate(g):
        v = inst.variables[j]
        top += gj * (v.upper.value if gj > 0 else v.lower.value)
    if any(lam):
        return top < rhs
    # bounds alone: a crossed pair must be flagged
    return any(lo > 0 and up > 0 and inst.variables[j].lower > inst.variables[j].upper
               for j, (lo, up) in enumerate(res.farkas_bounds))


@pytest.mark.criterion(2, "LP oracle equivalence, strong duality and Farkas soundness")
def test_criterion_2_lp_oracle():
    start = time.monotonic()
    rng = random.Random(2024)
    counts = {"optimal": 0, "infeasible": 0}
    for _ in range(200):
        inst = _random_lp(rng)
        res = solve_lp(inst)
        ref = lp_vertex_oracle(inst)
        ncols = inst.n + 2 * inst.m
        assert res.iterations <= 2 * math.comb(ncols, max(inst.m, 1)) + 2
        if ref is None:
            assert res.status is LPStatus.INFEASIBLE
            assert _farkas_unsatisfiable(inst, res)
            counts["infeasible"] += 1
            continue
        assert res.status is LPStatus.OPTIMAL
        assert res.objective.value == ref
        x = res.primal
        assert check_feasible(inst, x).feasible
        y, d = res.duals, res.reduced_costs
        for con, yi in zip(inst.constraints, y):
            assert not (con.sense is Sense.GE and yi < 0) and not (con.sense is Sense.LE and yi > 0)
        for j in range(inst.n):
            col = sum((yi * con.coefficients.get(j, 0) for con, yi in zip(inst.constraints, y)), Fraction(0))
            assert d[j] == inst.objective.get(j, Fraction(0)) - col
            if d[j] > 0:
                assert x[j] == inst.variables[j].lower.value
            if d[j] < 0:
                assert x[j] == inst.variables[j].upper.value
        dual_value = (sum((yi * con.rhs for con, yi in zip(inst.constraints, y)), Fraction(0))
                      + sum((d[j] * x[j] for j in range(inst.n)), Fraction(0)))
        assert dual_value == res.objective.value
        counts["optimal"] += 1
    assert counts["optimal"] >= 50 and counts["infeasible"] >= 20
    assert time.monotonic() - start < 120


# -- 3 -------------------------------------------------------------------------
def _der_lines(text: str):
    lines = text.split("\n")
    start = next(i for i, line in enumerate(lines) if line.startswith("DER "))
    ncon = int(next(line for line in lines if line.startswith("CON ")).split()[1])
    return lines, start, ncon


def _line_coefs(tokens):
    nnz = int(tokens[3])
    return {int(tokens[4 + 2 * k]): tokens[5 + 2 * k] for k in range(nnz)}, 4 + 2 * nnz


def _all_lines(text):
    """Map global line index -> has nonzero coefficients."""
    lines, start, ncon = _der_lines(text)
    con_start = next(i for i, line in enumerate(lines) if line.startswith("CON ")) + 1
    out = {}
    for k in range(ncon):
        out[k] = lines[con_start + k].split()[3] != "0"
    d = int(lines[start].split()[1])
    for k in range(d):
        out[ncon + k] = lines[start + 1 + k].split()[3] != "0"
    return out


def _mutations(certs, rng: random.Random, per_kind: int):
    kinds = {"rhs": [], "coef": [], "mult": []}
    for cert in certs:
        text = cert.decode()
        lines, start, ncon = _der_lines(text)
        nonzero = _all_lines(text)
        d = int(lines[start].split()[1])
        for k in range(d):
            pos = start + 1 + k
            tokens = lines[pos].split()
            coefs, rule_at = _line_coefs(tokens)
            if tokens[rule_at] not in ("lin", "rnd"):
                continue
            kinds["rhs"].append((text, pos))
            if coefs:
                kinds["coef"].append((text, pos))
            terms = int(tokens[rule_at + 1])
            if any(nonzero[int(tokens[rule_at + 2 + 2 * t])] for t in range(terms)):
                kinds["mult"].append((text, pos))
    mutated = []
    for kind, pool in kinds.items():
        for text, pos in rng.sample(pool, min(per_kind, len(pool))):
            lines = text.split("\n")
            tokens = lines[pos].split()
            _coefs, rule_at = _line_coefs(tokens)
            delta = Fraction(rng.randint(1, 9), rng.randint(1, 4))
            if kind == "rhs":
                rhs = parse_rational(tokens[2])
                tokens[2] = str(rhs + delta if tokens[1] == "G" else rhs - delta).replace(" ", "")
            elif kind == "coef":
                nnz = int(tokens[3])
                k = rng.randrange(nnz)
                tokens[5 + 2 * k] = str(parse_rational(tokens[5 + 2 * k]) + delta)
            else:
                terms = int(tokens[rule_at + 1])
                nonzero = _all_lines(text)
                choices = [t for t in range(terms) if nonzero[int(tokens[rule_at + 2 + 2 * t])]]
                t = rng.choice(choices)
                at = rule_at + 3 + 2 * t
                tokens[at] = str(parse_rational(tokens[at]) + delta)
            lines[pos] = " ".join(tokens)
            mutated.append((kind, "\n".join(lines).encode(), pos + 1))
    return mutated


@pytest.mark.criterion(3, "certificate closure, mutation rejection and invalid-derivation catalog")
def test_criterion_3_certificate_closure(suite, corpus_results):
    start = time.monotonic()
    results, _ = suite
    certs = [cert for _inst, _res, cert, _stats in results]
    for path, inst, res in corpus_results:
        if res.status is SolveStatus.UNBOUNDED:
            continue
        certs.append(emit_certificate(res, inst))
    rejected = [i for i, c in enumerate(certs) if not verify_certificate(c)]
    assert not rejected, [verify_certificate(certs[i]) for i in rejected[:3]]

    mutants = _mutations(certs, random.Random(7), per_kind=25)
    assert len(mutants) >= 50
    for kind, data, line in mutants:
        verdict = verify_certificate(data)
        assert not verdict.accepted, (kind, line)
        assert verdict.line == line, (kind, verdict)

    assert len(INVALID_CERTIFICATES) >= 10
    for name, text, line in INVALID_CERTIFICATES:
        verdict = verify_certificate(text)
        assert not verdict.accepted, name
        if line is not None:
            assert verdict.line == line, (name, verdict)
    assert time.monotonic() - start < 120


# -- 4 -------------------------------------------------------------------------
def _cut_valid(inst, cut) -> bool:
    coefs, rhs = cut.coefficients, cut.rhs
    if len(inst.integral) == inst.n:
        pts = feasible_lattice_points(inst)
        for p in pts:
            if sum((a * int(p[j]) for j, a in coefs.items()), Fraction(0)) < rhs:
                return False
        return True
    y = next(j for j in range(inst.n) if not inst.variables[j].integral)
    for x, lo, hi in mixed_segments(inst):
        base = sum((a * x[j] for j, a in coefs.items() if j != y), Fraction(0))
        g = coefs.get(y, Fraction(0))
        if base + min(g * lo, g * hi) < rhs:
            return False
    return True


@pytest.mark.criterion(4, "GMI cuts valid, separating and certified")
def test_criterion_4_cut_validity():
    start = time.monotonic()
    total = 0
    for seed in range(SUITE_SIZE):
        inst = suite_instance(seed)
        lp = solve_lp(inst)
        if not lp.optimal:
            continue
        cuts = generate_cuts(inst, lp)
        proofs = []
        for cut in cuts:
            assert cut.constraint.activity(lp.primal) < cut.rhs
            assert _cut_valid(inst, cut), (seed, cut)
            proofs.append(certify_split_cut(inst, cut))
        if proofs:
            verdict = verify_certificate(emit_cut_certificate(inst, proofs))
            assert verdict.accepted, (seed, verdict)
        total += len(cuts)
        res = solve(inst)
        for proof in res.trace.cuts:
            assert _cut_valid(inst, proof.cut), (seed, proof.cut)
    assert total >= 30
    assert time.monotonic() - start < 120


# -- 5 -------------------------------------------------------------------------
@pytest.mark.criterion(5, "exact zero gap and tolerance-free incumbents")
def test_criterion_5_zero_gap(suite, corpus_results):
    results, _ = suite
    runs = [(inst, res) for inst, res, _, _ in results]
    runs += [(inst, res) for _path, inst, res in corpus_results]
    optimal = 0
    for inst, res in runs:
        if res.status is not SolveStatus.OPTIMAL:
            continue
        optimal += 1
        assert res.primal_bound.value - res.dual_bound.value == 0
        report = check_feasible(inst, res.incumbent)
        assert report.bound_violations == [] and report.constraint_violations == []
        assert report.fractional == []
    assert optimal >= 100


# -- 6 -------------------------------------------------------------------------
def _infeasible_instances(count: int):
    out = []
    seed = 0
    while len(out) < count:
        rng = random.Random(10_000 + seed)
        seed += 1
        inst = random_milp(rng, n=rng.randint(2, 3), m=rng.randint(2, 4), fractional=seed % 2 == 0)
        if milp_oracle(inst) is None:
            out.append(inst)
    return out


def _planted_pair(seed: int):
    """Rows feasible at two lattice points p1, p2 plus a conflicting pair
    a.x >= a.p1 and a.x <= a.p1 - 1 (with a.p2 <= a.p1 - 1)."""
    rng = random.Random(20_000 + seed)
    n = 3
    variables = [Variable(f"x{j}", ExtRational.finite(-4), ExtRational.finite(4), True) for j in range(n)]
    while True:
        p1 = [rng.randint(-4, 4) for _ in range(n)]
        p2 = [rng.randint(-4, 4) for _ in range(n)]
        a = {j: Fraction(rng.randint(-3, 3)) for j in range(n)}
        a = {j: v for j, v in a.items() if v}
        act1 = sum(v * p1[j] for j, v in a.items())
        act2 = sum(v * p2[j] for j, v in a.items())
        if a and act2 <= act1 - 1:
            break
    rows = []
    for i in range(3):
        coefs = {j: Fraction(rng.randint(-4, 4)) for j in range(n)}
        coefs = {j: v for j, v in coefs.items() if v} or {0: Fraction(1)}
        lo = min(sum(v * p[j] for j, v in coefs.items()) for p in (p1, p2))
        hi = max(sum(v * p[j] for j, v in coefs.items()) for p in (p1, p2))
        if rng.random() < 0.5:
            rows.append(LinearConstraint(f"b{i}", coefs, Sense.GE, lo - rng.randint(0, 2)))
        else:
            rows.append(LinearConstraint(f"b{i}", coefs, Sense.LE, hi + rng.randint(0, 2)))
    pair = [LinearConstraint("p", a, Sense.GE, act1), LinearConstraint("q", a, Sense.LE, act1 - 1)]
    slots = sorted(rng.sample(range(5), 2))
    cons, it = [], iter(rows)
    for k in range(5):
        cons.append(pair[slots.index(k)] if k in slots else next(it))
    return build_instance(variables, cons, {}), set(slots)


@pytest.mark.criterion(6, "IIS contract for deletion and additive methods")
def test_criterion_6_iis_contract():
    start = time.monotonic()
    for inst in _infeasible_instances(50):
        n_elements = len(iis_elements(inst))
        for method in (deletion_filter, additive_method):
            res = method(inst)
            assert res.irreducible
            assert feasibility_oracle(subsystem(inst, res.elements)) is Verdict.INFEASIBLE
            for e in res.elements:
                rest = [x for x in res.elements if x != e]
                assert feasibility_oracle(subsystem(inst, rest)) is Verdict.FEASIBLE
        # bounds kept: the subsystem stays boxed, so the lattice oracle can re-check it
        res = deletion_filter(inst, include_bounds=False)
        assert milp_oracle(subsystem(inst, res.elements, include_bounds=False)) is None
        assert deletion_filter(inst).oracle_calls == n_elements + 1
    for seed in range(20):
        inst, pair = _planted_pair(seed)
        assert milp_oracle(inst) is None
        for method in (deletion_filter, additive_method):
            res = method(inst)
            assert res.constraint_indices == pair and not res.bound_indices, (seed, method)
    assert time.monotonic() - start < 180


# -- 7 -------------------------------------------------------------------------
def _plain_pseudocost_choice(records, point, cands, threshold):
    """Independent scorer: mean level-0 records, product of the two gains."""
    def mean(var, side):
        vals = records.get((var, side), [])
        return sum(vals, Fraction(0)) / len(vals) if vals else Fraction(0)

    if any(len(records.get((j, s), [])) < threshold for j in cands for s in ("down", "up")):
        best = None
        for j in cands:
            f = point[j] - math.floor(point[j])
            key = min(f, 1 - f)
            if best is None or key > best[0]:
                best = (key, j)
        return best[1]
    best = None
    for j in cands:
        f = point[j] - math.floor(point[j])
        down, up = mean(j, "down") * f, mean(j, "up") * (1 - f)
        key = (down * up, down + up)
        if best is None or key > best[0]:
            best = (key, j)
    return best[1]


@pytest.mark.criterion(7, "ancestral pseudocost behaviour")
def test_criterion_7_aps():
    rng = random.Random(77)
    n = 6
    inst = build_instance([Variable(f"z{j}", ExtRational.finite(0), ExtRational.finite(10), True)
                           for j in range(n)], [], {})
    for _ in range(100):
        store = PseudocostStore(gamma=Fraction(0), reliability=rng.randint(0, 2))
        records = {}
        for j in range(n):
            for side in ("down", "up"):
                for _ in range(rng.randint(0, 3)):
                    val = Fraction(rng.randint(0, 12), rng.randint(1, 4))
                    store.record(0, j, Direction(side), val)
                    records.setdefault((j, side), []).append(val)
                for _ in range(rng.randint(0, 2)):
                    store.record(1, j, Direction(side), Fraction(rng.randint(0, 50)))
        point = [Fraction(rng.randint(0, 40), rng.choice([1, 2, 3, 4])) for _ in range(n)]
        if all(p.denominator == 1 for p in point):
            point[0] = Fraction(1, 2)
        lp = LPResult(LPStatus.OPTIMAL, ExtRational.finite(0), primal=tuple(point))
        cands = [j for j in range(n) if point[j].denominator != 1]
        expected = _plain_pseudocost_choice(records, point, cands, store.reliability)
        assert select_branch_var(inst, lp, store, "aps") == expected
        assert select_branch_var(inst, lp, store, "pscost") == expected

    # shipped default discount factor
    assert DEFAULT_GAMMA == Fraction(1, 5)
    assert PseudocostStore().gamma == Fraction(1, 5)

    # two-record lineage: N0 -(x)-> N1 -(y)-> N2
    L0, L1, L2 = Fraction(0), Fraction(1), Fraction(4)
    fx, fy = Fraction(1, 2), Fraction(1, 2)
    store = PseudocostStore()
    x, y = 0, 1
    step_x = BranchStep(x, Direction.DOWN, fx, L0)
    update_pseudocosts(store, [step_x], L1)
    assert store.level0[(x, Direction.DOWN)].total == (L1 - L0) / fx == 2
    step_y = BranchStep(y, Direction.DOWN, fy, L1)
    update_pseudocosts(store, [step_x, step_y], L2)
    assert store.level0[(y, Direction.DOWN)].total == (L2 - L1) / fy == 6
    assert store.level1[(x, Direction.DOWN)].total == (L2 - L1) / fx == 6
    assert store.count(0, x, Direction.DOWN) == 1 and store.count(1, x, Direction.DOWN) == 1


# -- 8 -------------------------------------------------------------------------
def _normal(inst):
    return (tuple((v.lower, v.upper, v.integral) for v in inst.variables),
            tuple((tuple(sorted(c.coefficients.items())), c.sense, c.rhs) for c in inst.constraints),
            tuple(sorted(inst.objective.items())), inst.offset, inst.maximize)


@pytest.mark.criterion(8, "read/write round trip on the corpus in both formats")
def test_criterion_8_round_trip():
    instances = [read_file(p) for p in CORPUS] + [suite_instance(s) for s in range(40)]
    assert len(CORPUS) >= 10
    for inst in instances:
        for fmt in ("mps", "lp"):
            again = read_instance(write_instance(inst, fmt), fmt)
            assert _normal(again) == _normal(inst), fmt
            assert write_instance(again, fmt) == write_instance(inst, fmt)
    value = parse_rational("0.1")
    assert value == Fraction(1, 10) and value.denominator == 10
    inst = read_instance("Minimize\n obj: 0.1 x\nSubject To\n c: x >= 0.1\nEnd\n", "lp")
    assert inst.objective[0] == Fraction(1, 10) and inst.constraints[0].rhs.denominator == 10


# -- 9 -------------------------------------------------------------------------
@pytest.mark.criterion(9, "deterministic certificates and statistics")
def test_criterion_9_determinism():
    script = Path(__file__).parent / "suite.py"
    outputs = []
    for seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        proc = subprocess.run([sys.executable, str(script)], capture_output=True, text=True,
                              env=env, check=True, timeout=600)
        outputs.append(proc.stdout)
    assert outputs[0] == outputs[1]
    assert len(outputs[0].splitlines()) == SUITE_SIZE
