"""Independent certificate checker.

Deliberately self-contained: it shares nothing with the solver except the
rational parsing helpers, so a solver bug cannot hide behind shared code.
Any malformed or unjustified line rejects the whole certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..arith import RationalParseError, parse_rational

__all__ = ["Verdict", "verify_certificate"]

ZERO = Fraction(0)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None
    line: int | None = None

    def __bool__(self):
        return self.accepted


class _Reject(Exception):
    def __init__(self, reason: str, line: int | None):
        super().__init__(reason)
        self.reason, self.line = reason, line


@dataclass
class _Con:
    sense: str
    rhs: Fraction
    coefs: dict[int, Fraction]
    line: int
    rule: str = "con"
    assumptions: frozenset = frozenset()


class _Tokens:
    def __init__(self, text: str):
        self.toks: list[tuple[str, int]] = []
        for no, raw in enumerate(text.splitlines(), start=1):
            for tok in raw.split():
                self.toks.append((tok, no))
        self.pos = 0

    def line(self) -> int | None:
        if self.pos < len(self.toks):
            return self.toks[self.pos][1]
        return self.toks[-1][1] if self.toks else None

    def next(self, what: str) -> str:
        if self.pos >= len(self.toks):
            raise _Reject(f"unexpected end of file, expected {what}", self.line())
        tok = self.toks[self.pos][0]
        self.pos += 1
        return tok

    def keyword(self, word: str):
        line = self.line()
        tok = self.next(word)
        if tok != word:
            raise _Reject(f"expected {word}, found {tok!r}", line)

    def integer(self, what: str, lo: int = 0, hi: int | None = None) -> int:
        line = self.line()
        tok = self.next(what)
        if not tok.lstrip("-").isdigit():
            raise _Reject(f"expected integer {what}, found {tok!r}", line)
        v = int(tok)
        if v < lo or (hi is not None and v >= hi):
            raise _Reject(f"{what} {v} out of range", line)
        return v

    def rational(self, what: str) -> Fraction:
        line = self.line()
        tok = self.next(what)
        try:
            return parse_rational(tok)
        except (RationalParseError, ZeroDivisionError, ValueError):
            raise _Reject(f"malformed number {tok!r} for {what}", line) from None

    def bound(self, what: str):
        line = self.line()
        tok = self.next(what)
        if tok in ("inf", "+inf"):
            return math.inf
        if tok == "-inf":
            return -math.inf
        try:
            return parse_rational(tok)
        except (RationalParseError, ZeroDivisionError, ValueError):
            raise _Reject(f"malformed bound {tok!r}", line) from None


def _sparse(tk: _Tokens, n: int, what: str) -> dict[int, Fraction]:
    line = tk.line()
    nnz = tk.integer(f"{what} length", 0, n + 1)
    out: dict[int, Fraction] = {}
    for _ in range(nnz):
        j = tk.integer(f"{what} index", 0, n)
        v = tk.rational(f"{what} value")
        if j in out:
            raise _Reject(f"repeated index {j} in {what}", line)
        if v:
            out[j] = v
    return out


def _is_contradiction(c: _Con) -> bool:
    if c.coefs:
        return False
    return (c.sense == "G" and c.rhs > 0) or (c.sense == "L" and c.rhs < 0) or \
        (c.sense == "E" and c.rhs != 0)


def _dominates(p: _Con, q_sense: str, q_rhs: Fraction, q_coefs: dict) -> bool:
    if _is_contradiction(p):
        return True
    if p.coefs != q_coefs:
        return False
    if q_sense == "G":
        return p.sense in ("G", "E") and p.rhs >= q_rhs
    if q_sense == "L":
        return p.sense in ("L", "E") and p.rhs <= q_rhs
    return p.sense == "E" and p.rhs == q_rhs


def _satisfies(c: _Con, x: dict[int, Fraction]) -> bool:
    act = sum((a * x.get(j, ZERO) for j, a in c.coefs.items()), ZERO)
    if c.sense == "G":
        return act >= c.rhs
    if c.sense == "L":
        return act <= c.rhs
    return act == c.rhs


class _Checker:
    def __init__(self, text: str):
        self.tk = _Tokens(text)

    def run(self):
        tk = self.tk
        tk.keyword("VER")
        line = tk.line()
        version = tk.next("version")
        if version.split(".")[0] != "1":
            raise _Reject(f"unsupported version {version}", line)
        tk.keyword("VAR")
        n = tk.integer("variable count")
        for _ in range(n):
            tk.next("variable name")
        tk.keyword("INT")
        k = tk.integer("integer count", 0, n + 1)
        ints = set()
        for _ in range(k):
            line = tk.line()
            j = tk.integer("integer variable", 0, n)
            if j in ints:
                raise _Reject(f"variable {j} listed twice as integer", line)
            ints.add(j)
        tk.keyword("OBJ")
        line = tk.line()
        if tk.next("objective sense") != "min":
            raise _Reject("only minimisation objectives are supported", line)
        obj = _sparse(tk, n, "objective")
        tk.keyword("CON")
        m = tk.integer("constraint count")
        lines: list[_Con] = []
        for _ in range(m):
            lines.append(self._constraint(n, "con"))
        tk.keyword("RTP")
        line = tk.line()
        kind = tk.next("goal")
        if kind == "infeas":
            goal = None
        elif kind == "range":
            lb, ub = tk.bound("lower bound"), tk.bound("upper bound")
            if lb > ub:
                raise _Reject("empty objective range", line)
            goal = (lb, ub)
        else:
            raise _Reject(f"unknown goal {kind!r}", line)
        tk.keyword("SOL")
        s = tk.integer("solution count")
        best = None
        for _ in range(s):
            line = tk.line()
            tk.next("solution name")
            x = _sparse(tk, n, "solution")
            for j in ints:
                if x.get(j, ZERO).denominator != 1:
                    raise _Reject(f"solution value of integer variable {j} is fractional", line)
            for c in lines:
                if not _satisfies(c, x):
                    raise _Reject(f"solution violates constraint at line {c.line}", line)
            val = sum((c * x.get(j, ZERO) for j, c in obj.items()), ZERO)
            best = val if best is None else min(best, val)
        if goal is None and best is not None:
            raise _Reject("feasible solution contradicts the infeasibility claim", None)
        if goal is not None and goal[1] != math.inf and (best is None or best > goal[1]):
            raise _Reject("no solution attains the claimed upper bound", None)
        tk.keyword("DER")
        d = tk.integer("derivation count")
        for _ in range(d):
            lines.append(self._derivation(n, ints, lines))
        if tk.pos != len(tk.toks):
            raise _Reject("trailing tokens after derivations", tk.line())
        last = lines[-1] if d else None
        if last is not None and last.assumptions:
            raise _Reject("final derivation depends on unresolved assumptions", last.line)
        if goal is None:
            if last is None or not _is_contradiction(last):
                raise _Reject("infeasibility is not derived",
                              last.line if last else None)
        elif goal[0] != -math.inf:
            if last is None or not _dominates(last, "G", goal[0], obj):
                raise _Reject("claimed lower bound is not derived",
                              last.line if last else None)

    def _constraint(self, n: int, what: str) -> _Con:
        tk = self.tk
        line = tk.line()
        tk.next(f"{what} name")
        sline = tk.line()
        sense = tk.next("sense")
        if sense not in ("G", "L", "E"):
            raise _Reject(f"bad sense {sense!r}", sline)
        rhs = tk.rational("right-hand side")
        coefs = _sparse(tk, n, "constraint")
        return _Con(sense, rhs, coefs, line)

    def _derivation(self, n, ints, lines: list[_Con]) -> _Con:
        tk = self.tk
        c = self._constraint(n, "derivation")
        if c.sense == "E":
            raise _Reject("derived constraints must be inequalities", c.line)
        idx = len(lines)
        rule = tk.next("rule")
        c.rule = rule

        def ref(what):
            j = tk.integer(what, 0)
            if j >= idx:
                raise _Reject(f"reference {j} does not point to an earlier line", c.line)
            return j

        if rule == "asm":
            c.assumptions = frozenset([idx])
            return c
        if rule in ("lin", "rnd"):
            k = tk.integer("term count", 0)
            coefs: dict[int, Fraction] = {}
            rhs = ZERO
            assumptions = set()
            for _ in range(k):
                j = ref("line reference")
                mult = tk.rational("multiplier")
                src = lines[j]
                ok = (src.sense == "E"
                      or (src.sense == c.sense and mult >= 0)
                      or (src.sense != c.sense and mult <= 0))
                if not ok:
                    raise _Reject(f"multiplier of line {j} has the wrong sign", c.line)
                rhs += mult * src.rhs
                for v, a in src.coefs.items():
                    coefs[v] = coefs.get(v, ZERO) + mult * a
                assumptions |= src.assumptions
            coefs = {v: a for v, a in coefs.items() if a}
            if coefs != c.coefs:
                raise _Reject("coefficients do not match the combination", c.line)
            if rule == "rnd":
                for v, a in coefs.items():
                    if v not in ints or a.denominator != 1:
                        raise _Reject("rounding needs integer coefficients on integer variables", c.line)
                rhs = Fraction(math.ceil(rhs) if c.sense == "G" else math.floor(rhs))
            if (c.sense == "G" and c.rhs > rhs) or (c.sense == "L" and c.rhs < rhs):
                raise _Reject("right-hand side is stronger than the combination", c.line)
            c.assumptions = frozenset(assumptions)
            return c
        if rule == "uns":
            i1, a1, i2, a2 = (ref("line reference") for _ in range(4))
            for a in (a1, a2):
                if lines[a].rule != "asm":
                    raise _Reject(f"line {a} is not an assumption", c.line)
            p, q = lines[a1], lines[a2]
            if p.sense == "G":
                p, q = q, p
            if not (p.sense == "L" and q.sense == "G" and p.coefs == q.coefs and p.coefs
                    and p.rhs.denominator == 1 and q.rhs == p.rhs + 1):
                raise _Reject("assumptions do not form a split disjunction", c.line)
            for v, a in p.coefs.items():
                if v not in ints or a.denominator != 1:
                    raise _Reject("split needs integer coefficients on integer variables", c.line)
            for i in (i1, i2):
                if not _dominates(lines[i], c.sense, c.rhs, c.coefs):
                    raise _Reject(f"line {i} does not imply the stated constraint", c.line)
            c.assumptions = frozenset((lines[i1].assumptions - {a1}) | (lines[i2].assumptions - {a2}))
            return c
        raise _Reject(f"unknown rule {rule!r}", c.line)


def verify_certificate(content) -> Verdict:
    """Check a certificate given as ``bytes`` or ``str``."""
    if isinstance(content, bytes):
        try:
            content = content.decode("ascii")
        except UnicodeDecodeError:
            return Verdict(False, "certificate is not ASCII text", None)
    try:
        _Checker(content).run()
    except _Reject as r:
        return Verdict(False, r.reason, r.line)
    return Verdict(True)
