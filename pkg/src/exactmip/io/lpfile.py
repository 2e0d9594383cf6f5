"""CPLEX-style LP text subset, extended with ``p/q`` rational literals.

Sections: Minimize/Maximize, Subject To, Bounds, General, Binary, End.
Section keywords are recognised anywhere in the token stream, so variable
names may not collide with them (the writer renames such names).
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..arith import NEG_INF, POS_INF, ExtRational, RationalParseError, parse_rational, render
from ..model import Instance, LinearConstraint, ModelError, Sense, Variable, build_instance
from .errors import FormatError
from .names import writable_names

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<nl>\n)
  | (?P<comment>\\[^\n]*)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+(?:\.\d*)?)?)
  | (?P<op><=|>=|=<|=>|<|>|=)
  | (?P<sign>[+-])
  | (?P<colon>:)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.\[\]]*)
    """,
    re.VERBOSE,
)

_OBJ_MIN = {"minimize", "minimise", "minimum", "min"}
_OBJ_MAX = {"maximize", "maximise", "maximum", "max"}
_SIMPLE_SECTIONS = {
    "st": "cons", "s.t.": "cons", "bounds": "bounds", "bound": "bounds",
    "general": "gen", "generals": "gen", "gen": "gen", "integer": "gen", "integers": "gen",
    "binary": "bin", "binaries": "bin", "bin": "bin", "end": "end",
}


class _Tok:
    __slots__ = ("kind", "text", "line")

    def __init__(self, kind, text, line):
        self.kind, self.text, self.line = kind, text, line

    def __repr__(self):
        return f"{self.kind}:{self.text}@{self.line}"


def _tokenize(text: str) -> list[_Tok]:
    toks, pos, line = [], 0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormatError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line))
        pos = m.end()
    return toks


def _split_sections(toks: list[_Tok]):
    sections: list[tuple[str, list[_Tok], int]] = []
    current, body, start = None, [], 1
    i = 0
    while i < len(toks):
        t = toks[i]
        key = None
        skip = 1
        if t.kind == "name":
            low = t.text.lower()
            nxt = toks[i + 1].text.lower() if i + 1 < len(toks) else ""
            if low in _OBJ_MIN:
                key = "min"
            elif low in _OBJ_MAX:
                key = "max"
            elif low == "subject" and nxt == "to" or low == "such" and nxt == "that":
                key, skip = "cons", 2
            elif low in _SIMPLE_SECTIONS:
                key = _SIMPLE_SECTIONS[low]
        if key is not None:
            if current is not None:
                sections.append((current, body, start))
            elif body:
                raise FormatError("text before the objective section", body[0].line)
            current, body, start = key, [], t.line
            i += skip
            if key == "end":
                break
            continue
        body.append(t)
        i += 1
    if current is not None and current != "end":
        sections.append((current, body, start))
    return sections


def _number(tok: _Tok) -> Fraction:
    try:
        return parse_rational(tok.text)
    except (RationalParseError, ZeroDivisionError) as exc:
        raise FormatError(str(exc), tok.line) from None


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks, self.i = toks, 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def done(self):
        return self.i >= len(self.toks)

    def label(self):
        t, c = self.peek(), self.peek(1)
        if t is not None and t.kind == "name" and c is not None and c.kind == "colon":
            self.i += 2
            return t.text
        return None

    def expression(self, stop_at_op: bool):
        """Parse ``[+-] [num] [name]`` terms; returns (coefs by name, constant)."""
        coefs: dict[str, Fraction] = {}
        order: list[str] = []
        const = Fraction(0)
        first = True
        while not self.done():
            t = self.peek()
            if t.kind == "op":
                break
            if not stop_at_op and t.kind == "name" and self.peek(1) is not None and self.peek(1).kind == "colon":
                break
            sign = 1
            seen_sign = False
            while not self.done() and self.peek().kind == "sign":
                seen_sign = True
                if self.take().text == "-":
                    sign = -sign
            t = self.peek()
            if t is None:
                raise FormatError("dangling sign", self.toks[-1].line)
            if not first and not seen_sign:
                raise FormatError(f"missing + or - before {t.text!r}", t.line)
            first = False
            coef = None
            if t.kind == "num":
                coef = _number(self.take())
                t = self.peek()
            if t is not None and t.kind == "name":
                name = self.take().text
                if name not in coefs:
                    coefs[name] = Fraction(0)
                    order.append(name)
                coefs[name] += sign * (coef if coef is not None else 1)
            elif coef is not None:
                const += sign * coef
            else:
                line = t.line if t is not None else self.toks[-1].line
                raise FormatError(f"unexpected token {t.text if t else 'EOF'!r}" if seen_sign or t else "empty term", line)
        return coefs, order, const

    def value(self) -> ExtRational:
        sign = 1
        while not self.done() and self.peek().kind == "sign":
            if self.take().text == "-":
                sign = -sign
        if self.done():
            raise FormatError("missing value", self.toks[-1].line)
        t = self.take()
        if t.kind == "num":
            return ExtRational.finite(sign * _number(t))
        if t.kind == "name" and t.text.lower() in ("inf", "infinity"):
            return POS_INF if sign > 0 else NEG_INF
        raise FormatError(f"expected a number, got {t.text!r}", t.line)


def read(text: str) -> Instance:
    toks = _tokenize(text)
    sections = _split_sections(toks)
    if not sections or sections[0][0] not in ("min", "max"):
        raise FormatError("missing Minimize/Maximize section")
    var_order: list[str] = []
    seen: set[str] = set()

    def declare(name: str):
        if name not in seen:
            seen.add(name)
            var_order.append(name)

    maximize = False
    obj_coefs: dict[str, Fraction] = {}
    obj_const = Fraction(0)
    cons_raw = []
    lower: dict[str, ExtRational] = {}
    upper: dict[str, ExtRational] = {}
    integral: set[str] = set()
    done_kinds = set()

    for kind, body, line in sections:
        if kind in done_kinds:
            raise FormatError(f"repeated section", line)
        done_kinds.add(kind)
        p = _Parser(body)
        if kind in ("min", "max"):
            if {"min", "max"} & (done_kinds - {kind}):
                raise FormatError("two objective sections", line)
            maximize = kind == "max"
            p.label()
            obj_coefs, order, obj_const = p.expression(stop_at_op=True)
            if not p.done():
                raise FormatError(f"unexpected {p.peek().text!r} in objective", p.peek().line)
            for nm in order:
                declare(nm)
        elif kind == "cons":
            names_seen = set()
            while not p.done():
                start = p.peek().line
                label = p.label()
                coefs, order, const = p.expression(stop_at_op=False)
                t = p.peek()
                if t is None or t.kind != "op":
                    raise FormatError("constraint without a sense", start)
                sense = Sense.parse(p.take().text)
                rhs = p.value()
                if not rhs.is_finite:
                    raise FormatError("infinite right-hand side", start)
                if label is None:
                    label = f"R{len(cons_raw)}"
                if label in names_seen:
                    raise FormatError(f"duplicate constraint name {label!r}", start)
                names_seen.add(label)
                for nm in order:
                    declare(nm)
                cons_raw.append((label, coefs, sense, rhs.value - const))
        elif kind == "bounds":
            _bounds(p, lower, upper, declare)
        elif kind in ("gen", "bin"):
            while not p.done():
                t = p.take()
                if t.kind != "name":
                    raise FormatError(f"expected a variable name, got {t.text!r}", t.line)
                declare(t.text)
                integral.add(t.text)
                if kind == "bin":
                    lower[t.text] = ExtRational.finite(0)
                    upper[t.text] = ExtRational.finite(1)

    index = {nm: j for j, nm in enumerate(var_order)}
    try:
        variables = [Variable(nm, lower.get(nm, ExtRational.finite(0)), upper.get(nm, POS_INF), nm in integral)
                     for nm in var_order]
        constraints = [LinearConstraint(lbl, {index[nm]: v for nm, v in coefs.items()}, sense, rhs)
                       for lbl, coefs, sense, rhs in cons_raw]
        objective = {index[nm]: v for nm, v in obj_coefs.items()}
        offset = obj_const
        if maximize:
            objective = {j: -v for j, v in objective.items()}
            offset = -offset
        return build_instance(variables, constraints, objective, offset=offset, maximize=maximize)
    except ModelError as exc:
        raise FormatError(str(exc)) from None


def _bounds(p: _Parser, lower, upper, declare):
    def is_var(t):
        return t is not None and t.kind == "name" and t.text.lower() not in ("inf", "infinity", "free")

    def apply(var, op, value, value_left):
        # value_left: "value op var"
        if op in ("=",):
            lower[var] = upper[var] = value
            return
        le = op in ("<=", "=<", "<")
        if value_left:
            (lower if le else upper)[var] = value
        else:
            (upper if le else lower)[var] = value

    while not p.done():
        t = p.peek()
        line = t.line
        if is_var(t):
            var = p.take().text
            declare(var)
            nxt = p.peek()
            if nxt is not None and nxt.kind == "name" and nxt.text.lower() == "free":
                p.take()
                lower[var], upper[var] = NEG_INF, POS_INF
                continue
            if nxt is None or nxt.kind != "op":
                raise FormatError(f"malformed bound for {var!r}", line)
            op = p.take().text
            apply(var, op, p.value(), value_left=False)
            continue
        value = p.value()
        t = p.peek()
        if t is None or t.kind != "op":
            raise FormatError("malformed bound", line)
        op = p.take().text
        if not is_var(p.peek()):
            raise FormatError("bound without a variable", line)
        var = p.take().text
        declare(var)
        apply(var, op, value, value_left=True)
        nxt = p.peek()
        if nxt is not None and nxt.kind == "op":
            op2 = p.take().text
            apply(var, op2, p.value(), value_left=False)


def _terms(coefs: dict[int, Fraction], names: list[str], const: Fraction = Fraction(0)) -> str:
    parts = []
    for j, c in sorted(coefs.items()):
        mag = abs(c)
        txt = names[j] if mag == 1 else f"{render(mag)} {names[j]}"
        if not parts:
            parts.append(txt if c >= 0 else f"- {txt}")
        else:
            parts.append(f"{'+' if c >= 0 else '-'} {txt}")
    if const != 0 or not parts:
        if not parts:
            parts.append(render(const))
        else:
            parts.append(f"{'+' if const > 0 else '-'} {render(abs(const))}")
    return " ".join(parts)


def _ext(v: ExtRational) -> str:
    if v.is_finite:
        return render(v.value)
    return "+inf" if v.is_pos_inf else "-inf"


def _first_appearance(instance: Instance) -> list[int]:
    order: dict[int, None] = {}
    for coefs in [instance.objective] + [c.coefficients for c in instance.constraints]:
        for j in sorted(coefs):
            order.setdefault(j)
    for j, var in enumerate(instance.variables):
        if not (var.lower == 0 and var.upper.is_pos_inf) or var.integral:
            order.setdefault(j)
    return list(order)


def write(instance: Instance) -> str:
    vnames = writable_names([v.name for v in instance.variables], "x")
    rnames = writable_names([c.name for c in instance.constraints], "c")
    sign = -1 if instance.maximize else 1
    obj = {j: sign * c for j, c in instance.objective.items()}
    if _first_appearance(instance) != list(range(instance.n)):
        # readers number columns by first appearance: pin the order with zero terms
        obj = {j: obj.get(j, Fraction(0)) for j in range(instance.n)}
    out = ["\\ exact LP file", "Maximize" if instance.maximize else "Minimize",
           f" obj: {_terms(obj, vnames, sign * instance.offset)}", "Subject To"]
    op = {Sense.GE: ">=", Sense.LE: "<=", Sense.EQ: "="}
    for rn, con in zip(rnames, instance.constraints):
        out.append(f" {rn}: {_terms(con.coefficients, vnames)} {op[con.sense]} {render(con.rhs)}")
    out.append("Bounds")
    for nm, var in zip(vnames, instance.variables):
        lo, up = var.lower, var.upper
        if lo == 0 and up.is_pos_inf:
            continue
        if lo.is_neg_inf and up.is_pos_inf:
            out.append(f" {nm} free")
        elif lo == up:
            out.append(f" {nm} = {render(lo.value)}")
        else:
            out.append(f" {_ext(lo)} <= {nm} <= {_ext(up)}")
    ints = [vnames[j] for j in instance.integral]
    if ints:
        out.append("General")
        out.extend(f" {nm}" for nm in ints)
    out.append("End")
    return "\n".join(out) + "\n"
