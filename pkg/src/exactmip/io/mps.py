"""Free-format MPS subset: NAME, OBJSENSE, ROWS, COLUMNS (with integer markers),
RHS, BOUNDS, ENDATA.  All numbers are read as exact rationals."""

from __future__ import annotations

from fractions import Fraction

from ..arith import NEG_INF, POS_INF, ExtRational, RationalParseError, parse_rational, render
from ..model import Instance, LinearConstraint, ModelError, Sense, Variable, build_instance
from .errors import FormatError
from .names import writable_names

_SENSES = {"G": Sense.GE, "L": Sense.LE, "E": Sense.EQ}
_VALUED = {"LO", "UP", "FX", "UI", "LI"}
_BARE = {"FR", "MI", "PL", "BV"}


def _num(tok: str, lineno: int) -> Fraction:
    try:
        return parse_rational(tok)
    except (RationalParseError, ZeroDivisionError) as exc:
        raise FormatError(str(exc), lineno) from None


class _Column:
    __slots__ = ("coefs", "integral", "lower", "upper")

    def __init__(self, integral: bool):
        self.coefs: dict[str, Fraction] = {}
        self.integral = integral
        self.lower: ExtRational = ExtRational.finite(0)
        self.upper: ExtRational = POS_INF


def read(text: str) -> Instance:
    name = "problem"
    section = None
    rows: dict[str, str] = {}
    obj_row = None
    columns: dict[str, _Column] = {}
    rhs: dict[str, Fraction] = {}
    maximize = False
    in_int = False
    ended = False
    saw_rows = False

    for lineno, raw in enumerate(text.split("\n"), 1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        tokens = raw.split()
        if not raw[0].isspace():
            head = tokens[0].upper()
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else name
                section = None
            elif head in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                section = head
                saw_rows = saw_rows or head == "ROWS"
                if head == "COLUMNS" and not rows:
                    raise FormatError("empty ROWS section", lineno)
            elif head == "OBJSENSE":
                section = "OBJSENSE"
                if len(tokens) > 1:
                    maximize = _objsense(tokens[1], lineno)
                    section = None
            elif head == "RANGES":
                raise FormatError("RANGES section is not supported", lineno)
            elif head == "ENDATA":
                ended = True
                break
            else:
                raise FormatError(f"unknown section {tokens[0]!r}", lineno)
            continue

        if section == "OBJSENSE":
            maximize = _objsense(tokens[0], lineno)
        elif section == "ROWS":
            if len(tokens) != 2:
                raise FormatError("ROWS entry needs a type and a name", lineno)
            kind, rname = tokens[0].upper(), tokens[1]
            if rname in rows:
                raise FormatError(f"duplicate row {rname!r}", lineno)
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
            elif kind not in _SENSES:
                raise FormatError(f"unknown row type {tokens[0]!r}", lineno)
            rows[rname] = kind
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'\"").upper() == "MARKER":
                marker = tokens[2].strip("'\"").upper()
                if marker == "INTORG":
                    in_int = True
                elif marker == "INTEND":
                    in_int = False
                else:
                    raise FormatError(f"unknown marker {tokens[2]!r}", lineno)
                continue
            if len(tokens) not in (3, 5):
                raise FormatError("COLUMNS entry needs column, row, value pairs", lineno)
            col = columns.get(tokens[0])
            if col is None:
                col = columns[tokens[0]] = _Column(in_int)
            for k in range(1, len(tokens), 2):
                rname = tokens[k]
                if rname not in rows:
                    raise FormatError(f"unknown row {rname!r}", lineno)
                if rname in col.coefs:
                    raise FormatError(f"duplicate entry for ({tokens[0]}, {rname})", lineno)
                col.coefs[rname] = _num(tokens[k + 1], lineno)
        elif section == "RHS":
            pairs = tokens[1:] if len(tokens) % 2 == 1 else tokens
            if not pairs or len(pairs) % 2:
                raise FormatError("RHS entry needs row, value pairs", lineno)
            for k in range(0, len(pairs), 2):
                rname = pairs[k]
                if rname not in rows:
                    raise FormatError(f"unknown row {rname!r}", lineno)
                rhs[rname] = _num(pairs[k + 1], lineno)
        elif section == "BOUNDS":
            _bound(tokens, columns, lineno)
        else:
            raise FormatError("data line outside of a section", lineno)

    if not saw_rows or not rows:
        raise FormatError("empty ROWS section")
    if not ended:
        raise FormatError("missing ENDATA")

    col_index = {c: j for j, c in enumerate(columns)}
    variables = []
    try:
        for cname, col in columns.items():
            variables.append(Variable(cname, col.lower, col.upper, col.integral))
        constraints = []
        for rname, kind in rows.items():
            if kind == "N":
                continue
            coefs = {col_index[c]: col.coefs[rname] for c, col in columns.items() if rname in col.coefs}
            constraints.append(LinearConstraint(rname, coefs, _SENSES[kind], rhs.get(rname, Fraction(0))))
        objective = {}
        offset = Fraction(0)
        if obj_row is not None:
            objective = {col_index[c]: col.coefs[obj_row] for c, col in columns.items() if obj_row in col.coefs}
            offset = -rhs.get(obj_row, Fraction(0))
        if maximize:
            objective = {j: -v for j, v in objective.items()}
            offset = -offset
        return build_instance(variables, constraints, objective, offset=offset,
                              maximize=maximize, name=name)
    except ModelError as exc:
        raise FormatError(str(exc)) from None


def _objsense(tok: str, lineno: int) -> bool:
    t = tok.upper()
    if t in ("MAX", "MAXIMIZE", "MAXIMISE"):
        return True
    if t in ("MIN", "MINIMIZE", "MINIMISE"):
        return False
    raise FormatError(f"unknown objective sense {tok!r}", lineno)


def _bound(tokens, columns, lineno):
    kind = tokens[0].upper()
    if kind in _VALUED:
        if len(tokens) == 4:
            var, value = tokens[2], tokens[3]
        elif len(tokens) == 3:
            var, value = tokens[1], tokens[2]
        else:
            raise FormatError(f"malformed {kind} bound", lineno)
    elif kind in _BARE:
        if len(tokens) in (3, 4):
            var, value = tokens[2], None
        elif len(tokens) == 2:
            var, value = tokens[1], None
        else:
            raise FormatError(f"malformed {kind} bound", lineno)
    else:
        raise FormatError(f"unknown bound type {tokens[0]!r}", lineno)
    col = columns.get(var)
    if col is None:
        raise FormatError(f"bound on unknown column {var!r}", lineno)
    v = ExtRational.finite(_num(value, lineno)) if value is not None else None
    if kind == "LO":
        col.lower = v
    elif kind == "UP":
        col.upper = v
    elif kind == "FX":
        col.lower = col.upper = v
    elif kind == "FR":
        col.lower, col.upper = NEG_INF, POS_INF
    elif kind == "MI":
        col.lower = NEG_INF
    elif kind == "PL":
        col.upper = POS_INF
    elif kind == "BV":
        col.integral = True
        col.lower, col.upper = ExtRational.finite(0), ExtRational.finite(1)
    elif kind == "UI":
        col.integral, col.upper = True, v
    elif kind == "LI":
        col.integral, col.lower = True, v


def write(instance: Instance) -> str:
    vnames = writable_names([v.name for v in instance.variables], "x")
    rnames = writable_names([c.name for c in instance.constraints], "c")
    obj = "obj"
    while obj in rnames:
        obj += "_"
    sign = -1 if instance.maximize else 1
    out = [f"NAME {instance.name if ' ' not in instance.name and instance.name else 'problem'}"]
    if instance.maximize:
        out += ["OBJSENSE", "    MAX"]
    out += ["ROWS", f" N  {obj}"]
    letter = {Sense.GE: "G", Sense.LE: "L", Sense.EQ: "E"}
    for rn, con in zip(rnames, instance.constraints):
        out.append(f" {letter[con.sense]}  {rn}")
    out.append("COLUMNS")
    entries: list[list[tuple[str, Fraction]]] = [[] for _ in instance.variables]
    for j, c in instance.objective.items():
        entries[j].append((obj, sign * c))
    for rn, con in zip(rnames, instance.constraints):
        for j, a in con.coefficients.items():
            entries[j].append((rn, a))
    in_int = False
    markers = 0
    for j, var in enumerate(instance.variables):
        if var.integral != in_int:
            tag = "'INTORG'" if var.integral else "'INTEND'"
            out.append(f"    M{markers} 'MARKER' {tag}")
            markers += 1
            in_int = var.integral
        items = entries[j] or [(obj, Fraction(0))]
        for rn, val in items:
            out.append(f"    {vnames[j]} {rn} {render(val)}")
    if in_int:
        out.append(f"    M{markers} 'MARKER' 'INTEND'")
    out.append("RHS")
    for rn, con in zip(rnames, instance.constraints):
        if con.rhs != 0:
            out.append(f"    RHS {rn} {render(con.rhs)}")
    if instance.offset != 0:
        out.append(f"    RHS {obj} {render(-sign * instance.offset)}")
    out.append("BOUNDS")
    for name, var in zip(vnames, instance.variables):
        lo, up = var.lower, var.upper
        if not lo.is_finite and not up.is_finite:
            out.append(f" FR BND {name}")
            continue
        if lo.is_finite and up.is_finite and lo == up:
            out.append(f" FX BND {name} {render(lo.value)}")
            continue
        if not lo.is_finite:
            out.append(f" MI BND {name}")
        elif lo.value != 0:
            out.append(f" LO BND {name} {render(lo.value)}")
        if up.is_finite:
            out.append(f" UP BND {name} {render(up.value)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"
