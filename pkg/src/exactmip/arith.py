"""Exact rational numbers, extended values and literal parsing.

Rationals are plain :class:`fractions.Fraction` objects, which are always kept
in lowest terms with a positive denominator.  :class:`ExtRational` adds the two
infinities needed for variable domains.
"""

from __future__ import annotations

import math
import operator
from fractions import Fraction
from typing import Union

Rational = Fraction
Number = Union[int, Fraction]

__all__ = [
    "Rational",
    "ExtRational",
    "NEG_INF",
    "POS_INF",
    "RationalParseError",
    "ExtArithmeticError",
    "parse_rational",
    "parse_ext",
    "render",
    "render_ext",
    "floor_ceil",
    "arith",
    "as_rational",
    "ext",
]


class RationalParseError(ValueError):
    """Malformed rational literal; ``position`` is the offending offset."""

    def __init__(self, text: str, position: int, message: str = "malformed rational literal"):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


class ExtArithmeticError(ArithmeticError):
    """Ambiguous arithmetic on infinite values, e.g. +inf + -inf or 0 * inf."""


def _scan_digits(text: str, i: int) -> int:
    while i < len(text) and text[i].isdigit() and text[i].isascii():
        i += 1
    return i


def parse_rational(text: str) -> Fraction:
    """Parse ``p``, ``p/q``, ``-3.75`` or ``1e-2`` style literals exactly.

    No binary floating point is involved: decimals and exponents expand to the
    exact fraction they denote.
    """
    n = len(text)
    i = 0
    if i < n and text[i] in "+-":
        i += 1
    start_mantissa = i
    j = _scan_digits(text, i)
    int_digits = j - i
    i = j
    frac_digits = 0
    if i < n and text[i] == ".":
        j = _scan_digits(text, i + 1)
        frac_digits = j - i - 1
        i = j
        if int_digits == 0 and frac_digits == 0:
            raise RationalParseError(text, i)
        decimal = True
    else:
        decimal = False
        if int_digits == 0:
            raise RationalParseError(text, start_mantissa)
    if i < n and text[i] in "eE":
        k = i + 1
        if k < n and text[k] in "+-":
            k += 1
        j = _scan_digits(text, k)
        if j == k:
            raise RationalParseError(text, k)
        i = j
        decimal = True
    if i < n and text[i] == "/":
        if decimal:
            raise RationalParseError(text, i)
        j = _scan_digits(text, i + 1)
        if j == i + 1:
            raise RationalParseError(text, i + 1)
        if int(text[i + 1 : j]) == 0:
            raise ZeroDivisionError(f"zero denominator in {text!r}")
        i = j
    if i != n:
        raise RationalParseError(text, i)
    return Fraction(text)


def parse_ext(text: str) -> "ExtRational":
    """Like :func:`parse_rational` but also accepts ``inf``/``+inf``/``-inf``."""
    low = text.lower()
    if low in ("inf", "+inf", "infinity", "+infinity"):
        return POS_INF
    if low in ("-inf", "-infinity"):
        return NEG_INF
    return ExtRational.finite(parse_rational(text))


def render(value: Number) -> str:
    """Canonical text: ``p`` for integers, ``p/q`` otherwise."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def floor_ceil(value: Number, mode: str) -> int:
    if mode == "floor":
        return math.floor(value)
    if mode == "ceil":
        return math.ceil(value)
    raise ValueError(f"unknown rounding mode {mode!r}")


_OPS = {
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
    "div": operator.truediv,
}


def arith(a: Number, b: Number, op: str):
    """Apply ``op`` exactly; ``cmp`` returns -1, 0 or 1."""
    a, b = Fraction(a), Fraction(b)
    if op == "cmp":
        return (a > b) - (a < b)
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(a, b)


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and literal strings; floats are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, ExtRational):
        if not value.is_finite:
            raise ValueError(f"infinite value {value} where a rational is required")
        return value.value
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


_FINITE, _NEG, _POS = 0, -1, 1


class ExtRational:
    """A rational or one of the two infinities.

    Ordering is total (``-inf < finite < +inf``).  Arithmetic is limited to the
    unambiguous cases; everything else raises :class:`ExtArithmeticError`.
    """

    __slots__ = ("tag", "value")

    def __init__(self, tag: int, value: Fraction | None = None):
        if tag == _FINITE:
            if value is None:
                raise ValueError("finite ExtRational needs a value")
            value = as_rational(value)
        elif tag in (_NEG, _POS):
            value = None
        else:
            raise ValueError(f"bad tag {tag}")
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("ExtRational is immutable")

    @classmethod
    def finite(cls, value) -> "ExtRational":
        return cls(_FINITE, as_rational(value))

    @property
    def is_finite(self) -> bool:
        return self.tag == _FINITE

    @property
    def is_pos_inf(self) -> bool:
        return self.tag == _POS

    @property
    def is_neg_inf(self) -> bool:
        return self.tag == _NEG

    def finite_or_none(self) -> Fraction | None:
        return self.value

    def _key(self):
        return (self.tag, self.value if self.tag == _FINITE else 0)

    @staticmethod
    def _coerce(other) -> "ExtRational | None":
        if isinstance(other, ExtRational):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return ExtRational(_FINITE, Fraction(other))
        return None

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.tag != o.tag:
            return -1 if self.tag < o.tag else 1
        if self.tag != _FINITE:
            return 0
        return (self.value > o.value) - (self.value < o.value)

    def __eq__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c >= 0

    def __hash__(self):
        if self.tag == _FINITE:
            return hash(self.value)
        return hash(("ExtRational", self.tag))

    def __neg__(self) -> "ExtRational":
        if self.tag == _FINITE:
            return ExtRational(_FINITE, -self.value)
        return ExtRational(-self.tag)

    def __add__(self, other) -> "ExtRational":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.tag == _FINITE and o.tag == _FINITE:
            return ExtRational(_FINITE, self.value + o.value)
        if self.tag != _FINITE and o.tag != _FINITE and self.tag != o.tag:
            raise ExtArithmeticError("+inf and -inf do not combine")
        return ExtRational(self.tag if self.tag != _FINITE else o.tag)

    __radd__ = __add__

    def __sub__(self, other) -> "ExtRational":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "ExtRational":
        return (-self) + other

    def __mul__(self, other) -> "ExtRational":
        if isinstance(other, ExtRational):
            if not other.is_finite:
                if not self.is_finite:
                    return ExtRational(self.tag * other.tag)
                return other * self.value
            other = other.value
        if isinstance(other, bool) or not isinstance(other, (int, Fraction)):
            return NotImplemented
        if self.tag == _FINITE:
            return ExtRational(_FINITE, self.value * other)
        if other == 0:
            raise ExtArithmeticError("0 * infinity is undefined")
        return ExtRational(self.tag if other > 0 else -self.tag)

    __rmul__ = __mul__

    def __repr__(self):
        return f"ExtRational({render_ext(self)})"

    def __str__(self):
        return render_ext(self)


NEG_INF = ExtRational(_NEG)
POS_INF = ExtRational(_POS)


def ext(value) -> ExtRational:
    """Coerce a number, literal string, ``None``-free value to ExtRational."""
    if isinstance(value, ExtRational):
        return value
    if isinstance(value, str):
        return parse_ext(value)
    if isinstance(value, float):
        if value == math.inf:
            return POS_INF
        if value == -math.inf:
            return NEG_INF
        raise TypeError("finite floats are not accepted; pass a Fraction or a literal")
    return ExtRational.finite(value)


def render_ext(value: ExtRational) -> str:
    if value.tag == _POS:
        return "inf"
    if value.tag == _NEG:
        return "-inf"
    return render(value.value)
