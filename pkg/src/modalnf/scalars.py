"""Exact complex-rational scalars.

Real parts and imaginary parts are :class:`fractions.Fraction`, so every field
operation is exact. Floats are refused at construction; they only appear when a
value is converted with ``complex()``.
"""
from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational

__all__ = ["CRational", "Fraction", "parse_rational", "parse_crational", "as_crational"]

_RAT = r"[+-]?\d+(?:/\d+)?"
_RAT_RE = re.compile(rf"^\s*({_RAT})\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse ``"n"`` or ``"n/d"`` exactly. Decimal points are rejected."""
    m = _RAT_RE.match(text)
    if not m:
        raise ValueError(f"not an exact rational literal: {text!r}")
    return Fraction(m.group(1))


def parse_crational(text: str) -> "CRational":
    """Parse ``"a"``, ``"bi"``, ``"a+bi"`` or ``"a-b/ci"`` with rational a, b."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty complex literal")
    if not s.endswith("i"):
        return CRational(parse_rational(s), 0)
    body = s[:-1].rstrip("*")
    cut = max(body.rfind("+"), body.rfind("-"))
    if cut > 0:
        re_tok, im_tok = body[:cut], body[cut:]
    else:
        re_tok, im_tok = "0", body
    if im_tok in ("", "+"):
        im_tok = "1"
    elif im_tok == "-":
        im_tok = "-1"
    try:
        return CRational(parse_rational(re_tok), parse_rational(im_tok))
    except ValueError:
        raise ValueError(f"not an exact complex literal: {text!r}") from None


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"exact rational required, got {type(x).__name__}")


class CRational:
    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _exact(re)
        self.im = _exact(im)

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "CRational":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_real(self) -> bool:
        return not self.im

    def __eq__(self, other):
        if isinstance(other, CRational):
            return self.re == other.re and self.im == other.im
        try:
            o = as_crational(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        o = as_crational(other)
        return CRational._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = as_crational(other)
        return CRational._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return as_crational(other) - self

    def __neg__(self):
        return CRational._raw(-self.re, -self.im)

    def __mul__(self, other):
        o = as_crational(other)
        if not self.im and not o.im:
            return CRational._raw(self.re * o.re, Fraction(0))
        return CRational._raw(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_crational(other)
        if not o:
            raise ZeroDivisionError("division by exact zero")
        if not o.im:
            return CRational._raw(self.re / o.re, self.im / o.re)
        den = o.re * o.re + o.im * o.im
        return CRational._raw(
            (self.re * o.re + self.im * o.im) / den, (self.im * o.re - self.re * o.im) / den
        )

    def __rtruediv__(self, other):
        return as_crational(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = CRational._raw(Fraction(1), Fraction(0))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self):
        return CRational._raw(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"CRational({self})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


ZERO = CRational(0)
ONE = CRational(1)


def as_crational(x) -> CRational:
    if isinstance(x, CRational):
        return x
    if isinstance(x, complex):
        raise TypeError("floating complex values are not exact")
    if isinstance(x, str):
        return parse_crational(x)
    return CRational._raw(_exact(x), Fraction(0))
