"""Exact arithmetic in Q(i) and in the field of rational functions Q(i)(z).

Coefficients are Gaussian rationals (pairs of :class:`fractions.Fraction`),
polynomials are tuples of coefficients in increasing degree, and a
:class:`RationalMap` is a reduced quotient with a monic denominator.  Floating
point only enters through evaluation.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational

import numpy as np

__all__ = ["QI", "Poly", "RationalMap", "parse_rational", "as_qi"]


class QI:
    """A Gaussian rational ``re + i*im`` with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # construction helpers
    @classmethod
    def coerce(cls, value) -> "QI":
        return as_qi(value)

    def __repr__(self):
        return f"QI({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*i)"

    def __hash__(self):
        return hash((self.re, self.im))

    def __eq__(self, other):
        try:
            other = as_qi(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __add__(self, other):
        other = _maybe_qi(other)
        if other is None:
            return NotImplemented
        return QI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        other = _maybe_qi(other)
        if other is None:
            return NotImplemented
        return QI(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return as_qi(other) - self

    def __mul__(self, other):
        other = _maybe_qi(other)
        if other is None:
            return NotImplemented
        return QI(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conjugate(self):
        return QI(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def inverse(self):
        d = self.norm2()
        if d == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return QI(self.re / d, -self.im / d)

    def __truediv__(self, other):
        other = _maybe_qi(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return as_qi(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out, base = QI(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def to_pair_strings(self):
        return [_frac_str(self.re), _frac_str(self.im)]


def _maybe_qi(value):
    if isinstance(value, (Poly, RationalMap)):
        return None
    try:
        return as_qi(value)
    except TypeError:
        return None


def _frac_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _parse_fraction(text) -> Fraction:
    if isinstance(text, str):
        return Fraction(text.strip())
    if isinstance(text, float):
        return Fraction(text)
    return Fraction(text)


def as_qi(value) -> QI:
    """Coerce ints, Fractions, exact-valued complex numbers, pairs and strings."""
    if isinstance(value, QI):
        return value
    if isinstance(value, (int, Rational)):
        return QI(value, 0)
    if isinstance(value, float):
        return QI(Fraction(value), 0)
    if isinstance(value, complex):
        return QI(Fraction(value.real), Fraction(value.imag))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return QI(_parse_fraction(value[0]), _parse_fraction(value[1]))
    if isinstance(value, str):
        r = parse_rational(value, allow_variable=False)
        return r.num.coeffs[0] if r.num.coeffs else QI()
    if isinstance(value, np.generic):
        return as_qi(value.item())
    raise TypeError(f"cannot interpret {value!r} as a Gaussian rational")


class Poly:
    """Polynomial over Q(i); ``coeffs[k]`` multiplies ``z**k``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [as_qi(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def constant(cls, c):
        return cls([c])

    @classmethod
    def monomial(cls, k: int, c=1):
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # zero polynomial has degree -1

    def is_zero(self):
        return not self.coeffs

    def lead(self) -> QI:
        return self.coeffs[-1]

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Poly({[str(c) for c in self.coeffs]})"

    def __add__(self, other):
        other = other if isinstance(other, Poly) else Poly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (QI(),) * (n - len(self.coeffs))
        b = other.coeffs + (QI(),) * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other):
        other = other if isinstance(other, Poly) else Poly([other])
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = other if isinstance(other, Poly) else Poly([other])
        if self.is_zero() or other.is_zero():
            return Poly()
        out = [QI()] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out, base = Poly([1]), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c):
        c = as_qi(c)
        return Poly([c * x for x in self.coeffs])

    def monic(self):
        if self.is_zero():
            raise ZeroDivisionError("zero polynomial has no monic form")
        return self.scale(self.lead().inverse())

    def divmod(self, other: "Poly"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [QI()] * max(len(rem) - len(other.coeffs) + 1, 0)
        inv_lead = other.lead().inverse()
        dq = other.degree
        while len(rem) - 1 >= dq and rem:
            k = len(rem) - 1 - dq
            c = rem[-1] * inv_lead
            q[k] = c
            for j, b in enumerate(other.coeffs):
                rem[k + j] = rem[k + j] - c * b
            rem.pop()
            while rem and not rem[-1]:
                rem.pop()
        return Poly(q), Poly(rem)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def derivative(self):
        return Poly([c * k for k, c in enumerate(self.coeffs)][1:])

    def __call__(self, z):
        """Horner evaluation at complex (array) points in floating point."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in reversed(self.coeffs):
            out = out * z + complex(c)
        return out

    def eval_exact(self, z) -> QI:
        z = as_qi(z)
        out = QI()
        for c in reversed(self.coeffs):
            out = out * z + c
        return out

    def roots(self) -> np.ndarray:
        if self.degree < 1:
            return np.zeros(0, dtype=complex)
        return np.roots([complex(c) for c in reversed(self.coeffs)])

    def multiplicity_at(self, point) -> int:
        """Exact order of vanishing at a Gaussian-rational point."""
        if self.is_zero():
            raise ValueError("zero polynomial vanishes to infinite order")
        lin = Poly([-as_qi(point), 1])
        p, k = self, 0
        while True:
            q, r = p.divmod(lin)
            if not r.is_zero():
                return k
            p, k = q, k + 1

    def strip_factor(self, point):
        """Remove every factor ``(z - point)``; returns ``(remaining, order)``."""
        lin = Poly([-as_qi(point), 1])
        p, k = self, 0
        while p.degree >= 1:
            q, r = p.divmod(lin)
            if not r.is_zero():
                break
            p, k = q, k + 1
        return p, k


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor by the Euclidean algorithm."""
    while not b.is_zero():
        a, b = b, a % b
    if a.is_zero():
        return Poly([1])
    return a.monic()


class RationalMap:
    """Reduced quotient ``num/den`` of polynomials over Q(i), ``den`` monic."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, Poly) else Poly([num])
        den = Poly([1]) if den is None else (den if isinstance(den, Poly) else Poly([den]))
        if den.is_zero():
            raise ZeroDivisionError("rational map with zero denominator")
        if num.is_zero():
            self.num, self.den = Poly(), Poly([1])
            return
        g = poly_gcd(num, den)
        num, den = num // g, den // g
        lead = den.lead()
        self.num = num.scale(lead.inverse())
        self.den = den.monic()

    @classmethod
    def const(cls, c):
        return cls(Poly([c]))

    @classmethod
    def z(cls):
        return cls(Poly([0, 1]))

    @classmethod
    def parse(cls, text: str) -> "RationalMap":
        return parse_rational(text)

    def is_zero(self):
        return self.num.is_zero()

    def is_constant(self):
        return self.num.degree <= 0 and self.den.degree == 0

    def __eq__(self, other):
        if not isinstance(other, RationalMap):
            other = RationalMap.const(other)
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __add__(self, other):
        other = other if isinstance(other, RationalMap) else RationalMap.const(other)
        return RationalMap(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalMap(-self.num, self.den)

    def __sub__(self, other):
        other = other if isinstance(other, RationalMap) else RationalMap.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = other if isinstance(other, RationalMap) else RationalMap.const(other)
        return RationalMap(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero rational map")
        return RationalMap(self.den, self.num)

    def __truediv__(self, other):
        other = other if isinstance(other, RationalMap) else RationalMap.const(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return RationalMap.const(other) * self.inverse() if not isinstance(other, RationalMap) \
            else other * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RationalMap(self.num ** k, self.den ** k)

    def derivative(self):
        return RationalMap(self.num.derivative() * self.den - self.num * self.den.derivative(),
                           self.den * self.den)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.num(z) / self.den(z)

    def zeros(self) -> np.ndarray:
        return self.num.roots()

    def poles(self) -> np.ndarray:
        return self.den.roots()

    def order_at(self, point) -> int:
        """Exact order at a point: positive for zeros, negative for poles."""
        if self.is_zero():
            raise ValueError("zero map has no finite order")
        return self.num.multiplicity_at(point) - self.den.multiplicity_at(point)

    def poles_within(self, points) -> bool:
        """True iff every pole lies in ``points`` (checked exactly)."""
        den = self.den
        for p in points:
            den, _ = den.strip_factor(p)
        return den.degree == 0

    def __repr__(self):
        return f"RationalMap({self})"

    def __str__(self):
        n = _poly_str(self.num)
        if self.den.degree == 0:
            return n
        return f"({n})/({_poly_str(self.den)})"


def _poly_str(p: Poly) -> str:
    if p.is_zero():
        return "0"
    terms = []
    for k, c in enumerate(p.coeffs):
        if not c:
            continue
        cs = str(c)
        if k == 0:
            terms.append(cs)
        elif c == 1:
            terms.append("z" if k == 1 else f"z^{k}")
        else:
            terms.append(f"{cs}*z" if k == 1 else f"{cs}*z^{k}")
    return " + ".join(terms)


# ---------------------------------------------------------------------------
# parsing "(1-z^2)/z^2", "i(z-1)^2/z^4", "1 - z^-4", ...

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|(\*\*|[-+*/^()])|([A-Za-zζ]+))")


def _tokenize(text: str):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"unexpected character {text[pos]!r} at offset {pos}")
        num, op, name = m.groups()
        if num is not None:
            out.append(("num", num))
        elif op is not None:
            out.append(("op", "^" if op == "**" else op))
        else:
            # split juxtaposed letters such as "iz" into i * z
            for ch in name:
                if ch not in ("z", "i", "ζ"):
                    raise ValueError(f"unknown symbol {name!r}")
                out.append(("sym", "z" if ch == "ζ" else ch))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, allow_variable):
        self.toks = tokens
        self.i = 0
        self.allow_variable = allow_variable

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t != ("op", op):
            raise ValueError(f"expected {op!r}, found {t[1]!r}")

    def parse(self):
        if not self.toks:
            raise ValueError("empty expression")
        out = self.expr()
        if self.i != len(self.toks):
            raise ValueError(f"trailing input at token {self.peek()[1]!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def _starts_atom(self):
        kind, val = self.peek()
        return kind in ("num", "sym") or (kind, val) == ("op", "(")

    def term(self):
        out = self.unary()
        while True:
            kind, val = self.peek()
            if (kind, val) == ("op", "*"):
                self.take()
                out = out * self.unary()
            elif (kind, val) == ("op", "/"):
                self.take()
                rhs = self.unary()
                if rhs.is_zero():
                    raise ZeroDivisionError("division by zero")
                out = out / rhs
            elif self._starts_atom():
                out = out * self.power()
            else:
                return out

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def _int_exponent(self):
        sign = 1
        while self.peek() in (("op", "-"), ("op", "+")):
            if self.take()[1] == "-":
                sign = -sign
        kind, val = self.take()
        if kind == "num" and "." not in val:
            return sign * int(val)
        if (kind, val) == ("op", "("):
            k = self._int_exponent()
            self.expect(")")
            return sign * k
        raise ValueError("exponents must be integers")

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            k = self._int_exponent()
            if k < 0 and base.is_zero():
                raise ZeroDivisionError("zero to a negative power")
            base = base ** k
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return RationalMap.const(Fraction(val))
        if kind == "sym":
            if val == "i":
                return RationalMap.const(QI(0, 1))
            if not self.allow_variable:
                raise ValueError("variable not allowed in a constant")
            return RationalMap.z()
        if (kind, val) == ("op", "("):
            out = self.expr()
            self.expect(")")
            return out
        raise ValueError(f"unexpected token {val!r}")


def parse_rational(text: str, allow_variable: bool = True) -> RationalMap:
    """Parse an expression in ``z`` over Q(i) into a reduced RationalMap.

    Raises ValueError on malformed input and ZeroDivisionError on a division
    by the zero function.
    """
    return _Parser(_tokenize(text), allow_variable).parse()
