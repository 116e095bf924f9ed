"""Exact scalars of the form  sum_k q_k * tau**k  with tau = 2*pi kept symbolic."""

from __future__ import annotations

import math
import re
from fractions import Fraction

import flint

TAU = 2 * math.pi

_TERM_RE = re.compile(r"^\s*([+-]?\s*\d+(?:/\d+)?)\s*(?:·\(2π\)\^(-?\d+))?\s*$")


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, flint.fmpz):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a string or Fraction")
    return Fraction(x)


def to_fmpq(x) -> flint.fmpq:
    if isinstance(x, flint.fmpq):
        return x
    f = to_fraction(x)
    return flint.fmpq(f.numerator, f.denominator)


class Scalar:
    """Finite sum of rational multiples of powers of tau = 2*pi.

    tau is treated as transcendental, so two scalars are equal only when
    every coefficient agrees.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs=None):
        c = {}
        if coeffs:
            for k, v in dict(coeffs).items():
                v = to_fraction(v)
                if v:
                    c[int(k)] = v
        self._c = c

    @classmethod
    def rational(cls, q) -> "Scalar":
        return cls({0: q})

    @classmethod
    def tau(cls, power: int = 1, q=1) -> "Scalar":
        return cls({power: q})

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self._c)

    def __bool__(self):
        return bool(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            return other
        return Scalar.rational(other)

    def __add__(self, other):
        other = self._coerce(other)
        c = dict(self._c)
        for k, v in other._c.items():
            c[k] = c.get(k, 0) + v
        return Scalar(c)

    __radd__ = __add__

    def __neg__(self):
        return Scalar({k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        c: dict[int, Fraction] = {}
        for k1, v1 in self._c.items():
            for k2, v2 in other._c.items():
                c[k1 + k2] = c.get(k1 + k2, 0) + v1 * v2
        return Scalar(c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # only division by a single tau-monomial is exact in this tower
        other = self._coerce(other)
        if len(other._c) != 1:
            raise ZeroDivisionError("can only divide by a nonzero q*tau^k")
        (k, v), = other._c.items()
        return Scalar({j - k: w / v for j, w in self._c.items()})

    def __eq__(self, other):
        try:
            other = self._coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(tuple(sorted(self._c.items())))

    def __abs__(self):
        return abs(float(self))

    def __float__(self):
        return float(sum(float(v) * TAU**k for k, v in self._c.items()))

    def __str__(self):
        if not self._c:
            return "0"
        parts = []
        for k in sorted(self._c):
            v = self._c[k]
            parts.append(str(v) if k == 0 else f"{v}·(2π)^{k}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Scalar({str(self)!r})"

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        text = text.strip()
        if text == "0":
            return cls()
        c: dict[int, Fraction] = {}
        for part in text.split(" + "):
            m = _TERM_RE.match(part)
            if not m:
                raise ValueError(f"cannot parse scalar term {part!r}")
            k = int(m.group(2) or 0)
            c[k] = c.get(k, 0) + Fraction(m.group(1).replace(" ", ""))
        return cls(c)
