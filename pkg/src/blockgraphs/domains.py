"""Coefficient domains for truncated power series.

Three domains are supported:

* ``ExactRational`` -- `fractions.Fraction` coefficients, every ring
  operation exact;
* ``ExactRationalPolyU`` -- polynomials in a formal weight variable ``u``
  with exact rational coefficients (:class:`UPoly`);
* ``BigFloat(precision_bits)`` -- correctly rounded ``gmpy2.mpfr``
  coefficients at a fixed working precision (default 192 bits).

Series code manipulates coefficients only through ``+``, ``-``, ``*`` and
division by a Python int, plus the small hooks on :class:`NumericDomain`
(coercion, zero/one, precision context).
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable

import gmpy2
import mpmath

__all__ = [
    "UPoly",
    "NumericDomain",
    "RATIONAL",
    "RATIONAL_POLY_U",
    "bigfloat",
    "mpf_to_mpfr",
]


def _trim(coeffs: tuple) -> tuple:
    n = len(coeffs)
    while n > 0 and coeffs[n - 1] == 0:
        n -= 1
    return coeffs[:n]


@dataclass(frozen=True)
class UPoly:
    """Polynomial in the formal weight u with exact rational coefficients.

    ``coeffs[k]`` is the coefficient of ``u**k``; trailing zeros are trimmed
    so equality is structural.
    """

    coeffs: tuple

    @staticmethod
    def of(value) -> "UPoly":
        if isinstance(value, UPoly):
            return value
        return UPoly(_trim((Fraction(value),)))

    @staticmethod
    def u(power: int = 1, coeff=1) -> "UPoly":
        return UPoly(_trim((Fraction(0),) * power + (Fraction(coeff),)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __add__(self, other):
        other = UPoly.of(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return UPoly(_trim(tuple(out)))

    __radd__ = __add__

    def __neg__(self):
        return UPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-UPoly.of(other))

    def __rsub__(self, other):
        return UPoly.of(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return UPoly(())
            return UPoly(tuple(c * other for c in self.coeffs))
        other = UPoly.of(other)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return UPoly(())
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca:
                for j, cb in enumerate(b):
                    out[i + j] += ca * cb
        return UPoly(_trim(tuple(out)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return UPoly(tuple(c / other for c in self.coeffs))
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, UPoly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self == UPoly.of(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, u_value):
        acc = u_value * 0
        for c in reversed(self.coeffs):
            acc = acc * u_value + c
        return acc

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if k == 0:
                parts.append(str(c))
            elif k == 1:
                parts.append("u" if c == 1 else f"{c}*u")
            else:
                parts.append(f"u^{k}" if c == 1 else f"{c}*u^{k}")
        return " + ".join(parts)


class NumericDomain:
    """One of the three coefficient domains.

    ``kind`` is ``"rational"``, ``"rational_poly_u"`` or ``"bigfloat"``;
    big-float domains carry their working precision in bits.
    """

    def __init__(self, kind: str, precision_bits: int | None = None):
        if kind not in ("rational", "rational_poly_u", "bigfloat"):
            raise ValueError(f"unknown domain kind {kind!r}")
        if kind == "bigfloat":
            if precision_bits is None:
                precision_bits = 192
            if precision_bits < 53:
                raise ValueError("bigfloat precision must be at least 53 bits")
        elif precision_bits is not None:
            raise ValueError("precision_bits only applies to bigfloat domains")
        self.kind = kind
        self.precision_bits = precision_bits

    @property
    def exact(self) -> bool:
        return self.kind != "bigfloat"

    def context(self):
        """Context manager installing the rounding context for this domain."""
        if self.kind == "bigfloat":
            return gmpy2.local_context(gmpy2.context(), precision=self.precision_bits)
        return contextlib.nullcontext()

    def zero(self):
        return self.coerce(0)

    def one(self):
        return self.coerce(1)

    def coerce(self, value):
        """Coerce an int, Fraction, float, str or domain element."""
        if self.kind == "rational":
            if isinstance(value, UPoly):
                raise TypeError("cannot coerce a u-polynomial into the rational domain")
            return Fraction(value)
        if self.kind == "rational_poly_u":
            return UPoly.of(value)
        with self.context():
            if isinstance(value, Fraction):
                return gmpy2.mpfr(value.numerator) / value.denominator
            if isinstance(value, mpmath.mpf):
                return mpf_to_mpfr(value)
            return gmpy2.mpfr(value)

    def coerce_all(self, values: Iterable) -> tuple:
        return tuple(self.coerce(v) for v in values)

    def to_float(self, value) -> float:
        if isinstance(value, UPoly):
            raise TypeError("u-polynomial has no float value; substitute u first")
        return float(value)

    def __eq__(self, other):
        return (
            isinstance(other, NumericDomain)
            and self.kind == other.kind
            and self.precision_bits == other.precision_bits
        )

    def __hash__(self):
        return hash((self.kind, self.precision_bits))

    def __repr__(self):
        if self.kind == "bigfloat":
            return f"NumericDomain(bigfloat, {self.precision_bits} bits)"
        return f"NumericDomain({self.kind})"


RATIONAL = NumericDomain("rational")
RATIONAL_POLY_U = NumericDomain("rational_poly_u")


def bigfloat(precision_bits: int = 192) -> NumericDomain:
    return NumericDomain("bigfloat", precision_bits)


def mpf_to_mpfr(x: "mpmath.mpf") -> Any:
    """Convert an mpmath float to gmpy2.mpfr without loss (at current context)."""
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    if man == 0 and exp == 0:
        return gmpy2.mpfr(0)
    val = gmpy2.mul_2exp(gmpy2.mpfr(man), exp) if exp >= 0 else gmpy2.mpfr(man) / gmpy2.mul_2exp(gmpy2.mpfr(1), -exp)
    return -val if sign else val
