"""Truncated power-series arithmetic over pluggable coefficient domains.

An :class:`EgfSeries` stores the ordinary coefficients ``[y^n]F`` of a
truncated series; exponential-generating-function counts are obtained by
multiplying with ``n!`` at the API boundary (:meth:`EgfSeries.egf_count`).
Truncation is the only approximation in the exact domains; in the big-float
domain every operation is correctly rounded at the domain's working
precision.

The module provides the ring operations, ``exp``/``log``/composition, the
fixed point ``T = x * phi(T)`` of a power series ``phi`` with nonzero
constant term (:func:`lagrange_solve`), and tail-corrected evaluation of a
truncated series at a point (:func:`eval_with_tail`).
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import mpmath

from .domains import NumericDomain, RATIONAL, bigfloat, mpf_to_mpfr

__all__ = [
    "EgfSeries",
    "series_add",
    "series_sub",
    "series_mul",
    "series_scale",
    "series_derive",
    "series_exp",
    "series_log",
    "series_compose",
    "lagrange_solve",
    "TailLaw",
    "EvalResult",
    "eval_with_tail",
]


class DomainMismatchError(ValueError):
    pass


def _check_same_domain(a: "EgfSeries", b: "EgfSeries") -> NumericDomain:
    if a.domain != b.domain:
        raise DomainMismatchError(f"domain mismatch: {a.domain} vs {b.domain}")
    return a.domain


@dataclass(frozen=True)
class EgfSeries:
    """Truncated series; ``coeffs[n]`` is the ordinary coefficient [y^n]F."""

    order: int
    coeffs: tuple
    domain: NumericDomain

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if len(self.coeffs) != self.order + 1:
            raise ValueError(
                f"need exactly order+1 = {self.order + 1} coefficients, got {len(self.coeffs)}"
            )

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_ordinary(domain: NumericDomain, coeffs: Sequence, order: int | None = None) -> "EgfSeries":
        vals = list(coeffs)
        if order is None:
            order = len(vals) - 1
        vals += [0] * (order + 1 - len(vals))
        return EgfSeries(order, domain.coerce_all(vals[: order + 1]), domain)

    @staticmethod
    def from_egf_counts(domain: NumericDomain, counts: Sequence, order: int | None = None) -> "EgfSeries":
        vals = list(counts)
        if order is None:
            order = len(vals) - 1
        vals += [0] * (order + 1 - len(vals))
        with domain.context():
            ordinary = tuple(
                domain.coerce(vals[n]) / math.factorial(n) for n in range(order + 1)
            )
        return EgfSeries(order, ordinary, domain)

    @staticmethod
    def zero(domain: NumericDomain, order: int) -> "EgfSeries":
        return EgfSeries.from_ordinary(domain, [], order)

    @staticmethod
    def one(domain: NumericDomain, order: int) -> "EgfSeries":
        return EgfSeries.from_ordinary(domain, [1], order)

    @staticmethod
    def identity(domain: NumericDomain, order: int) -> "EgfSeries":
        return EgfSeries.from_ordinary(domain, [0, 1], order)

    # -- accessors ----------------------------------------------------

    def coefficient(self, n: int):
        if not 0 <= n <= self.order:
            raise IndexError(f"coefficient index {n} out of range 0..{self.order}")
        return self.coeffs[n]

    def egf_count(self, n: int):
        """n! * [y^n]F, the labelled count at size n."""
        c = self.coefficient(n)
        f = math.factorial(n)
        with self.domain.context():
            return c * f

    def truncated(self, order: int) -> "EgfSeries":
        if order > self.order:
            raise ValueError("cannot extend a truncated series")
        return EgfSeries(order, self.coeffs[: order + 1], self.domain)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    # -- operator sugar ------------------------------------------------

    def __add__(self, other):
        return series_add(self, other)

    def __sub__(self, other):
        return series_sub(self, other)

    def __mul__(self, other):
        if isinstance(other, EgfSeries):
            return series_mul(self, other)
        return series_scale(self, other)

    __rmul__ = __mul__

    def __call__(self, inner: "EgfSeries") -> "EgfSeries":
        return series_compose(self, inner)


def series_add(a: EgfSeries, b: EgfSeries) -> EgfSeries:
    """Coefficientwise sum, truncated to the smaller order."""
    domain = _check_same_domain(a, b)
    order = min(a.order, b.order)
    with domain.context():
        coeffs = tuple(a.coeffs[n] + b.coeffs[n] for n in range(order + 1))
    return EgfSeries(order, coeffs, domain)


def series_sub(a: EgfSeries, b: EgfSeries) -> EgfSeries:
    domain = _check_same_domain(a, b)
    order = min(a.order, b.order)
    with domain.context():
        coeffs = tuple(a.coeffs[n] - b.coeffs[n] for n in range(order + 1))
    return EgfSeries(order, coeffs, domain)


def series_scale(a: EgfSeries, scalar) -> EgfSeries:
    c = a.domain.coerce(scalar)
    with a.domain.context():
        coeffs = tuple(x * c for x in a.coeffs)
    return EgfSeries(a.order, coeffs, a.domain)


def _convolve_at(a, b, n: int):
    """Coefficient n of the product, sum_k a[k] b[n-k] over valid k."""
    lo = max(0, n - len(b) + 1)
    hi = min(n, len(a) - 1)
    if lo > hi:
        return 0
    bs = b[n - hi : n - lo + 1]
    return sum(map(operator.mul, a[lo : hi + 1], reversed(bs)))


def series_mul(a: EgfSeries, b: EgfSeries) -> EgfSeries:
    """Cauchy product truncated to the smaller order."""
    domain = _check_same_domain(a, b)
    order = min(a.order, b.order)
    with domain.context():
        coeffs = tuple(_convolve_at(a.coeffs, b.coeffs, n) + domain.zero() for n in range(order + 1))
    return EgfSeries(order, coeffs, domain)


def series_derive(f: EgfSeries) -> EgfSeries:
    """Formal derivative; the order drops by one."""
    if f.order < 1:
        raise ValueError("cannot derive a series of order 0")
    with f.domain.context():
        coeffs = tuple(f.coeffs[n + 1] * (n + 1) for n in range(f.order))
    return EgfSeries(f.order - 1, coeffs, f.domain)


def series_exp(g: EgfSeries) -> EgfSeries:
    """exp(g) for a series with zero constant term, via F' = g'F.

    In ordinary coefficients: f_0 = 1 and
    ``f_n = (1/n) * sum_{k=1..n} k g_k f_{n-k}``.
    """
    if g.coeffs[0] != 0:
        raise ValueError("series_exp requires a zero constant term")
    domain = g.domain
    with domain.context():
        kg = [g.coeffs[k] * k for k in range(g.order + 1)]
        f = [domain.one()]
        for n in range(1, g.order + 1):
            acc = sum(map(operator.mul, kg[1 : n + 1], reversed(f)))
            f.append(acc / n)
    return EgfSeries(g.order, tuple(f), domain)


def series_log(f: EgfSeries) -> EgfSeries:
    """Formal log of a series with constant term 1 (inverse of series_exp)."""
    if f.coeffs[0] != 1:
        raise ValueError("series_log requires constant term 1")
    domain = f.domain
    with domain.context():
        g = [domain.zero()]
        kg = [domain.zero()]
        for n in range(1, f.order + 1):
            gn = f.coeffs[n]
            if n > 1:
                acc = sum(map(operator.mul, kg[1:n], f.coeffs[n - 1 : 0 : -1]))
                gn = gn - acc / n
            g.append(gn)
            kg.append(gn * n)
    return EgfSeries(f.order, tuple(g), domain)


def series_compose(outer: EgfSeries, inner: EgfSeries) -> EgfSeries:
    """outer(inner) mod y^{N+1}; the inner series must have no constant term."""
    domain = _check_same_domain(outer, inner)
    if inner.coeffs[0] != 0:
        raise ValueError("series_compose requires a zero inner constant term")
    order = min(outer.order, inner.order)
    inner_t = inner.truncated(order)
    with domain.context():
        result = EgfSeries.from_ordinary(domain, [outer.coeffs[order]], order)
        for k in range(order - 1, -1, -1):
            result = series_mul(result, inner_t)
            result = EgfSeries(
                order,
                (result.coeffs[0] + outer.coeffs[k],) + result.coeffs[1:],
                domain,
            )
    return result


def _power_diagonal(phi: EgfSeries, count: int) -> list:
    """[y^{n-1}] phi^n for n = 1..count, by iterated truncated products."""
    domain = phi.domain
    c = phi.coeffs
    cap = count - 1
    power = tuple(c[: cap + 1]) + (domain.zero(),) * (cap + 1 - len(c))
    out = [power[0]]
    for n in range(2, count + 1):
        power = tuple(_convolve_at(power, c, j) + domain.zero() for j in range(cap + 1))
        out.append(power[n - 1])
    return out


def lagrange_solve(phi: EgfSeries, order: int) -> EgfSeries:
    """Solve T(x) = x * phi(T(x)) mod x^{order+1}.

    Uses the inversion formula ``[x^n]T = (1/n) [y^{n-1}] phi^n``.  When the
    constant term of phi is 1 the powers are computed as ``exp(n log phi)``,
    which keeps the total cost at O(order^3 / 6) coefficient operations;
    otherwise plain iterated products are used.
    """
    if phi.coeffs[0] == 0:
        raise ValueError("lagrange_solve requires a nonzero constant term in phi")
    if order < 0:
        raise ValueError("order must be >= 0")
    domain = phi.domain
    if order == 0:
        return EgfSeries.zero(domain, 0)
    # Coefficient n of the solution needs phi up to degree n-1; shorter input
    # is treated as an exact polynomial (zero tail).
    target = order - 1
    if phi.order >= target:
        phi_t = phi.truncated(target)
    else:
        phi_t = EgfSeries(
            target, phi.coeffs + (domain.zero(),) * (target - phi.order), domain
        )

    with domain.context():
        if phi_t.coeffs[0] == 1 and order > 2:
            # phi^n = exp(n g) with g = log(phi)
            coeffs = [domain.zero(), phi_t.coeffs[0]]
            g = series_log(phi_t)
            kg = [g.coeffs[k] * k for k in range(g.order + 1)]
            for n in range(2, order + 1):
                m = n - 1  # need [y^m] exp(n g)
                f = [domain.one()]
                for i in range(1, m + 1):
                    hi = min(i, len(kg) - 1)
                    fs = f[i - hi : i]
                    acc = sum(map(operator.mul, kg[1 : hi + 1], reversed(fs)))
                    f.append((acc * n) / i)
                coeffs.append(f[m] / n)
        else:
            diag = _power_diagonal(phi_t, order)
            coeffs = [domain.zero()]
            for n in range(1, order + 1):
                coeffs.append(diag[n - 1] / n)
    return EgfSeries(order, tuple(coeffs[: order + 1]), domain)


@dataclass(frozen=True)
class TailLaw:
    """Asymptotic coefficient law ``[y^n]f ~ amplitude * rho^-n * (n+shift)^-exponent``."""

    rho: float
    amplitude: float
    exponent: float
    shift: int = 0


class EvalResult(NamedTuple):
    value: object
    error: object


def eval_with_tail(f: EgfSeries, y0, tail: Optional[TailLaw] = None) -> EvalResult:
    """Evaluate a truncated series at 0 <= y0 (<= rho when a tail law is given).

    Returns the partial sum plus, when a tail law is available, an estimate
    of the truncated mass ``sum_{n>N} amplitude rho^-n (n+shift)^-exponent y0^n``
    computed through the Lerch transcendent.  The reported error bound covers
    the first-order nature of the tail law (relative O(1/N)) plus rounding.
    Without a tail law the bare partial sum is returned with the magnitude of
    the last term as the error estimate.

    ``tail`` may also be a :class:`blockgraphs.classes.SingularMetadata`; its
    derived-block coefficient law is then used.
    """
    if f.domain.kind != "bigfloat":
        raise ValueError("eval_with_tail requires a bigfloat-domain series")
    if tail is not None and not isinstance(tail, TailLaw):
        tail = tail.bprime_tail_law()  # SingularMetadata duck-typing
    y0f = float(y0)
    if y0f < 0:
        raise ValueError("evaluation point must be nonnegative")
    if tail is not None and y0f > tail.rho * (1 + 1e-15):
        raise ValueError(f"evaluation point {y0f} beyond the radius of convergence {tail.rho}")

    domain = f.domain
    prec = domain.precision_bits
    with domain.context():
        y = domain.coerce(y0)
        value = domain.zero()
        for c in reversed(f.coeffs):
            value = value * y + c
        n_top = f.order
        last_term = abs(f.coeffs[n_top]) * y**n_top

        if tail is None:
            return EvalResult(value, last_term)

        with mpmath.workprec(prec):
            t = mpmath.mpf(y0f) / tail.rho
            start = n_top + 1
            # sum_{n > N} (n+shift)^-s t^n = t^{N+1-shift'} * lerchphi(t, s, N+1+shift)
            lerch = mpmath.lerchphi(t, tail.exponent, start + tail.shift)
            tail_sum = mpmath.mpf(tail.amplitude) * mpmath.power(t, start) * lerch
        tail_val = mpf_to_mpfr(tail_sum)
        value = value + tail_val
        error = abs(tail_val) * 5.0 / (n_top + 1) + abs(value) * 2.0 ** (10 - prec)
        return EvalResult(value, error)
