"""Phase solving for block-weighted classes: the critical weight, the radius
and boundary value of the weighted rooted-graph series, the offspring law of
the block tree with its mean laws, the asymptotic constants of the three
coefficient regimes, and the law of the small remainder left next to the
giant block of a large decoration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .classes import GAMMA_MINUS_3_2, BlockClassSpec

__all__ = [
    "PhaseSolution",
    "ReproductionLaw",
    "AsymptoticConstants",
    "critical_u",
    "solve_phase",
    "reproduction_law",
    "phi_coefficients",
    "asymptotic_constants",
    "predicted_coefficient",
    "gibbs_remainder_law",
]

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class PhaseSolution:
    u: float
    u_c: float
    rho: float  # radius of the weighted rooted series at this u
    y: float  # its boundary value C*(rho, u)
    phase: str
    mean_mu: float  # offspring mean u y B''(y)


@dataclass(frozen=True)
class ReproductionLaw:
    """Offspring law of the block tree: mu(j) = [y^j]Phi(y,u) y*^j / Phi(y*,u)."""

    u: float
    y: float
    rho: float
    probs: np.ndarray  # mu(0..J), raw (not renormalized)
    tail_mass: float
    mean: float

    def truncated_renormalized(self, support: int) -> np.ndarray:
        """First `support` entries renormalized to a proper law (used by
        size-conditioned sampling, where larger outdegrees are impossible)."""
        p = np.array(self.probs[:support], dtype=float)
        total = p.sum()
        if total <= 0:
            raise ValueError("law has no mass on the requested support")
        return p / total


@dataclass(frozen=True)
class AsymptoticConstants:
    regime: str
    alpha: float  # polynomial correction exponent of [x^n]
    r_u: Optional[float]
    s_u: float
    gamma_u: float  # [y^n]Phi(y,u) ~ gamma_u rho_B^-n n^{-5/2}
    c_u: float  # mu(k) ~ c_u k^{-5/2} (y/rho_B)^k
    leading: float  # [x^n]C* ~ leading * n^-alpha * rho(u)^-n


def critical_u(cls: BlockClassSpec) -> float:
    """1/(rho_B B''(rho_B)); zero when B'' diverges at the radius or the
    radius is infinite with unbounded y B''(y)."""
    rho = cls.radius
    if rho == math.inf:
        return 0.0
    if not rho > 0:
        raise ValueError(f"class {cls.name} has no positive radius; no phase structure")
    bpp = cls.bpp_at_radius_value()
    if bpp == math.inf:
        return 0.0
    if not bpp > 0:
        raise ValueError(f"class {cls.name}: B'' at the radius must be positive")
    return 1.0 / (rho * bpp)


def _solve_boundary(cls: BlockClassSpec, u: float) -> float:
    """Root of y B''(y) = 1/u on (0, rho_B], by bracketed bisection."""
    target = 1.0 / u

    def f(y: float) -> float:
        return y * cls.bpp_value(y) - target

    lo = 1e-300
    if cls.radius == math.inf:
        hi = 1.0
        while f(hi) <= 0:
            hi *= 2.0
            if hi > 1e300:
                raise ValueError("no boundary solution found")
    else:
        hi = cls.radius
        try:
            fhi = f(hi)
        except (OverflowError, ZeroDivisionError, ValueError):
            fhi = math.inf
        if fhi == math.inf or math.isnan(fhi):
            delta = 1e-3
            while True:
                hi = cls.radius * (1.0 - delta)
                if f(hi) > 0:
                    break
                delta /= 2.0
                if delta < 1e-15:
                    raise ValueError(
                        f"class {cls.name}: could not bracket the boundary equation "
                        "(metadata inconsistency?)"
                    )
        elif fhi < 0:
            raise ValueError(
                f"class {cls.name}: y B''(y) stays below 1/u on (0, rho_B]; "
                "no supercritical solution (metadata inconsistency?)"
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def solve_phase(cls: BlockClassSpec, u: float) -> PhaseSolution:
    """Radius rho(u) and boundary value y(u) of the u-weighted rooted series,
    with the phase label and the offspring mean."""
    if not u > 0:
        raise ValueError("the block weight u must be positive")
    u_c = critical_u(cls)
    if u_c > 0 and u <= u_c:
        y = cls.radius
        rho = y * math.exp(-u * cls.bprime_at_radius_value())
        phase = CRITICAL if u == u_c else SUBCRITICAL
        mean = u / u_c
    else:
        y = _solve_boundary(cls, u)
        rho = y * math.exp(-u * cls.bprime_value(y))
        # entire weight series (infinite radius): the boundary equation holds
        # for every u and the offspring law is critical throughout
        if u == u_c or cls.radius == math.inf:
            phase = CRITICAL
        else:
            phase = SUPERCRITICAL
        mean = u * y * cls.bpp_value(y)
    return PhaseSolution(u=u, u_c=u_c, rho=rho, y=y, phase=phase, mean_mu=mean)


_PHI_COEFF_CACHE: dict = {}


def phi_coefficients(cls: BlockClassSpec, u: float, order: int) -> np.ndarray:
    """Ordinary coefficients [y^j] exp(u B'(y)) for j = 0..order (float).

    Cached per (class, u); a request below an already computed order reuses
    the stored prefix."""
    order = int(min(order, cls.weight_cap))
    key = (id(cls), float(u))
    hit = _PHI_COEFF_CACHE.get(key)
    if hit is not None and len(hit[1]) > order:
        return hit[1][: order + 1]
    w = np.zeros(order + 1)
    for k in range(1, order + 1):
        w[k] = k * u * cls.ordinary_weight_float(k)
    f = np.zeros(order + 1)
    f[0] = 1.0
    for n in range(1, order + 1):
        f[n] = np.dot(w[1 : n + 1], f[n - 1 :: -1][: n]) / n
    f.flags.writeable = False
    w.flags.writeable = False
    _PHI_COEFF_CACHE[key] = (cls, f, w)
    return f


def phi_pick_tables(cls: BlockClassSpec, u: float, order: int):
    """(f, w) with f = phi_coefficients and w[j] = j u b'_j/j!, sharing one
    cache entry; used by the conditioned decoration sampler."""
    f = phi_coefficients(cls, u, order)
    w = _PHI_COEFF_CACHE[(id(cls), float(u))][2]
    return f, w[: len(f)]


def reproduction_law(
    cls: BlockClassSpec,
    u: float,
    support: int,
    tail_tol: Optional[float] = None,
) -> ReproductionLaw:
    """Offspring law of the block tree up to outdegree `support`.

    mu(j) = [y^j]Phi(y,u) y(u)^j / Phi(y(u),u) with the normalization taken
    from the fixed point, Phi(y(u),u) = y(u)/rho(u); in particular
    mu(0) = rho(u)/y(u) exactly.  The mean is the analytic value
    u y(u) B''(y(u)); `tail_mass` is the probability left above the support.
    """
    sol = solve_phase(cls, u)
    f = phi_coefficients(cls, u, support)
    with np.errstate(under="ignore"):
        log_y = np.log(sol.y)
        weights = f * np.exp(np.arange(len(f)) * log_y)
    probs = weights * (sol.rho / sol.y)
    tail = max(0.0, 1.0 - float(probs.sum()))
    if tail_tol is not None and tail > tail_tol:
        raise ValueError(
            f"tail mass {tail:.3e} above requested tolerance {tail_tol:.3e} "
            f"at support cap {support}"
        )
    return ReproductionLaw(
        u=u, y=sol.y, rho=sol.rho, probs=probs, tail_mass=tail, mean=sol.mean_mu
    )


def asymptotic_constants(cls: BlockClassSpec, u: float) -> AsymptoticConstants:
    """Regime-dependent constants of the coefficient asymptotics
    [x^n]C* ~ leading * n^-alpha * rho(u)^-n for a 3/2-singular class.

    The supercritical amplitude is sqrt(2 Phi / Phi_yy) evaluated at the
    boundary point, i.e. sqrt(2 / (u B'''(y) + u^2 B''(y)^2)).
    """
    md = cls.metadata
    if md is None:
        raise ValueError(f"class {cls.name} carries no 3/2-singular metadata")
    sol = solve_phase(cls, u)
    rho_b = md.rho_b
    gamma_u = (3.0 * rho_b**1.5 * md.c_b / (4.0 * math.sqrt(math.pi))) * u * math.exp(
        u * md.bprime_at_rho
    )
    c_u = gamma_u * sol.rho / sol.y
    if sol.phase == SUBCRITICAL:
        r_u = rho_b / (1.0 - u / sol.u_c)
        s_u = u * md.c_b * rho_b**2.5 * (1.0 - u / sol.u_c) ** -2.5
        alpha = 2.5
        leading = 3.0 * s_u / (4.0 * math.sqrt(math.pi))
    elif sol.phase == CRITICAL:
        r_u = None
        s_u = sol.u_c ** (-2.0 / 3.0) * md.c_b ** (-2.0 / 3.0)
        alpha = 5.0 / 3.0
        leading = s_u * math.gamma(2.0 / 3.0) / math.sqrt(3.0 * math.pi)
    else:
        r_u = None
        y = sol.y
        s_u = math.sqrt(2.0 / (u * cls.bppp_value(y) + (u * cls.bpp_value(y)) ** 2))
        alpha = 1.5
        leading = s_u / (2.0 * math.sqrt(math.pi))
    return AsymptoticConstants(
        regime=sol.phase,
        alpha=alpha,
        r_u=r_u,
        s_u=s_u,
        gamma_u=gamma_u,
        c_u=c_u,
        leading=leading,
    )


def predicted_coefficient(cls: BlockClassSpec, u: float, n: int, log: bool = False):
    """Leading-order prediction of [x^n]C*(x,u) (asymptotic, no error bound).

    With ``log=True`` the natural log is returned, avoiding overflow of
    rho(u)^-n at large n."""
    const = asymptotic_constants(cls, u)
    sol = solve_phase(cls, u)
    log_val = math.log(const.leading) - const.alpha * math.log(n) - n * math.log(sol.rho)
    if log:
        return log_val
    return math.exp(log_val)


def gibbs_remainder_law(
    cls: BlockClassSpec,
    u: float,
    rmax: int,
    tail_tol: Optional[float] = None,
) -> np.ndarray:
    """Law of the total size left outside the giant block of a large
    decoration: P(R = r) = [z^r] exp(u B'(rho_B z)) / exp(u B'(rho_B)).

    Computed by exponentiating the series with coefficients
    u b'_k rho_B^k / k!; entries 0..rmax are returned (their sum approaches 1
    as rmax grows since B'(rho_B) is finite)."""
    md = cls.metadata
    if md is None:
        raise ValueError(f"class {cls.name} carries no 3/2-singular metadata")
    rho = md.rho_b
    w = np.zeros(rmax + 1)
    for k in range(1, min(rmax, cls.weight_cap) + 1):
        w[k] = k * u * cls.ordinary_weight_float(k) * rho**k
    e = np.zeros(rmax + 1)
    e[0] = 1.0
    for n in range(1, rmax + 1):
        e[n] = np.dot(w[1 : n + 1], e[n - 1 :: -1][: n]) / n
    probs = e * math.exp(-u * md.bprime_at_rho)
    tail = max(0.0, 1.0 - float(probs.sum()))
    if tail_tol is not None and tail > tail_tol:
        raise ValueError(f"tail mass {tail:.3e} above tolerance at rmax {rmax}")
    return probs
