"""Closed-form covering bounds and the ball-measure ratio checks behind them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import mpmath
from scipy import optimize

from greedy_cover.errors import DomainError
from greedy_cover.spaces import Kind, Space, ball_measure

_DPS = 40


def theorem1_bounds(omega_r: float, omega_r_minus_eps: float, omega_eps: float) -> tuple[float, float]:
    """Lower 1/omega_r and upper (1/omega_{r-eps}) (ln(omega_{r-eps}/omega_eps) + 1)."""
    if not 0 < omega_eps <= omega_r_minus_eps <= omega_r <= 1:
        raise ValueError(
            "need 0 < omega_eps <= omega_r_minus_eps <= omega_r <= 1, got "
            f"{omega_eps}, {omega_r_minus_eps}, {omega_r}"
        )
    with mpmath.workdps(_DPS):
        lower = 1 / mpmath.mpf(omega_r)
        inner = mpmath.mpf(omega_r_minus_eps)
        upper = (mpmath.log(inner / mpmath.mpf(omega_eps)) + 1) / inner
        return float(lower), float(upper)


def corollary_density_bound(n: int, mu: float) -> float:
    """(1 + 1/(mu - 1)) (n ln(mu n) + 1), valid for every mu > 1."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if not mu > 1:
        raise DomainError(f"mu must exceed 1, got {mu}")
    with mpmath.workdps(_DPS):
        mu = mpmath.mpf(mu)
        return float((1 + 1 / (mu - 1)) * (n * mpmath.log(mu * n) + 1))


class OptimalMu(NamedTuple):
    mu: float
    value: float
    value_at_log_n: float


def optimal_mu(n: int) -> OptimalMu:
    """Minimize the corollary bound over mu in (1, n], next to the mu = ln n choice."""
    if n < 3:
        raise DomainError(f"need n >= 3 so that ln n > 1, got n = {n}")
    lo, hi = 1.0 + 1e-9, float(n)
    f = lambda mu: corollary_density_bound(n, mu)  # noqa: E731
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    mu_star = float(res.x)
    # the bounded search never evaluates the endpoint itself
    if f(hi) <= f(mu_star):
        mu_star = hi
    return OptimalMu(mu_star, f(mu_star), f(math.log(n)))


@dataclass
class RatioCheck:
    ratio: float
    t_pow_n: float
    holds: bool
    exact: bool


def bw_ratio_check(space: Space, r: float, t: float, tol: float = 1e-9) -> RatioCheck:
    """Compare omega_{tr}/omega_r with t^n.

    On the sphere the ratio must not exceed t^n (relative slack ``tol`` for
    quadrature); on the torus it must equal t^n to 1e-12 relative.
    """
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    n = space.dim
    tr = t * r
    if space.kind is Kind.SPHERE:
        if not (0 < r <= tr < math.pi / 2):
            raise DomainError(f"need 0 < r <= tr < pi/2, got r={r}, tr={tr}")
    elif space.kind is Kind.TORUS:
        if not (0 < r <= tr < 0.5):
            raise DomainError(f"need 0 < r <= tr < 1/2, got r={r}, tr={tr}")
    else:
        raise DomainError("ratio check needs a sphere or torus")
    ratio = ball_measure(space, tr) / ball_measure(space, r)
    t_pow_n = t**n
    if space.kind is Kind.TORUS:
        exact = abs(ratio - t_pow_n) <= 1e-12 * t_pow_n
        return RatioCheck(ratio, t_pow_n, exact, exact)
    return RatioCheck(ratio, t_pow_n, ratio <= t_pow_n * (1 + tol), False)


class NaszodiBound(NamedTuple):
    original: float
    improved: float
    degenerate: bool


def naszodi_bound(
    vol_K: float, vol_K_minus_delta: float, vol_K_minus_half_delta: float, vol_ball_half_delta: float
) -> NaszodiBound:
    """Translative covering density bounds from a body and its inner parallel bodies.

    ``original`` divides by the volume of the delta-inner body, ``improved``
    by the delta/2-inner body.  A zero-volume delta-inner body (a single
    point) makes ``original`` infinite and sets ``degenerate``.
    """
    if not (0 < vol_ball_half_delta <= vol_K_minus_half_delta):
        raise ValueError("need 0 < vol(B(0, delta/2)) <= vol(K_{-delta/2})")
    if not (0 <= vol_K_minus_delta <= vol_K_minus_half_delta <= vol_K):
        raise ValueError("need vol(K_{-delta}) <= vol(K_{-delta/2}) <= vol(K)")
    with mpmath.workdps(_DPS):
        half = mpmath.mpf(vol_K_minus_half_delta)
        log_term = mpmath.log(half / mpmath.mpf(vol_ball_half_delta)) + 1
        improved = float(mpmath.mpf(vol_K) / half * log_term)
        if vol_K_minus_delta == 0:
            return NaszodiBound(math.inf, improved, True)
        original = float(mpmath.mpf(vol_K) / mpmath.mpf(vol_K_minus_delta) * log_term)
    return NaszodiBound(original, improved, False)


@dataclass
class BoundsReport:
    lower: float
    upper: float
    corollary_value: float | None
    mu: float
    t: float
    t_prime: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": "greedy-cover/1",
            "lower": self.lower,
            "upper": self.upper,
            "corollary_value": self.corollary_value,
            "mu": self.mu,
            "t": self.t,
            "t_prime": self.t_prime,
            "details": self.details,
        }


def mu_from_epsilon(r: float, epsilon: float, n: int) -> float:
    return (r / epsilon - 1.0) / n


def epsilon_from_mu(r: float, mu: float, n: int) -> float:
    return r / (mu * n + 1.0)


def bounds_report(space: Space, r: float, epsilon: float | None = None, mu: float | None = None) -> BoundsReport:
    """Every bound for one (space, r, eps) setting; give either ``epsilon`` or ``mu``."""
    n = space.dim
    if (epsilon is None) == (mu is None):
        raise ValueError("give exactly one of epsilon and mu")
    if epsilon is None:
        epsilon = epsilon_from_mu(r, mu, n)
    else:
        mu = mu_from_epsilon(r, epsilon, n)
    if not 0 < epsilon < r:
        raise ValueError(f"need 0 < epsilon < r, got epsilon={epsilon}, r={r}")
    w_r = ball_measure(space, r)
    w_in = ball_measure(space, r - epsilon)
    w_eps = ball_measure(space, epsilon)
    lower, upper = theorem1_bounds(w_r, w_in, w_eps)
    corollary = corollary_density_bound(n, mu) if mu > 1 else None
    return BoundsReport(
        lower=lower,
        upper=upper,
        corollary_value=corollary,
        mu=mu,
        t=r / (r - epsilon),
        t_prime=(r - epsilon) / epsilon,
        details={
            "space": space.to_dict(),
            "r": r,
            "epsilon": epsilon,
            "omega_r": w_r,
            "omega_r_minus_eps": w_in,
            "omega_eps": w_eps,
            "density_upper": upper * w_r,
            "epsilon_below_half_r": epsilon < r / 2,
        },
    )
