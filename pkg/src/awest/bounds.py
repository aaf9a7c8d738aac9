"""Closed-form rate and concentration bounds for the adapted empirical measure.

Unspecified constants (C for moments, c for tails) are inputs; experiments
calibrate them. Probability bounds are clamped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PreconditionError, ValidationError
from .path_measure import grid_resolution


@dataclass(frozen=True)
class RateSpec:
    """Dimensions, integrability, mixing sums and calibration constants of a bound.

    eta_sum is 1 + 2 sum eta(s); eta_bar_sum is 1 + sum eta_bar(s).
    """

    d: int
    T: int
    p: float = math.inf
    eta_sum: float = 1.0
    eta_bar_sum: float = 1.0
    C: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.d < 1 or self.T < 2:
            raise ValidationError("need d >= 1 and T >= 2")
        if self.p < 1:
            raise ValidationError("need p >= 1")
        if self.eta_sum < 1 or self.eta_bar_sum < 1:
            raise ValidationError("mixing sums are at least 1")


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def rate_inf(N: float, d: int, T: int) -> float:
    """N^(-1/(T+1)) for d = 1, N^(-1/(2T)) log(N+1) for d = 2, N^(-1/(dT)) for d >= 3."""
    if N < 1 or d < 1 or T < 1:
        raise ValidationError("need N, d, T >= 1")
    if d == 1:
        return N ** (-1.0 / (T + 1))
    if d == 2:
        return N ** (-1.0 / (2 * T)) * math.log(N + 1)
    return N ** (-1.0 / (d * T))


def rate_p(N: float, d: int, T: int, p: float) -> float:
    """N^(-(p-1)/(pT)) plus N^(-1/((d+1)T)) for d <= 2 or N^(-1/(dT)) for d >= 3.

    p = inf is allowed and gives N^(-1/T) as the first term.
    """
    if N < 1 or d < 1 or T < 1:
        raise ValidationError("need N, d, T >= 1")
    if p < 1:
        raise ValidationError("need p >= 1")
    frac = 1.0 if math.isinf(p) else (p - 1.0) / p
    first = N ** (-frac / T)
    second = N ** (-1.0 / ((d + 1) * T)) if d <= 2 else N ** (-1.0 / (d * T))
    return first + second


def moment_bound_compact(N: float, spec: RateSpec) -> float:
    """C sqrt(eta_sum) rate_inf(N, d, T)."""
    return spec.C * math.sqrt(spec.eta_sum) * rate_inf(N, spec.d, spec.T)


def moment_bound_general(N: float, spec: RateSpec) -> float:
    """C sqrt(eta_sum) rate_p(N, d, T, p)."""
    return spec.C * math.sqrt(spec.eta_sum) * rate_p(N, spec.d, spec.T, spec.p)


def concentration_bound_compact(N: float, eps: float, diam: float, T: int, eta_bar_sum: float, c: float) -> float:
    """min(1, 2 exp(-c N eps^2 / (diam^2 eta_bar_sum^2))).

    ``T`` is carried for the record: the constant c depends on it.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    if diam <= 0 or eta_bar_sum < 1 or c <= 0:
        raise ValidationError("need diam > 0, eta_bar_sum >= 1, c > 0")
    return _clamp(2.0 * math.exp(-c * N * eps * eps / (diam * diam * eta_bar_sum * eta_bar_sum)))


def concentration_bound_general(
    N: int,
    eps: float,
    alpha: float,
    eta_bar_sum: float,
    E_mu: float,
    c: float,
    d: int = 1,
    T: int = 2,
) -> float:
    """Two-term tail bound for measures with finite exponential moment E_mu.

    2 exp(-c N^a eps^(2a) / eta_bar_sum^2) + E_mu N exp(-c N^a eps^(2a)),
    a = alpha / (alpha + 2). Valid only for eps at least the grid edge.
    """
    delta = grid_resolution(N, d, T)
    if eps < delta:
        raise PreconditionError(f"eps = {eps!r} is below the grid edge {delta!r}")
    if alpha <= 0 or eta_bar_sum < 1 or E_mu < 0 or c <= 0:
        raise ValidationError("need alpha > 0, eta_bar_sum >= 1, E_mu >= 0, c > 0")
    a = alpha / (alpha + 2.0)
    core = c * N**a * eps ** (2.0 * a)
    first = 2.0 * math.exp(-core / (eta_bar_sum * eta_bar_sum))
    second = E_mu * N * math.exp(-core)
    return _clamp(first + second)


def bdd_bound(N: int, L: float, eps: float, eta_bar_sum: float) -> float:
    """min(1, 2 exp(-eps^2 / (2 N L^2 eta_bar_sum^2))) for L-Lipschitz (Hamming) functionals."""
    if L <= 0:
        raise ValidationError("L must be positive")
    if eta_bar_sum < 1:
        raise ValidationError("eta_bar_sum must be >= 1")
    return _clamp(2.0 * math.exp(-eps * eps / (2.0 * N * L * L * eta_bar_sum * eta_bar_sum)))


def mcdiarmid_bound(N: int, L: float, eps: float) -> float:
    """Independent-case reference 2 exp(-2 eps^2 / (N L^2))."""
    return _clamp(2.0 * math.exp(-2.0 * eps * eps / (N * L * L)))
