"""Empirical fits for squeezing in randomly filled 1D lattices.

Variables: R = R_c/a and the filling fraction x = N/M.  The fits were made for
M >= 400 and R in [1, 30]; outside that range values are still returned but
flagged as extrapolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

RC_RANGE = (1.0, 30.0)
MIN_SITES = 400


@dataclass(frozen=True)
class FitInputs:
    rc_over_a: float
    x: float
    m_sites: int | None = None

    def __post_init__(self):
        if not self.rc_over_a > 0:
            raise DomainError("rc_over_a must be positive")
        if not 0 <= self.x <= 1:
            raise DomainError("filling fraction x must lie in [0, 1]")

    @property
    def extrapolated(self) -> bool:
        lo, hi = RC_RANGE
        small = self.m_sites is not None and self.m_sites < MIN_SITES
        return small or not lo <= self.rc_over_a <= hi or self.x == 0


@dataclass(frozen=True)
class FitValue:
    value: float
    extrapolated: bool


def xi2_full_filling(rc_over_a: float) -> float:
    return 0.6571 * rc_over_a**-0.656 + 0.01197


def xi2_fit_parameters(rc_over_a: float) -> tuple[float, float, float, float]:
    """(alpha, beta, gamma, lambda) of xi^2 = alpha e^{-beta x} + gamma e^{-lambda x}."""
    r = rc_over_a
    lam = 1.14 - 2.0 * math.exp(-0.89 * r)
    beta = 0.293 * r + 5.297
    alpha = (xi2_full_filling(r) - math.exp(-lam)) / (math.exp(-beta) - math.exp(-lam))
    return alpha, beta, 1.0 - alpha, lam


def xi2_fit(inputs: FitInputs) -> FitValue:
    alpha, beta, gamma, lam = xi2_fit_parameters(inputs.rc_over_a)
    x = inputs.x
    return FitValue(alpha * math.exp(-beta * x) + gamma * math.exp(-lam * x), inputs.extrapolated)


def tau_fit(inputs: FitInputs) -> FitValue:
    """Optimal squeezing time in units of hbar/V0."""
    if inputs.x <= 0:
        raise DomainError("tau_fit is undefined at zero filling")
    r = inputs.rc_over_a
    mu = 20.7 * r**-1.49
    nu = 0.0229 * r - 0.0198
    return FitValue(mu * inputs.x**-nu + 1.29 * r**-0.635 - mu, inputs.extrapolated)


def tau_half_filling(rc_over_a: float) -> float:
    """Half-filling form of :func:`tau_fit` with 2^nu written as 0.986 * 1.016^R."""
    r = rc_over_a
    return 20.7 * r**-1.49 * (0.986 * 1.016**r - 1.0) + 1.29 * r**-0.635


def theta_fit(rc_over_a: float) -> float:
    """Fitted quadrature angle, in the opposite handedness to :func:`rydsq.squeezing.theta_min`."""
    if rc_over_a < 0:
        raise DomainError("rc_over_a must be non-negative")
    return 0.49 * math.exp(-0.13 * rc_over_a) - 0.49 - math.pi / 4


def fixed_params_from_fits(rc_over_a: float, v0_rad: float) -> tuple[float, float]:
    """(tau_s, theta_rad) for fixed-parameter operation, theta in this package's handedness.

    The fitted angle is reported with the opposite rotation sense to the
    correlators computed here, so its sign is flipped.
    """
    if not v0_rad > 0:
        raise DomainError("v0_rad must be positive")
    tau = tau_fit(FitInputs(rc_over_a, 0.5)).value / v0_rad
    return tau, -theta_fit(rc_over_a)
