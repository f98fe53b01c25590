"""Squeezing metrics, optimal twisting time, decay penalty and clock stability."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .correlator import Correlators, correlators_all_to_all, correlators_from_couplings
from .errors import DegenerateStateError, DomainError

# States whose mean spin has shrunk below this fraction of N/2 are treated as
# over-wound during the tau search (xi^2 -> 0/0 there is not physical squeezing).
OVERWOUND_FRACTION = 1e-3
# xi^2(tau) has revivals for small N.  Every grid minimum within CANDIDATE_REL
# of the best is refined; refined minima within TIE_REL count as ties and the
# smallest tau wins.
CANDIDATE_REL = 0.1
TIE_REL = 1e-3


@dataclass(frozen=True)
class TauScanSpec:
    """Coarse log grid [tau_hi/10^3, tau_hi] plus tau=0, then golden-section refinement.

    ``tau_hi_s=None`` picks 4x the all-to-all optimum for an effective
    coordination number; the grid is extended up to ``max_extensions`` times
    (x4 each) while the minimum sits on its upper edge.
    """

    tau_lo_s: float = 0.0
    tau_hi_s: float | None = None
    coarse_points: int = 24
    refine_rel_tol: float = 1e-3
    max_extensions: int = 3

    def __post_init__(self):
        if self.coarse_points < 8:
            raise DomainError("coarse_points must be >= 8")
        if self.tau_lo_s < 0:
            raise DomainError("tau_lo_s must be non-negative")
        if self.tau_hi_s is not None and not self.tau_hi_s > self.tau_lo_s:
            raise DomainError("tau_hi_s must exceed tau_lo_s")
        if not 0 < self.refine_rel_tol < 1:
            raise DomainError("refine_rel_tol must lie in (0, 1)")


@dataclass(frozen=True)
class SqueezingResult:
    xi2_min: float
    theta_min_rad: float
    tau_opt_s: float
    xi2_bar: float
    correlators_at_opt: Correlators = field(repr=False)
    merit: float
    edge_warning: bool = False
    n_evaluations: int = 0


def variance_perp(c: Correlators, theta_rad: float) -> float:
    ct, st = math.cos(theta_rad), math.sin(theta_rad)
    return ct * ct * c.jx2 + st * st * c.jy2 + st * ct * c.jxjy_sym


def theta_min(c: Correlators) -> float:
    a = c.jx2 - c.jy2
    if a == 0 and c.jxjy_sym == 0:
        return 0.0
    theta = 0.5 * math.atan2(-c.jxjy_sym, -a)
    return theta + math.pi if theta <= -0.5 * math.pi else theta


def min_variance(c: Correlators) -> float:
    half_diff = 0.5 * (c.jx2 - c.jy2)
    return 0.5 * (c.jx2 + c.jy2) - math.hypot(half_diff, 0.5 * c.jxjy_sym)


def xi2(c: Correlators, theta_rad: float) -> float:
    if c.jz == 0:
        raise DegenerateStateError("mean spin length is zero (over-wound state)")
    return c.n_atoms * variance_perp(c, theta_rad) / c.jz**2


def xi2_min(c: Correlators) -> tuple[float, float]:
    """Minimum over theta of xi^2, and the minimizing angle."""
    if c.jz == 0:
        raise DegenerateStateError("mean spin length is zero (over-wound state)")
    return max(c.n_atoms * min_variance(c) / c.jz**2, 0.0), theta_min(c)


def decay_correct(xi2_value: float, tau_tilde_s: float, tau_opt_s: float) -> float:
    if not tau_tilde_s > 0:
        raise DomainError("tau_tilde_s must be positive")
    if tau_opt_s < 0:
        raise DomainError("tau_opt_s must be non-negative")
    return xi2_value + tau_opt_s / tau_tilde_s


def stability(xi_min: float, n_atoms: int, nu_clock_hz: float, t_interrogation_s: float,
              tau_avg_s: float) -> float:
    """Zero-dead-time fractional instability; takes xi (not xi^2)."""
    if min(xi_min, n_atoms, nu_clock_hz, t_interrogation_s, tau_avg_s) <= 0:
        raise DomainError("stability inputs must all be positive")
    return xi_min / (2.0 * math.pi * nu_clock_hz * math.sqrt(n_atoms) * math.sqrt(tau_avg_s * t_interrogation_s))


def all_to_all_optimum_phase(n_atoms: float) -> float:
    """phi = V tau / 2 minimizing xi^2 for N equal all-to-all couplings.

    Non-integer N (an effective coordination number) is rounded.
    """
    n = max(int(round(n_atoms)), 2)

    def f(phi):
        val, _ = _objective(correlators_all_to_all(n, 2.0, phi))
        return val

    grid = np.geomspace(1e-5, 0.5 * math.pi, 400)
    vals = [f(x) for x in grid]
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    return float(optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                          options={"xatol": 1e-10 * hi}).x)


def default_tau_hi(couplings) -> float:
    v = np.abs(np.asarray(couplings, dtype=np.float64))
    vmax = float(v.max()) if v.size else 0.0
    if vmax == 0:
        raise DomainError("no interactions: every coupling is zero")
    n_eff = 1.0 + float(v.sum(axis=1).mean()) / vmax
    return 4.0 * 2.0 * all_to_all_optimum_phase(n_eff) / vmax


def _objective(c: Correlators) -> tuple[float, float]:
    if abs(c.jz) < OVERWOUND_FRACTION * 0.5 * c.n_atoms:
        return math.inf, 0.0
    return xi2_min(c)


def _local_minima(vals, within: float = CANDIDATE_REL) -> list[int]:
    """Grid local minima whose value lies within ``within`` (relative) of the best."""
    vals = np.asarray(vals, dtype=np.float64)
    best = float(np.min(vals))
    if not math.isfinite(best):
        return []
    limit = best + within * abs(best)
    out = []
    for k, v in enumerate(vals):
        left = vals[k - 1] if k > 0 else math.inf
        right = vals[k + 1] if k + 1 < len(vals) else math.inf
        if v <= limit and v <= left and v <= right:
            out.append(k)
    return out


def optimize_scan(correlator_fn: Callable[[float], Correlators], tau_hi_s: float,
                  scan: TauScanSpec = TauScanSpec(), tau_tilde_s: float | None = None) -> SqueezingResult:
    """Minimize xi^2_min(tau) for an arbitrary correlator evaluator."""
    cache: dict[float, tuple[float, float, Correlators]] = {}

    def evaluate(tau):
        tau = float(tau)
        if tau not in cache:
            c = correlator_fn(tau)
            val, th = _objective(c)
            cache[tau] = (val, th, c)
        return cache[tau][0]

    hi = scan.tau_hi_s if scan.tau_hi_s is not None else tau_hi_s
    lo = max(scan.tau_lo_s, 0.0)
    start = lo if lo > 0 else hi * 1e-3
    grid = sorted({lo, *np.geomspace(start, hi, scan.coarse_points - 1).tolist()})
    edge = False
    for ext in range(scan.max_extensions + 1):
        vals = [evaluate(t) for t in grid]
        k = int(np.argmin(vals))
        if k < len(grid) - 1:
            break
        if ext == scan.max_extensions or scan.tau_hi_s is not None:
            edge = True
            break
        top = grid[-1]
        grid += list(np.geomspace(top, 4 * top, scan.coarse_points // 2)[1:])

    refined = []
    for k in _local_minima(vals):
        tau_k = grid[k]
        if 0 < k < len(grid) - 1:
            try:
                t_ref = float(optimize.golden(evaluate, brack=(grid[k - 1], grid[k], grid[k + 1]),
                                              tol=scan.refine_rel_tol))
                if evaluate(t_ref) < evaluate(tau_k):
                    tau_k = t_ref
            except (ValueError, RuntimeError):
                pass
        refined.append(tau_k)
    if not refined:
        raise DegenerateStateError("every scanned time is over-wound")
    best_val = min(cache[t][0] for t in refined)
    best_tau = min(t for t in refined if cache[t][0] <= best_val + TIE_REL * abs(best_val))
    val, th, c = cache[best_tau]
    if tau_tilde_s is None:
        xbar, merit = val, math.inf
    else:
        xbar = decay_correct(val, tau_tilde_s, best_tau)
        merit = tau_tilde_s / best_tau if best_tau > 0 else math.inf
    return SqueezingResult(val, th, best_tau, xbar, c, merit, edge, len(cache))


def optimize_couplings(couplings, scan: TauScanSpec = TauScanSpec(),
                       tau_tilde_s: float | None = None) -> SqueezingResult:
    v = np.asarray(couplings, dtype=np.float64)
    n = len(v)
    if n < 2 or not np.any(v):
        c = Correlators.coherent(n)
        return SqueezingResult(1.0, 0.0, 0.0, 1.0, c, math.inf, False, 0)
    return optimize_scan(lambda t: correlators_from_couplings(v, t), default_tau_hi(v), scan, tau_tilde_s)


def optimize_tau(config, model, p, scan: TauScanSpec = TauScanSpec()) -> SqueezingResult:
    from .interaction import coupling_matrix

    if config.n_atoms < 2:
        raise DomainError("optimize_tau needs at least two atoms")
    tau_tilde = p.tau_rydberg_s and 4.0 * p.delta_rad**2 / p.omega_r_rad**2 * p.tau_rydberg_s
    return optimize_couplings(coupling_matrix(config.positions, model, p), scan, tau_tilde or None)


def optimize_all_to_all(n_atoms: int, v0_rad: float, scan: TauScanSpec = TauScanSpec(),
                        tau_tilde_s: float | None = None) -> SqueezingResult:
    if n_atoms < 2:
        raise DomainError("all-to-all optimum needs at least two atoms")
    tau_hi = 4.0 * 2.0 * all_to_all_optimum_phase(n_atoms) / v0_rad
    return optimize_scan(lambda t: correlators_all_to_all(n_atoms, v0_rad, t), tau_hi, scan, tau_tilde_s)
