"""Correlators of a fully filled 1D chain with a step (Heaviside) interaction.

Every pair within R sites shares the phase phi0, all others are free.  For a
pair (i, j) the jx2 bracket reduces to c^u (1 - c2^s), with c = cos phi0,
c2 = cos 2 phi0, s the number of common neighbours and u the number of atoms
neighbouring exactly one of the two.  Only pairs closer than 2R contribute,
and once M >= 4R + 2 the total is affine in M (adding a bulk site adds a fixed
set of bulk pairs), so any M costs O(R^2).

The edge-resolved rational closed forms are kept in :func:`heaviside_closed_form`
as an independent cross-check; they hold for M >= 4R and away from the
removable singularities at phi0 in {0, pi/2, 2pi/3, pi}.
"""
from __future__ import annotations

import math

import numpy as np

from .correlator import Correlators
from .errors import DomainError


def _check(m_sites, rc_over_a):
    if int(rc_over_a) != rc_over_a or rc_over_a < 1:
        raise DomainError("rc_over_a must be an integer >= 1")
    if m_sites < 2 * rc_over_a:
        raise DomainError(f"M={m_sites} is below 2 R_c/a = {2 * rc_over_a}")


def _pair_sum(m, r, c, c2):
    """sum over i<j of c^u (1 - c2^s) for an M-site chain, evaluated directly."""
    i = np.arange(m)
    lo = np.maximum(i - r, 0)
    hi = np.minimum(i + r, m - 1)
    total = 0.0
    for d in range(1, min(2 * r, m - 1) + 1):
        a, b = i[: m - d], i[d:]
        inter = np.maximum(np.minimum(hi[a], hi[b]) - np.maximum(lo[a], lo[b]) + 1, 0)
        near = 2 if d <= r else 0
        s = inter - near
        sym = (hi[a] - lo[a]) + (hi[b] - lo[b]) - 2 * s
        u = sym - near
        total += np.sum(c**u * (1.0 - c2**s))
    return total


def heaviside_jx2_pairs(m_sites: int, rc_over_a: int, phi0: float) -> float:
    r = int(rc_over_a)
    c, c2 = math.cos(phi0), math.cos(2.0 * phi0)
    m0 = 4 * r + 2
    if m_sites <= m0 + 1:
        return _pair_sum(m_sites, r, c, c2)
    f0 = _pair_sum(m0, r, c, c2)
    f1 = _pair_sum(m0 + 1, r, c, c2)
    return f0 + (m_sites - m0) * (f1 - f0)


def correlators_heaviside_1d(m_sites: int, rc_over_a: int, phi0: float) -> Correlators:
    _check(m_sites, rc_over_a)
    m, r = int(m_sites), int(rc_over_a)
    c, s = math.cos(phi0), math.sin(phi0)
    edge = np.arange(r, 2 * r)  # neighbour counts of the r sites at each end
    jz = -0.5 * ((m - 2 * r) * c ** (2 * r) + 2.0 * np.sum(c**edge))
    cross = -0.5 * s * ((m - 2 * r) * 2 * r * c ** (2 * r - 1) + 2.0 * np.sum(edge * c ** (edge - 1)))
    jx2 = 0.25 * m + 0.25 * heaviside_jx2_pairs(m, r, phi0)
    return Correlators(float(jz), float(jx2), 0.25 * m, float(cross), m)


def heaviside_closed_form(m_sites: int, rc_over_a: int, phi0: float) -> Correlators:
    """Edge-resolved rational closed forms (valid for M >= 4R, non-singular phi0)."""
    n, r = float(m_sites), int(rc_over_a)
    if int(rc_over_a) != rc_over_a or r < 1 or m_sites < 4 * r:
        raise DomainError("closed form requires integer R >= 1 and M >= 4R")
    c, s, c2, t = math.cos(phi0), math.sin(phi0), math.cos(2 * phi0), math.tan(phi0)
    dens = (1 - c, s, c, c2 - c, 1 - c2)
    if min(abs(x) for x in dens) < 1e-8:
        raise DomainError(f"phi0={phi0} sits on a removable singularity of the closed form")
    R = r
    jz = -0.5 * ((n - 2 * R) * c ** (2 * R) + 2 * c**R * (1 - c**R) / (1 - c))
    cross = (
        -(n - 3 * R) * R * s * c ** (2 * R - 1)
        - R * s * c ** (R - 1) * (1 - c**R) / (1 - c)
        - R**2 * s * c ** (2 * R - 1)
        - (R - 1) * s * c**R * ((c ** (R - 1) - 1) / (c - 1))
        + s * c**R * (R - 2 + c ** (R - 1) - (R - 1) * c) / (c - 1) ** 2
    )
    jx2 = (
        n / 4
        + (n - 4 * R) / 4 * c ** (2 * R) / s**2 * (1 - c ** (2 * R) + c2 * (c2**R - c ** (2 * R)))
        + (n - 3 * R) / 4 * c**2 / s**2 * (1 - c ** (2 * R) + c2 ** (R - 1) * (c2**R - c ** (2 * R)))
        + 0.5 * (
            (R - c2 ** (R - 1) / (1 - c2)) * c * (1 - c**R) / (1 - c)
            + c * c2 ** (R - 1) / (1 - c2) * ((c2**R - c**R) / (c2 - c))
            - (c * (1 - c**R) - R * c ** (R + 1) * (1 - c)) / (1 - c) ** 2
            + c / (1 - c) * (
                (c**R - 1) / (c - 1)
                + c / s**2 * (c ** (2 * R) - 1)
                - c2 ** (R - 1) * ((c**R - c2**R) / (c - c2))
                + c * c2 ** (R - 1) / s**2 * (c ** (2 * R) - c2**R)
            )
        )
        + 0.5 * (c**R * (1 - c**R) / (s**2 * (1 - c)) * (1 - c ** (2 * R) + c2 * (c2**R - c ** (2 * R))))
        + (1 + c ** (2 * R - 2)) / (4 * t**4) * ((c ** (2 * R) - 1) / c**2 + R * t**2)
        - (c ** (2 * R - 2) * c2 + c2 ** (R - 1)) / (4 * t**4) * (c2 / c**2 * (c ** (2 * R) - c2**R) - R * c2**R * t**2)
    )
    return Correlators(jz, jx2, n / 4, cross, int(m_sites))
