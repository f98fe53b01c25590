"""Pair interaction models for Rydberg-dressed clock atoms.

All frequencies are angular (rad/s) and potentials are returned as V/hbar.
C6 is carried in SI units (J m^6).
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np
from scipy import constants

from .errors import ConfigError, DataError, NumericalBranchError

HBAR = constants.hbar
TWO_PI = 2.0 * math.pi
HARTREE_J = constants.physical_constants["Hartree energy"][0]
ELECTRON_MASS_U = constants.m_e / constants.atomic_mass
SR88_MASS_U = 87.9056122571

# Double-precision Cardano evaluation loses roughly (|V_dd|/|Delta|)^2 digits;
# beyond this ratio the closed form is evaluated with mpmath instead.
_MP_SWITCH_RATIO = 10.0


class PotentialModel(str, enum.Enum):
    SOFT_CORE = "soft_core"
    HEAVISIDE = "heaviside"
    EXACT = "exact"


@dataclass(frozen=True)
class DressingParams:
    """Rydberg dressing drive and pair-interaction constants.

    Any two of ``c6``, ``forster_delta_rad`` and ``x_c_m`` determine the third
    through C6 = -hbar * delta * x_c^6 / 4; if all three are given they must
    agree to 1e-9 relative.
    """

    omega_r_rad: float
    delta_rad: float
    c6: float | None = None
    forster_delta_rad: float | None = None
    x_c_m: float | None = None
    tau_rydberg_s: float | None = None
    n_principal: int | None = None
    far_off_resonance: bool = field(init=False, default=True)

    def __post_init__(self):
        if not self.omega_r_rad > 0:
            raise ConfigError("omega_r_rad must be positive")
        if self.delta_rad == 0:
            raise ConfigError("delta_rad must be non-zero")
        object.__setattr__(
            self, "far_off_resonance", abs(self.delta_rad) >= 10.0 * self.omega_r_rad
        )
        c6, dlt, xc = self.c6, self.forster_delta_rad, self.x_c_m
        if xc is not None and not xc > 0:
            raise ConfigError("x_c_m must be positive")
        if c6 is None and dlt is not None and xc is not None:
            object.__setattr__(self, "c6", c6_from_forster(dlt, xc))
        elif c6 is not None and dlt is not None and xc is None:
            if dlt == 0 or c6 == 0 or (c6 > 0) == (dlt > 0):
                raise ConfigError(
                    "c6 and forster_delta_rad must have opposite signs to define x_c"
                )
            object.__setattr__(self, "x_c_m", (-4.0 * c6 / (HBAR * dlt)) ** (1.0 / 6.0))
        elif c6 is not None and dlt is not None and xc is not None:
            expected = c6_from_forster(dlt, xc)
            if not math.isclose(c6, expected, rel_tol=1e-9):
                raise ConfigError(
                    f"c6={c6:.6e} inconsistent with forster_delta_rad and x_c_m "
                    f"(expected {expected:.6e})"
                )

    @classmethod
    def from_rc(cls, omega_r_rad, delta_rad, r_c_m, forster_delta_rad=None, **kw):
        """Choose C6 so the soft-core radius equals ``r_c_m``.

        C6 takes the sign implied by the Förster defect (positive when none is given).
        """
        c6 = 2.0 * HBAR * abs(delta_rad) * r_c_m**6
        if forster_delta_rad is not None and forster_delta_rad > 0:
            c6 = -c6
        return cls(omega_r_rad, delta_rad, c6=c6, forster_delta_rad=forster_delta_rad, **kw)


@dataclass(frozen=True)
class DerivedParams:
    v0_rad: float
    r_c_m: float | None
    tau_tilde_s: float | None
    epsilon: float


def c6_from_forster(delta_rad: float, x_c_m: float) -> float:
    if not x_c_m > 0:
        raise ConfigError("x_c_m must be positive")
    return -HBAR * delta_rad * x_c_m**6 / 4.0


def plateau_v0(p: DressingParams) -> float:
    return p.omega_r_rad**4 / (8.0 * abs(p.delta_rad) ** 3)


def rydberg_radius(p: DressingParams) -> float:
    if p.c6 is None:
        raise ConfigError("c6 is required to compute the Rydberg radius")
    return abs(p.c6 / (2.0 * HBAR * abs(p.delta_rad))) ** (1.0 / 6.0)


def enhanced_lifetime(p: DressingParams) -> float:
    if p.tau_rydberg_s is None:
        raise ConfigError("tau_rydberg_s is required for the enhanced lifetime")
    return 4.0 * p.delta_rad**2 / p.omega_r_rad**2 * p.tau_rydberg_s


def derived_params(p: DressingParams) -> DerivedParams:
    return DerivedParams(
        v0_rad=plateau_v0(p),
        r_c_m=rydberg_radius(p) if p.c6 is not None else None,
        tau_tilde_s=enhanced_lifetime(p) if p.tau_rydberg_s is not None else None,
        epsilon=p.omega_r_rad / (2.0 * p.delta_rad),
    )


def v_softcore(r, p: DressingParams):
    r = np.asarray(r, dtype=np.float64)
    rc = rydberg_radius(p)
    u = (r / rc) ** 6
    return plateau_v0(p) / (1.0 + u)


def v_heaviside(r, p: DressingParams, rel_tol: float = 1e-9):
    """Plateau V0 for r <= R_c (inclusive), zero beyond.

    ``rel_tol`` absorbs rounding so that a site at exactly R_c/a = integer
    counts as interacting.
    """
    r = np.asarray(r, dtype=np.float64)
    rc = rydberg_radius(p)
    return np.where(r <= rc * (1.0 + rel_tol), plateau_v0(p), 0.0)


def dipole_dipole(r, forster_delta_rad: float, x_c_m: float):
    """V_dd(r) = delta/2 - delta/2 sqrt(1 + (x_c/r)^6), in rad/s."""
    u = (x_c_m / np.asarray(r, dtype=np.float64)) ** 6
    # delta/2 (1 - sqrt(1+u)) rewritten without cancellation at large r
    return -0.5 * forster_delta_rad * u / (1.0 + np.sqrt(1.0 + u))


def single_atom_shift(omega_r_rad: float, delta_rad: float) -> float:
    """Dressed light shift of |e>: the 2-level eigenvalue connected to 0."""
    s = math.copysign(1.0, delta_rad)
    return omega_r_rad**2 / (2.0 * (delta_rad + s * math.hypot(delta_rad, omega_r_rad)))


def _ladder_matrices(vdd, delta, omega):
    vdd = np.atleast_1d(vdd)
    b = omega / math.sqrt(2.0)
    h = np.zeros(vdd.shape + (3, 3))
    h[..., 0, 1] = h[..., 1, 0] = b
    h[..., 1, 2] = h[..., 2, 1] = b
    h[..., 1, 1] = -delta
    h[..., 2, 2] = -2.0 * delta + vdd
    return h


def ladder_pair_shift(vdd, omega_r_rad: float, delta_rad: float):
    """Pair shift from the two-atom 3-level ladder.

    Basis {|ee>, (|er>+|re>)/sqrt 2, |rr>} with diagonal (0, -Delta,
    -2 Delta + V_dd) and couplings Omega/sqrt 2.  The eigenvalue adiabatically
    connected to |ee> keeps its rank in the spectrum (an irreducible
    tridiagonal matrix has no degeneracies), so it is the lowest level for
    Delta < 0 and the highest for Delta > 0.  The dense eigen-solve is polished
    by fixed-point iteration on the secular equation, which stays accurate when
    V_dd dwarfs Delta.
    """
    vdd = np.asarray(vdd, dtype=np.float64)
    shape = vdd.shape
    flat = vdd.reshape(-1)
    w = np.linalg.eigvalsh(_ladder_matrices(flat, delta_rad, omega_r_rad))
    lam = w[:, 0] if delta_rad < 0 else w[:, 2]
    b2 = 0.5 * omega_r_rad**2
    finite = np.isfinite(flat)
    lam = np.where(finite, lam, b2 / delta_rad)
    for _ in range(60):
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(finite, lam / (lam + 2.0 * delta_rad - flat), 0.0)
            new = b2 * (1.0 + tail) / (lam + delta_rad)
        ok = np.isfinite(new)
        done = np.all(np.abs(new - lam)[ok] <= 4e-16 * np.abs(new[ok]))
        lam = np.where(ok, new, lam)
        if done:
            break
    return (lam - 2.0 * single_atom_shift(omega_r_rad, delta_rad)).reshape(shape)


def _cardano_roots_double(vdd, delta, omega):
    d, v, o2 = delta, vdd.astype(np.complex128), omega**2
    inner = v**2 * (18 * d**2 - 18 * d * v + 4 * v**2 - 9 * o2) ** 2 - 16 * (
        3 * d**2 - 3 * d * v + v**2 + 3 * o2
    ) ** 3
    f = (18 * d * v * (d - v) + 4 * v**3 - 9 * v * o2 + np.sqrt(inner)) ** (1.0 / 3.0)
    q = d**2 - d * v + v**2 / 3 + o2
    w = np.exp(2j * np.pi / 3)
    return np.stack(
        [-d + v / 3 + 2 ** (2 / 3) / (f * w**k) * q + 2 ** (1 / 3) * f * w**k / 6 for k in range(3)],
        axis=-1,
    )


def _cardano_roots_mp(vdd, delta, omega):
    ratio = max(1.0, abs(vdd) / abs(delta))
    with mpmath.workdps(40 + int(math.ceil(6 * math.log10(ratio)))):
        d, v, o2 = mpmath.mpf(delta), mpmath.mpf(vdd), mpmath.mpf(omega) ** 2
        inner = v**2 * (18 * d**2 - 18 * d * v + 4 * v**2 - 9 * o2) ** 2 - 16 * (
            3 * d**2 - 3 * d * v + v**2 + 3 * o2
        ) ** 3
        f = mpmath.power(18 * d * v * (d - v) + 4 * v**3 - 9 * v * o2 + mpmath.sqrt(mpmath.mpc(inner)), mpmath.mpf(1) / 3)
        q = d**2 - d * v + v**2 / 3 + o2
        w = mpmath.expjpi(mpmath.mpf(2) / 3)
        c23, c13 = mpmath.cbrt(4), mpmath.cbrt(2)
        roots = [-d + v / 3 + c23 / (f * w**k) * q + c13 * f * w**k / 6 for k in range(3)]
        return np.array([complex(x) for x in roots])


def exact_closed_form(vdd, omega_r_rad: float, delta_rad: float):
    """Dressed |ee> energy from the closed-form cubic root, with branch selection.

    Returns the selected eigenvalue (not yet referenced to the single-atom
    shifts) as a complex array; the imaginary part is rounding residue.
    """
    vdd = np.atleast_1d(np.asarray(vdd, dtype=np.float64))
    roots = np.empty(vdd.shape + (3,), dtype=np.complex128)
    hard = np.abs(vdd) > _MP_SWITCH_RATIO * (abs(delta_rad) + omega_r_rad)
    if np.any(~hard):
        roots[~hard] = _cardano_roots_double(vdd[~hard], delta_rad, omega_r_rad)
    for idx in np.flatnonzero(hard):
        roots[idx] = _cardano_roots_mp(float(vdd[idx]), delta_rad, omega_r_rad)
    order = np.argsort(roots.real, axis=-1)
    pick = order[..., 0] if delta_rad < 0 else order[..., 2]
    return np.take_along_axis(roots, pick[..., None], axis=-1)[..., 0]


def v_exact(r, p: DressingParams, validate: bool = True, rtol: float = 1e-6):
    """Exact dressed pair potential including the 1/r^3 dipole-dipole regime.

    Every value is checked against :func:`ladder_pair_shift`; a mismatch or a
    non-real root raises :class:`NumericalBranchError`.
    """
    if p.forster_delta_rad is None or p.x_c_m is None:
        raise ConfigError("the exact potential needs forster_delta_rad and x_c_m")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0):
        raise ConfigError("the exact potential is defined for r > 0 only")
    shape = r.shape
    flat = r.reshape(-1)
    vdd = dipole_dipole(flat, p.forster_delta_rad, p.x_c_m)
    root = exact_closed_form(vdd, p.omega_r_rad, p.delta_rad)
    scale = np.maximum(np.abs(root), abs(p.delta_rad))
    bad = np.abs(root.imag) > rtol * scale
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericalBranchError(
            f"closed-form root not real at r={flat[i]:.6e} m", r=float(flat[i]), params=p
        )
    value = root.real - 2.0 * single_atom_shift(p.omega_r_rad, p.delta_rad)
    if validate:
        ref = ladder_pair_shift(vdd, p.omega_r_rad, p.delta_rad)
        tol = rtol * np.abs(ref) + 1e-9 * plateau_v0(p)
        off = np.abs(value - ref) > tol
        if np.any(off):
            i = int(np.flatnonzero(off)[0])
            raise NumericalBranchError(
                f"closed form disagrees with the ladder oracle at r={flat[i]:.6e} m "
                f"({value[i]:.9e} vs {ref[i]:.9e} rad/s)",
                r=float(flat[i]),
                params=p,
            )
    return value.reshape(shape)


def pair_potential(r, model: PotentialModel | str, p: DressingParams):
    model = PotentialModel(model)
    if model is PotentialModel.SOFT_CORE:
        return v_softcore(r, p)
    if model is PotentialModel.HEAVISIDE:
        return v_heaviside(r, p)
    return v_exact(r, p)


def coupling_matrix(positions, model: PotentialModel | str, p: DressingParams) -> np.ndarray:
    """Symmetric V_ij/hbar (rad/s) with zero diagonal for the given atom positions."""
    from .geometry import pair_distances

    dist = pair_distances(positions)
    n = len(dist)
    out = np.zeros_like(dist)
    if n < 2:
        return out
    iu = np.triu_indices(n, 1)
    r = dist[iu]
    if PotentialModel(model) is PotentialModel.EXACT:
        # lattice distances repeat; evaluate each distinct value once
        key = np.round(r / r.min(), 12)
        uniq, inv = np.unique(key, return_inverse=True)
        first = np.zeros(len(uniq), dtype=np.int64)
        first[inv[::-1]] = np.arange(len(r))[::-1]
        vals = v_exact(r[first], p)[inv]
    else:
        vals = pair_potential(r, model, p)
    out[iu] = vals
    out.T[iu] = vals
    return out


@dataclass(frozen=True)
class QuantumDefectTable:
    """Rydberg-Ritz coefficients per series: nu(n) = d0 + d2/(n-d0)^2 + d4/(n-d0)^4 + ..."""

    series: dict
    hartree_energy_J: float
    description: str = ""

    def __post_init__(self):
        if not self.hartree_energy_J > 0:
            raise DataError("hartree_energy_J must be positive")
        for name, coeffs in self.series.items():
            if len(coeffs) == 0:
                raise DataError(f"series {name} has no coefficients")


def finite_mass_hartree(isotope_mass_u: float = SR88_MASS_U) -> float:
    return HARTREE_J / (1.0 + ELECTRON_MASS_U / isotope_mass_u)


def load_quantum_defects(path) -> QuantumDefectTable:
    with open(path) as fh:
        raw = json.load(fh)
    try:
        series = {k: tuple(float(c) for c in v) for k, v in raw["series"].items()}
    except (KeyError, AttributeError, TypeError) as exc:
        raise DataError(f"{path}: malformed quantum-defect file ({exc})") from exc
    eh = raw.get("hartree_energy_J")
    if eh is None:
        eh = finite_mass_hartree(raw.get("isotope_mass_u", SR88_MASS_U))
    return QuantumDefectTable(series, float(eh), raw.get("description", ""))


def example_quantum_defects() -> QuantumDefectTable:
    return load_quantum_defects(Path(__file__).with_name("data") / "sr_triplet_quantum_defects.json")


def quantum_defect(n: int, coeffs) -> float:
    d0 = coeffs[0]
    return d0 + sum(c / (n - d0) ** (2 * k) for k, c in enumerate(coeffs[1:], start=1))


def term_energy(n: int, coeffs, hartree_energy_J: float) -> float:
    return -hartree_energy_J / (2.0 * (n - quantum_defect(n, coeffs)) ** 2)


@dataclass(frozen=True)
class ForsterDefect:
    n: int
    delta_j_rad: dict
    weighted_rad: float


def forster_defect(n: int, table: QuantumDefectTable) -> ForsterDefect:
    """Förster defects of n 3S1 + n 3S1 -> n 3P_J + (n-1) 3P_J and their (2J+1) average."""
    if n < 2:
        raise DataError("principal quantum number must be >= 2")
    needed = ["3S1", "3P0", "3P1", "3P2"]
    missing = [s for s in needed if s not in table.series]
    if missing:
        raise DataError(f"quantum-defect table lacks series {missing}")
    eh = table.hartree_energy_J
    us = term_energy(n, table.series["3S1"], eh)
    delta_j = {}
    for j in (0, 1, 2):
        coeffs = table.series[f"3P{j}"]
        e = term_energy(n, coeffs, eh) + term_energy(n - 1, coeffs, eh) - 2.0 * us
        delta_j[j] = e / HBAR
    weighted = sum((2 * j + 1) * d for j, d in delta_j.items()) / 9.0
    return ForsterDefect(n, delta_j, weighted)
