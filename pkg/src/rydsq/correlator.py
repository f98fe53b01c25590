"""Post-sequence collective-spin correlators of the spin-echo twisting sequence.

With phases phi_ij = V_ij tau / 2 and J = sum(sigma)/2:

    <Jz>       = -1/2 sum_i prod_{k!=i} cos phi_ik
    <Jx^2>     = N/4 + 1/4 sum_{i<j} [prod_{k!=i,j} cos(phi_ik - phi_jk)
                                      - prod_{k!=i,j} cos(phi_ik + phi_jk)]
    <Jy^2>     = N/4
    <JxJy+JyJx> = -1/2 sum_{i!=j} sin phi_ij prod_{k!=i,j} cos phi_ik
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

EPS_PHASE = 1e-9
# Direct O(N^3) evaluation below this size; the blocked log-series path above.
DIRECT_MAX_N = 64
# Phases above this magnitude are handled exactly in the fast path; below it
# log(1 +- tan a tan b) is expanded in a rapidly converging series.
STRONG_PHASE = 0.2


@dataclass(frozen=True)
class Correlators:
    jz: float
    jx2: float
    jy2: float
    jxjy_sym: float
    n_atoms: int

    @classmethod
    def coherent(cls, n_atoms: int) -> "Correlators":
        return cls(-0.5 * n_atoms, 0.25 * n_atoms, 0.25 * n_atoms, 0.0, n_atoms)

    def as_tuple(self):
        return (self.jz, self.jx2, self.jy2, self.jxjy_sym)


@dataclass(frozen=True)
class PhaseMatrix:
    """Pair phases phi_ij = V_ij tau / 2 with sub-threshold pairs zeroed.

    Dropping a pair replaces a factor cos(phi) >= 1 - eps^2/2 by one, and each
    product has fewer than N such factors, so the error per product is below
    N eps^2 / 2 (well inside the documented N eps bound).
    """

    phi: np.ndarray = field(repr=False)
    eps_phase: float
    n_skipped: int

    @classmethod
    def from_couplings(cls, couplings, tau_s: float, eps_phase: float = EPS_PHASE):
        if tau_s < 0:
            raise DomainError("tau_s must be non-negative")
        v = np.asarray(couplings, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DomainError("couplings must be a square matrix")
        phi = v * (0.5 * tau_s)
        small = np.abs(phi) < eps_phase
        np.fill_diagonal(small, False)
        n_skipped = int(np.count_nonzero(np.triu(small & (phi != 0), 1)))
        phi = np.where(small, 0.0, phi)
        np.fill_diagonal(phi, 0.0)
        return cls(phi, eps_phase, n_skipped)


def _direct(phi: np.ndarray):
    n = len(phi)
    c = np.cos(phi)
    s = np.sin(phi)
    jz = -0.5 * np.prod(c, axis=1).sum()
    jx2 = 0.25 * n
    cross = 0.0
    cols = np.arange(n)
    for i in range(n):
        ci = np.broadcast_to(c[i], (n, n)).copy()
        ci[cols, cols] = 1.0  # k = j excluded (k = i already has cos 0 = 1)
        pex = np.prod(ci, axis=1)
        cross -= 0.5 * np.dot(np.delete(s[i], i), np.delete(pex, i))
        if i == n - 1:
            continue
        a = phi[i]
        rest = phi[i + 1 :]
        minus = np.cos(a - rest)
        plus = np.cos(a + rest)
        minus[:, i] = plus[:, i] = 1.0
        idx = np.arange(len(rest))
        minus[idx, idx + i + 1] = plus[idx, idx + i + 1] = 1.0
        jx2 += 0.25 * (np.prod(minus, axis=1) - np.prod(plus, axis=1)).sum()
    return jz, jx2, cross


def _log_abs_sign(x):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(x)), (x < 0)


def _fast(phi: np.ndarray, strong: float = STRONG_PHASE):
    """O(N^3 / BLAS) evaluation in log space.

    Triples (i, j, k) whose phases phi_ik and phi_jk are both weak use
    log cos(a -+ b) = log cos a + log cos b + log(1 +- tan a tan b), whose
    k-sums become matrix products of Hadamard powers of tan(phi).  Triples
    touching a strong phase are accumulated exactly, one k at a time.
    """
    n = len(phi)
    c = np.cos(phi)
    s = np.sin(phi)
    lc, negc = _log_abs_sign(c)

    # rows: log|prod_{k!=i} c_ik| and its sign
    rowlog = lc.sum(axis=1)
    rowneg = negc.sum(axis=1)
    jz = -0.5 * np.sum(np.where(rowneg % 2, -1.0, 1.0) * np.exp(rowlog))

    with np.errstate(invalid="ignore"):
        pex = np.exp(rowlog[:, None] - lc)
    pex *= np.where((rowneg[:, None] - negc) % 2, -1.0, 1.0)
    bad = ~np.isfinite(pex)
    if np.any(bad):
        for i, j in zip(*np.nonzero(bad)):
            pex[i, j] = np.prod(np.delete(c[i], [i, j]))
    np.fill_diagonal(pex, 0.0)
    cross = -0.5 * np.sum(s * pex)

    weak = np.abs(phi) <= strong
    np.fill_diagonal(weak, False)
    wf = weak.astype(np.float64)
    lw = np.where(weak, lc, 0.0)
    t = np.where(weak, np.tan(phi), 0.0)

    base = lw @ wf
    base = base + base.T
    # cos(a - b) = cos a cos b (1 + tan a tan b), cos(a + b) = cos a cos b (1 - tan a tan b);
    # sum_k log(1 - x_k) = -sum_m X_m / m,  sum_k log(1 + x_k) = -sum_m (-1)^m X_m / m
    x_max = float(np.max(np.abs(t))) ** 2 if n > 1 else 0.0
    lminus = base.copy()
    lplus = base.copy()
    if x_max > 0:
        terms = max(1, int(math.ceil(math.log(1e-17) / math.log(x_max))))
        tm = np.ones_like(t)
        for m in range(1, terms + 1):
            tm = tm * t
            xm = (tm @ tm) / m
            lplus -= xm
            if m % 2:
                lminus += xm
            else:
                lminus -= xm

    negm = np.zeros((n, n), dtype=np.int64)
    negp = np.zeros((n, n), dtype=np.int64)
    am = np.zeros((n, n))
    ap = np.zeros((n, n))
    strong_mask = ~weak
    np.fill_diagonal(strong_mask, False)
    for k in range(n):
        rows = np.flatnonzero(strong_mask[:, k])
        if rows.size == 0:
            continue
        a = phi[rows, k][:, None]
        b = phi[:, k][None, :]
        lm, nm = _log_abs_sign(np.cos(a - b))
        lp, np_ = _log_abs_sign(np.cos(a + b))
        keep = np.ones((rows.size, n), dtype=bool)
        keep[:, k] = False
        keep[np.arange(rows.size), rows] = False
        # pairs with both rows strong at k are visited twice; keep j > i only
        both = strong_mask[:, k][None, :] & (np.arange(n)[None, :] < rows[:, None])
        keep &= ~both
        am[rows] += np.where(keep, lm, 0.0)
        ap[rows] += np.where(keep, lp, 0.0)
        negm[rows] += keep & nm
        negp[rows] += keep & np_
    lminus += am + am.T
    lplus += ap + ap.T
    sm = np.where((negm + negm.T) % 2, -1.0, 1.0)
    sp = np.where((negp + negp.T) % 2, -1.0, 1.0)

    with np.errstate(invalid="ignore", over="ignore"):
        same = sm * np.exp(lplus) * np.expm1(lminus - lplus)
        opposite = sm * (np.exp(lminus) + np.exp(lplus))
    bracket = np.where(sm == sp, same, opposite)
    bracket = np.where(np.isfinite(bracket), bracket, 0.0)
    np.fill_diagonal(bracket, 0.0)
    jx2 = 0.25 * n + 0.125 * bracket.sum()
    return jz, jx2, cross


def correlators_from_phases(phases, method: str = "auto") -> Correlators:
    phi = phases.phi if isinstance(phases, PhaseMatrix) else np.asarray(phases, dtype=np.float64)
    n = len(phi)
    if n == 0:
        return Correlators(0.0, 0.0, 0.0, 0.0, 0)
    if method == "auto":
        method = "direct" if n <= DIRECT_MAX_N else "fast"
    if method == "direct":
        jz, jx2, cross = _direct(phi)
    elif method == "fast":
        jz, jx2, cross = _fast(phi)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Correlators(float(jz), float(max(jx2, 0.0)), 0.25 * n, float(cross), n)


def correlators_from_couplings(couplings, tau_s: float, eps_phase: float = EPS_PHASE,
                               method: str = "auto") -> Correlators:
    return correlators_from_phases(PhaseMatrix.from_couplings(couplings, tau_s, eps_phase), method)


def correlators_exact(config, model, p, tau_s: float, eps_phase: float = EPS_PHASE) -> Correlators:
    from .interaction import coupling_matrix

    v = coupling_matrix(config.positions, model, p)
    return correlators_from_couplings(v, tau_s, eps_phase)


def correlators_all_to_all(n_atoms: int, v0_rad: float, tau_s: float) -> Correlators:
    if n_atoms < 1:
        raise DomainError("n_atoms must be >= 1")
    n = n_atoms
    phi = 0.5 * v0_rad * tau_s
    c = math.cos(phi)
    return Correlators(
        -0.5 * n * c ** (n - 1),
        0.25 * n + n * (n - 1) / 8.0 * (1.0 - math.cos(2 * phi) ** (n - 2)) if n > 1 else 0.25,
        0.25 * n,
        -0.5 * n * (n - 1) * math.sin(phi) * c ** (n - 2) if n > 1 else 0.0,
        n,
    )
