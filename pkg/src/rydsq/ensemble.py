"""Monte Carlo over random lattice fillings, and geometry comparisons."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .correlator import correlators_from_couplings
from .errors import DomainError
from .geometry import (
    FillingSpec,
    LatticeSpec,
    build_lattice,
    fill_compacted,
    fill_random,
    full_filling,
    rescaled_uniform,
    tweezer_block,
)
from .interaction import DressingParams, PotentialModel, coupling_matrix, enhanced_lifetime
from .squeezing import TauScanSpec, decay_correct, optimize_couplings, stability, xi2

Mode = Literal["per_trial_optimized", "fixed_params"]
NU_CLOCK_HZ = 429.228e12


@dataclass(frozen=True)
class EnsembleSpec:
    lattice: LatticeSpec
    p_fill: float
    n_trials: int
    mode: Mode = "per_trial_optimized"
    fixed_tau_s: float | None = None
    fixed_theta_rad: float | None = None
    master_seed: int = 0
    scan: TauScanSpec = field(default_factory=TauScanSpec)
    bin_width: int = 25

    def __post_init__(self):
        if self.n_trials < 1:
            raise DomainError("n_trials must be >= 1")
        if not 0 <= self.p_fill <= 1:
            raise DomainError("p_fill must lie in [0, 1]")
        if self.mode not in ("per_trial_optimized", "fixed_params"):
            raise DomainError(f"unknown ensemble mode {self.mode!r}")
        fixed = self.fixed_tau_s is not None and self.fixed_theta_rad is not None
        partial = (self.fixed_tau_s is None) != (self.fixed_theta_rad is None)
        if self.mode == "fixed_params" and not fixed:
            raise DomainError("fixed_params mode needs fixed_tau_s and fixed_theta_rad")
        if self.mode == "per_trial_optimized" and (fixed or partial):
            raise DomainError("fixed_tau_s/fixed_theta_rad are only valid in fixed_params mode")
        if self.bin_width < 1:
            raise DomainError("bin_width must be >= 1")


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    n_atoms: int
    xi2_min: float
    tau_s: float
    theta_rad: float
    xi2_bar: float
    flagged: bool = False
    edge_warning: bool = False


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values):
        v = np.asarray(values, dtype=np.float64)
        return cls(float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0,
                   float(v.min()), float(v.max()))


@dataclass(frozen=True)
class EnsembleStats:
    records: list[TrialRecord] = field(repr=False)
    xi2: Summary
    xi2_bar: Summary
    tau_s: Summary
    theta_rad: Summary
    mean_n: float
    bins: list[tuple[int, int, float]] = field(repr=False)
    tau_tilde_s: float | None = None

    @property
    def merit(self) -> float | None:
        """Enhanced lifetime over the mean twisting time."""
        if self.tau_tilde_s is None or self.tau_s.mean <= 0:
            return None
        return self.tau_tilde_s / self.tau_s.mean


def _records_stats(records, bin_width, tau_tilde_s=None):
    ok = [r for r in records if not r.flagged] or records
    bins = {}
    for r in records:
        lo = (r.n_atoms // bin_width) * bin_width
        bins.setdefault(lo, []).append(r.xi2_min)
    return EnsembleStats(
        records,
        Summary.of([r.xi2_min for r in records]),
        Summary.of([r.xi2_bar for r in records]),
        Summary.of([r.tau_s for r in ok]),
        Summary.of([r.theta_rad for r in ok]),
        float(np.mean([r.n_atoms for r in records])),
        [(lo, len(v), float(np.mean(v))) for lo, v in sorted(bins.items())],
        tau_tilde_s,
    )


def _tau_tilde(p: DressingParams):
    return enhanced_lifetime(p) if p.tau_rydberg_s is not None else None


def evaluate_configuration(positions, model, p: DressingParams, trial_index=0, *,
                           mode: Mode = "per_trial_optimized", scan: TauScanSpec = TauScanSpec(),
                           fixed_tau_s=None, fixed_theta_rad=None) -> TrialRecord:
    n = len(positions)
    tau_tilde = _tau_tilde(p)
    if n < 2:
        # nothing to twist: coherent-state baseline, flagged when empty
        tau = fixed_tau_s if mode == "fixed_params" else 0.0
        theta = fixed_theta_rad if mode == "fixed_params" else 0.0
        return TrialRecord(trial_index, n, 1.0, tau, theta, 1.0, flagged=n == 0)
    v = coupling_matrix(positions, model, p)
    if mode == "fixed_params":
        c = correlators_from_couplings(v, fixed_tau_s)
        val = xi2(c, fixed_theta_rad)
        bar = decay_correct(val, tau_tilde, fixed_tau_s) if tau_tilde else val
        return TrialRecord(trial_index, n, val, fixed_tau_s, fixed_theta_rad, bar)
    res = optimize_couplings(v, scan, tau_tilde)
    return TrialRecord(trial_index, n, res.xi2_min, res.tau_opt_s, res.theta_min_rad,
                       res.xi2_bar, edge_warning=res.edge_warning)


def _trial(args):
    spec, model, p, t = args
    sites = build_lattice(spec.lattice)
    cfg = fill_random(sites, FillingSpec(spec.p_fill, spec.master_seed, t))
    return evaluate_configuration(
        cfg.positions, model, p, t, mode=spec.mode, scan=spec.scan,
        fixed_tau_s=spec.fixed_tau_s, fixed_theta_rad=spec.fixed_theta_rad,
    )


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))  # ordered, so merging is deterministic


def run_ensemble(spec: EnsembleSpec, model: PotentialModel | str, p: DressingParams,
                 workers: int = 1) -> EnsembleStats:
    model = PotentialModel(model)
    records = _map(_trial, [(spec, model, p, t) for t in range(spec.n_trials)], workers)
    return _records_stats(records, spec.bin_width, _tau_tilde(p))


@dataclass(frozen=True)
class GeometrySpec:
    """One geometry of a stability comparison.

    ``fill_mode``: 'full' (all M sites), 'random' (each site with p_fill),
    'compacted' (first n_atoms row-major sites), 'tweezer' (hypercubic block of
    n_atoms) or 'rescaled' (1D chain of n_atoms with gap M a / N).
    """

    lattice: LatticeSpec
    fill_mode: Literal["full", "random", "compacted", "tweezer", "rescaled"]
    p_fill: float = 1.0
    n_atoms: int | None = None
    label: str = ""

    def __post_init__(self):
        if self.fill_mode in ("compacted", "tweezer", "rescaled") and self.n_atoms is None:
            raise DomainError(f"fill mode {self.fill_mode!r} needs n_atoms")


@dataclass(frozen=True)
class StabilityRow:
    label: str
    dimension: int
    fill_mode: str
    m_sites: int
    mean_n: float
    xi2_mean: float
    xi2_bar_mean: float
    sigma: float


def geometry_positions(g: GeometrySpec, seed: int, t: int):
    if g.fill_mode == "random":
        return fill_random(build_lattice(g.lattice), FillingSpec(g.p_fill, seed, t)).positions
    if g.fill_mode == "full":
        return full_filling(build_lattice(g.lattice)).positions
    if g.fill_mode == "compacted":
        return fill_compacted(build_lattice(g.lattice), g.n_atoms).positions
    if g.fill_mode == "tweezer":
        return tweezer_block(g.lattice.dimension, g.n_atoms, g.lattice.lattice_constant_m).positions
    if g.fill_mode == "rescaled":
        return rescaled_uniform(g.lattice, g.n_atoms).positions
    raise DomainError(f"unknown fill mode {g.fill_mode!r}")


def _geometry_trial(args):
    g, model, p, scan, seed, t = args
    return evaluate_configuration(geometry_positions(g, seed, t), model, p, t, scan=scan)


def geometry_sweep(geometries, p: DressingParams, n_trials: int = 1, *,
                   model: PotentialModel | str = PotentialModel.SOFT_CORE,
                   scan: TauScanSpec = TauScanSpec(), master_seed: int = 0,
                   nu_clock_hz: float = NU_CLOCK_HZ, t_interrogation_s: float = 1.0,
                   tau_avg_s: float = 1.0, decay: bool = False, workers: int = 1) -> list[StabilityRow]:
    """Mean squeezing per geometry and the resulting clock instability.

    Deterministic geometries run a single trial regardless of ``n_trials``.
    """
    model = PotentialModel(model)
    rows = []
    for g in geometries:
        trials = n_trials if g.fill_mode == "random" else 1
        recs = _map(_geometry_trial, [(g, model, p, scan, master_seed, t) for t in range(trials)], workers)
        mean_n = float(np.mean([r.n_atoms for r in recs]))
        x2 = float(np.mean([r.xi2_min for r in recs]))
        xb = float(np.mean([r.xi2_bar for r in recs]))
        xi = float(np.mean([math.sqrt(r.xi2_bar if decay else r.xi2_min) for r in recs]))
        sigma = stability(xi, mean_n, nu_clock_hz, t_interrogation_s, tau_avg_s) if mean_n > 0 else math.inf
        rows.append(StabilityRow(g.label or g.fill_mode, g.lattice.dimension, g.fill_mode,
                                 g.lattice.n_sites, mean_n, x2, xb, sigma))
    return rows
