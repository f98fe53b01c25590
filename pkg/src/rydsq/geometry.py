"""Lattice site sets and occupied-atom configurations.

Sites are enumerated row-major (last axis fastest); the site with index
vector ``(i0, ..., id-1)`` sits at ``(i0, ..., id-1) * a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.spatial.distance import cdist

from .errors import CapacityError, DomainError
from .rng import trial_seed, uniform_stream

FillMode = Literal["full", "random", "compacted", "rescaled"]

# Sites are materialised as an (M, d) float array; beyond this it stops being a
# desk-scale computation.
MAX_SITES = 50_000_000


@dataclass(frozen=True)
class LatticeSpec:
    dimension: int
    extents: tuple[int, ...]
    lattice_constant_m: float

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if self.dimension not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if len(self.extents) != self.dimension:
            raise DomainError(
                f"extents {self.extents} do not match dimension {self.dimension}"
            )
        if any(e < 1 for e in self.extents):
            raise DomainError(f"every extent must be >= 1, got {self.extents}")
        if not self.lattice_constant_m > 0:
            raise DomainError("lattice_constant_m must be positive")

    @property
    def n_sites(self) -> int:
        return math.prod(self.extents)


@dataclass(frozen=True)
class FillingSpec:
    p_fill: float
    master_seed: int = 0
    trial_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_fill <= 1.0:
            raise DomainError(f"p_fill must lie in [0, 1], got {self.p_fill}")


@dataclass(frozen=True)
class SiteSet:
    spec: LatticeSpec
    coords: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.coords)


@dataclass(frozen=True)
class AtomConfiguration:
    positions: np.ndarray = field(repr=False)
    source: LatticeSpec
    fill_mode: FillMode
    site_indices: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    @property
    def dimension(self) -> int:
        return self.source.dimension


def hypercubic_extents(n_sites: int, dimension: int) -> tuple[int, ...]:
    """Extents with product ``n_sites`` that are as equal as possible.

    Used when a 2D/3D lattice is requested by total size only.
    """
    if n_sites < 1:
        raise DomainError("n_sites must be >= 1")
    best = None
    if dimension == 1:
        return (n_sites,)
    divisors = [d for d in range(1, n_sites + 1) if n_sites % d == 0]
    if dimension == 2:
        for d in divisors:
            cand = tuple(sorted((d, n_sites // d)))
            if best is None or cand[1] - cand[0] < best[1] - best[0]:
                best = cand
        return best
    for d1 in divisors:
        rest = n_sites // d1
        for d2 in divisors:
            if rest % d2:
                continue
            cand = tuple(sorted((d1, d2, rest // d2)))
            if best is None or cand[2] - cand[0] < best[2] - best[0]:
                best = cand
    return best


def build_lattice(spec: LatticeSpec) -> SiteSet:
    m = spec.n_sites
    if m > MAX_SITES:
        raise CapacityError(f"lattice with {m} sites exceeds the limit of {MAX_SITES}")
    grids = np.indices(spec.extents).reshape(spec.dimension, -1).T
    return SiteSet(spec=spec, coords=grids.astype(np.float64) * spec.lattice_constant_m)


def full_filling(sites: SiteSet) -> AtomConfiguration:
    idx = np.arange(len(sites))
    return AtomConfiguration(sites.coords.copy(), sites.spec, "full", idx)


def fill_random(sites: SiteSet, filling: FillingSpec) -> AtomConfiguration:
    """Occupy each site independently with probability ``p_fill``.

    One uniform draw per site, in site order, from the SplitMix64 substream
    of ``(master_seed, trial_index)``.
    """
    seed = trial_seed(filling.master_seed, filling.trial_index)
    u = uniform_stream(seed, len(sites))
    idx = np.flatnonzero(u < filling.p_fill)
    return AtomConfiguration(sites.coords[idx], sites.spec, "random", idx)


def fill_compacted(sites: SiteSet, n_atoms: int) -> AtomConfiguration:
    """Occupy the first ``n_atoms`` sites in row-major order (rearranged tweezers)."""
    if n_atoms > len(sites):
        raise CapacityError(f"cannot place {n_atoms} atoms on {len(sites)} sites")
    if n_atoms < 0:
        raise DomainError("n_atoms must be non-negative")
    idx = np.arange(n_atoms)
    return AtomConfiguration(sites.coords[idx], sites.spec, "compacted", idx)


def rescaled_uniform(spec: LatticeSpec, n_atoms: int) -> AtomConfiguration:
    """Fully filled 1D chain of ``n_atoms`` with gap ``M a / N``."""
    if spec.dimension != 1:
        raise DomainError("the rescaled-lattice model is only defined for 1D lattices")
    if not 1 <= n_atoms <= spec.n_sites:
        raise CapacityError(f"n_atoms must lie in [1, {spec.n_sites}], got {n_atoms}")
    gap = spec.n_sites * spec.lattice_constant_m / n_atoms
    pos = (np.arange(n_atoms, dtype=np.float64) * gap)[:, None]
    return AtomConfiguration(pos, spec, "rescaled", None)


def tweezer_block(dimension: int, n_atoms: int, lattice_constant_m: float) -> AtomConfiguration:
    """Fully filled hypercubic block of side ceil(N^(1/d)), trimmed row-major to N atoms."""
    side = 1
    while side**dimension < n_atoms:
        side += 1
    spec = LatticeSpec(dimension, (side,) * dimension, lattice_constant_m)
    return fill_compacted(build_lattice(spec), n_atoms)


def pair_distances(positions: np.ndarray) -> np.ndarray:
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim == 1:
        pos = pos[:, None]
    if pos.shape[1] == 1:
        x = pos[:, 0]
        return np.abs(x[:, None] - x[None, :])
    return cdist(pos, pos)
