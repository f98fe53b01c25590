"""JSON run configuration.

Key names carry their units.  Frequencies are given as cycle frequencies
(``*_hz``) and converted to angular units on the way in.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .geometry import LatticeSpec, hypercubic_extents
from .interaction import DressingParams, PotentialModel
from .squeezing import TauScanSpec

TWO_PI = 2.0 * math.pi


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DressingConfig(_Strict):
    omega_r_hz: float = Field(gt=0)
    delta_hz: float
    forster_delta_hz: float | None = None
    c6_j_m6: float | None = None
    x_c_m: float | None = Field(default=None, gt=0)
    rc_over_a: float | None = Field(default=None, gt=0)
    tau_rydberg_s: float | None = Field(default=None, gt=0)
    n_principal: int | None = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _one_length_scale(self):
        if self.delta_hz == 0:
            raise ValueError("delta_hz must be non-zero")
        if self.rc_over_a is not None and self.c6_j_m6 is not None:
            raise ValueError("give either rc_over_a or c6_j_m6, not both")
        return self

    def to_params(self, lattice_constant_m: float, delta_hz: float | None = None) -> DressingParams:
        """Angular-unit parameters; ``delta_hz`` overrides the detuning with C6 held fixed."""
        omega = TWO_PI * self.omega_r_hz
        delta = TWO_PI * (self.delta_hz if delta_hz is None else delta_hz)
        fd = None if self.forster_delta_hz is None else TWO_PI * self.forster_delta_hz
        kw = dict(tau_rydberg_s=self.tau_rydberg_s, n_principal=self.n_principal)
        c6, xc = self.c6_j_m6, self.x_c_m
        if self.rc_over_a is not None:
            # C6 is pinned by R_c at the configured detuning
            c6 = DressingParams.from_rc(omega, TWO_PI * self.delta_hz,
                                        self.rc_over_a * lattice_constant_m, forster_delta_rad=fd).c6
        return DressingParams(omega, delta, c6=c6, forster_delta_rad=fd, x_c_m=xc, **kw)


class LatticeConfig(_Strict):
    dimension: Literal[1, 2, 3] = 1
    extents: list[int] | None = None
    n_sites: int | None = Field(default=None, ge=1)
    lattice_constant_m: float = Field(gt=0)

    @model_validator(mode="after")
    def _size(self):
        if (self.extents is None) == (self.n_sites is None):
            raise ValueError("give exactly one of extents or n_sites")
        return self

    def to_spec(self) -> LatticeSpec:
        ext = self.extents or hypercubic_extents(self.n_sites, self.dimension)
        return LatticeSpec(self.dimension, tuple(ext), self.lattice_constant_m)


class ScanConfig(_Strict):
    tau_lo_s: float = Field(default=0.0, ge=0)
    tau_hi_s: float | None = Field(default=None, gt=0)
    coarse_points: int = Field(default=24, ge=8)
    refine_rel_tol: float = Field(default=1e-3, gt=0, lt=1)
    max_extensions: int = Field(default=3, ge=0)

    def to_spec(self) -> TauScanSpec:
        return TauScanSpec(self.tau_lo_s, self.tau_hi_s, self.coarse_points,
                           self.refine_rel_tol, self.max_extensions)


class EnsembleConfig(_Strict):
    p_fill: float = Field(default=1.0, ge=0, le=1)
    n_trials: int = Field(default=1, ge=1)
    mode: Literal["per_trial_optimized", "fixed_params"] = "per_trial_optimized"
    fixed_tau_s: float | None = Field(default=None, gt=0)
    fixed_theta_rad: float | None = None
    fixed_from_fits: bool = False
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    bin_width: int = Field(default=25, ge=1)


class SqueezeConfig(_Strict):
    fill_mode: Literal["full", "random", "compacted", "tweezer", "rescaled"] = "full"
    p_fill: float = Field(default=1.0, ge=0, le=1)
    n_atoms: int | None = Field(default=None, ge=1)
    trial_index: int = Field(default=0, ge=0)


class SweepConfig(_Strict):
    axis: Literal["p_fill", "detuning", "rc", "dimension"]
    values: list[float] = Field(min_length=1)
    compare_fixed: bool = False
    n_atoms: int | None = Field(default=None, ge=2)


class GeometryConfig(_Strict):
    label: str = ""
    dimension: Literal[1, 2, 3] = 1
    extents: list[int] | None = None
    n_sites: int | None = Field(default=None, ge=1)
    fill_mode: Literal["full", "random", "compacted", "tweezer", "rescaled"] = "full"
    p_fill: float = Field(default=1.0, ge=0, le=1)
    n_atoms: int | None = Field(default=None, ge=1)


class StabilityConfig(_Strict):
    nu_clock_hz: float = Field(default=429.228e12, gt=0)
    t_interrogation_s: float = Field(default=1.0, gt=0)
    tau_avg_s: float = Field(default=1.0, gt=0)
    decay: bool = False
    geometries: list[GeometryConfig] = Field(default_factory=list)


class ForsterConfig(_Strict):
    n: int = Field(ge=2)
    quantum_defects_path: str | None = None


class FitConfig(_Strict):
    rc_over_a: float = Field(gt=0)
    x: float = Field(default=0.5, ge=0, le=1)
    m_sites: int | None = Field(default=None, ge=1)


class OracleConfig(_Strict):
    couplings_hz: list[list[float]]
    onsite_detunings_hz: list[float] | None = None
    tau_s: float = Field(ge=0)


class OutputConfig(_Strict):
    prefix: str | None = None


class RunConfig(_Strict):
    dressing: DressingConfig | None = None
    lattice: LatticeConfig | None = None
    potential: PotentialModel = PotentialModel.SOFT_CORE
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    scan: ScanConfig = Field(default_factory=ScanConfig)
    squeeze: SqueezeConfig = Field(default_factory=SqueezeConfig)
    sweep: SweepConfig | None = None
    stability: StabilityConfig = Field(default_factory=StabilityConfig)
    forster: ForsterConfig | None = None
    fit: FitConfig | None = None
    oracle: OracleConfig | None = None
    output: OutputConfig = Field(default_factory=OutputConfig)
    workers: int = Field(default=1, ge=1)

    def require(self, *sections: str):
        missing = [s for s in sections if getattr(self, s) is None]
        if missing:
            raise ConfigError(f"config is missing required section(s): {', '.join(missing)}")

    def params(self, delta_hz: float | None = None) -> DressingParams:
        self.require("dressing", "lattice")
        return self.dressing.to_params(self.lattice.lattice_constant_m, delta_hz)


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_describe(exc)}") from exc


def load_config(path) -> tuple[RunConfig, str]:
    """Parsed config and the sha256 of its bytes."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data.decode("utf-8")), hashlib.sha256(data).hexdigest()
