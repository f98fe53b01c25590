"""Command-line entry point: ``rydsq <command> --config run.json [--out prefix]``.

Every command writes a CSV table (stdout, or ``<prefix>.csv``) and, with an
output prefix, a JSON summary carrying the config hash, seed and version.
Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 capacity error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .ensemble import (
    EnsembleSpec,
    GeometrySpec,
    evaluate_configuration,
    geometry_positions,
    geometry_sweep,
    run_ensemble,
)
from .errors import ConfigError, RydsqError
from .fits import FitInputs, fixed_params_from_fits, tau_fit, theta_fit, xi2_fit
from .geometry import LatticeSpec, hypercubic_extents
from .heaviside import correlators_heaviside_1d
from .interaction import (
    PotentialModel,
    derived_params,
    example_quantum_defects,
    forster_defect,
    load_quantum_defects,
)
from .oracle import SequenceSpec, sequence_moments
from .squeezing import optimize_scan

TWO_PI = 2.0 * math.pi
# Lattices beyond this many sites only run with --slow.
SLOW_SITES = 2000


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17e")
    return "" if v is None else str(v)


def write_csv(rows, columns, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def _seed(cfg: RunConfig, args) -> int:
    return args.seed if args.seed is not None else cfg.ensemble.master_seed


def _workers(cfg: RunConfig, args) -> int:
    return args.workers if args.workers is not None else cfg.workers


def _guard_size(n_sites: int, args):
    if n_sites > SLOW_SITES and not args.slow:
        raise ConfigError(f"{n_sites} lattice sites exceeds {SLOW_SITES}; rerun with --slow")


def _geometry(cfg: RunConfig) -> GeometrySpec:
    sq = cfg.squeeze
    return GeometrySpec(cfg.lattice.to_spec(), sq.fill_mode, sq.p_fill, sq.n_atoms)


def _squeeze_row(rec, extra=None):
    row = dict(n_atoms=rec.n_atoms, xi2_min=rec.xi2_min, theta_rad=rec.theta_rad,
               tau_opt_s=rec.tau_s, xi2_bar=rec.xi2_bar, edge_warning=rec.edge_warning)
    row.update(extra or {})
    return row


def cmd_squeeze(cfg: RunConfig, args):
    cfg.require("dressing", "lattice")
    p = cfg.params()
    g = _geometry(cfg)
    _guard_size(g.lattice.n_sites, args)
    pos = geometry_positions(g, _seed(cfg, args), cfg.squeeze.trial_index)
    rec = evaluate_configuration(pos, cfg.potential, p, scan=cfg.scan.to_spec())
    d = derived_params(p)
    merit = d.tau_tilde_s / rec.tau_s if d.tau_tilde_s and rec.tau_s > 0 else None
    row = _squeeze_row(rec, dict(merit=merit))
    cols = ["n_atoms", "xi2_min", "theta_rad", "tau_opt_s", "xi2_bar", "merit", "edge_warning"]
    return [row], cols, None, {"result": row}


def _ensemble_spec(cfg: RunConfig, seed: int, p_fill=None, fixed=None) -> EnsembleSpec:
    e = cfg.ensemble
    mode = e.mode if fixed is None else "fixed_params"
    tau, theta = e.fixed_tau_s, e.fixed_theta_rad
    if fixed is not None:
        tau, theta = fixed
    elif mode == "fixed_params" and e.fixed_from_fits:
        tau, theta = _fixed_from_fits(cfg)
    return EnsembleSpec(cfg.lattice.to_spec(), e.p_fill if p_fill is None else p_fill, e.n_trials,
                        mode, tau if mode == "fixed_params" else None,
                        theta if mode == "fixed_params" else None, seed, cfg.scan.to_spec(), e.bin_width)


def _fixed_from_fits(cfg: RunConfig):
    if cfg.dressing.rc_over_a is None:
        raise ConfigError("fixed_from_fits needs dressing.rc_over_a")
    return fixed_params_from_fits(cfg.dressing.rc_over_a, derived_params(cfg.params()).v0_rad)


def _stats_summary(st):
    return dict(xi2=asdict(st.xi2), xi2_bar=asdict(st.xi2_bar), tau_s=asdict(st.tau_s),
                theta_rad=asdict(st.theta_rad), mean_n=st.mean_n, merit=st.merit,
                n_flagged=sum(r.flagged for r in st.records),
                n_edge_warnings=sum(r.edge_warning for r in st.records),
                bins=[dict(n_lo=lo, count=c, xi2_mean=m) for lo, c, m in st.bins])


def cmd_ensemble(cfg: RunConfig, args):
    cfg.require("dressing", "lattice")
    _guard_size(cfg.lattice.to_spec().n_sites, args)
    st = run_ensemble(_ensemble_spec(cfg, _seed(cfg, args)), cfg.potential, cfg.params(), _workers(cfg, args))
    rows = [dict(trial=r.trial_index, N=r.n_atoms, xi2_min=r.xi2_min, tau_opt_s=r.tau_s,
                 theta_rad=r.theta_rad, xi2_bar=r.xi2_bar) for r in st.records]
    cols = ["trial", "N", "xi2_min", "tau_opt_s", "theta_rad", "xi2_bar"]
    return rows, cols, None, {"result": _stats_summary(st)}


def _scan_p_fill(cfg, args, values):
    seed, workers = _seed(cfg, args), _workers(cfg, args)
    fixed = _fixed_from_fits(cfg) if cfg.sweep.compare_fixed else None
    rows = []
    for pf in values:
        st = run_ensemble(_ensemble_spec(cfg, seed, pf), cfg.potential, cfg.params(), workers)
        row = dict(p_fill=pf, mean_n=st.mean_n, xi2_mean=st.xi2.mean, xi2_std=st.xi2.std,
                   xi2_lo=st.xi2.min, xi2_hi=st.xi2.max, xi2_bar_mean=st.xi2_bar.mean,
                   tau_opt_mean_s=st.tau_s.mean, merit=st.merit)
        if fixed is not None:
            sf = run_ensemble(_ensemble_spec(cfg, seed, pf, fixed), cfg.potential, cfg.params(), workers)
            row.update(xi2_fixed_mean=sf.xi2.mean, degradation=sf.xi2.mean / st.xi2.mean - 1.0)
        rows.append(row)
    cols = ["p_fill", "mean_n", "xi2_mean", "xi2_std", "xi2_lo", "xi2_hi", "xi2_bar_mean",
            "tau_opt_mean_s", "merit"] + (["xi2_fixed_mean", "degradation"] if fixed else [])
    return rows, cols


def _scan_detuning(cfg, args, values):
    sign = math.copysign(1.0, cfg.dressing.delta_hz)
    rows = []
    g = _geometry(cfg)
    pos = geometry_positions(g, _seed(cfg, args), cfg.squeeze.trial_index)
    for ratio in values:
        delta_hz = sign * ratio * cfg.dressing.omega_r_hz
        p = cfg.params(delta_hz)
        d = derived_params(p)
        rec = evaluate_configuration(pos, cfg.potential, p, scan=cfg.scan.to_spec())
        rows.append(dict(ratio=ratio, delta_hz=delta_hz, rc_over_a=d.r_c_m / g.lattice.lattice_constant_m,
                         xi2_min=rec.xi2_min, tau_opt_s=rec.tau_s, xi2_bar=rec.xi2_bar,
                         merit=d.tau_tilde_s / rec.tau_s if d.tau_tilde_s else None))
    return rows, ["ratio", "delta_hz", "rc_over_a", "xi2_min", "tau_opt_s", "xi2_bar", "merit"]


def _scan_rc(cfg, args, values):
    lat = cfg.lattice.to_spec()
    v0 = derived_params(cfg.params()).v0_rad
    closed = (cfg.potential is PotentialModel.HEAVISIDE and lat.dimension == 1
              and cfg.squeeze.fill_mode == "full")
    rows = []
    for rc in values:
        if closed:
            m, r = lat.n_sites, int(round(rc))
            res = optimize_scan(lambda t: correlators_heaviside_1d(m, r, 0.5 * v0 * t),
                                _heaviside_tau_hi(r, v0), cfg.scan.to_spec())
            rows.append(dict(rc_over_a=r, n_atoms=m, xi2_min=res.xi2_min, tau_opt_s=res.tau_opt_s,
                             v0_tau_opt=v0 * res.tau_opt_s, theta_rad=res.theta_min_rad))
            continue
        _guard_size(lat.n_sites, args)
        local = cfg.model_copy(update={"dressing": cfg.dressing.model_copy(update={"rc_over_a": rc})})
        p = local.params()
        pos = geometry_positions(_geometry(local), _seed(cfg, args), cfg.squeeze.trial_index)
        rec = evaluate_configuration(pos, cfg.potential, p, scan=cfg.scan.to_spec())
        rows.append(dict(rc_over_a=rc, n_atoms=rec.n_atoms, xi2_min=rec.xi2_min, tau_opt_s=rec.tau_s,
                         v0_tau_opt=v0 * rec.tau_s, theta_rad=rec.theta_rad))
    return rows, ["rc_over_a", "n_atoms", "xi2_min", "tau_opt_s", "v0_tau_opt", "theta_rad"]


def _heaviside_tau_hi(r, v0):
    from .squeezing import all_to_all_optimum_phase

    return 4.0 * 2.0 * all_to_all_optimum_phase(2 * r + 1) / v0


def _scan_dimension(cfg, args, values):
    n = cfg.sweep.n_atoms or cfg.lattice.to_spec().n_sites
    a = cfg.lattice.lattice_constant_m
    st = cfg.stability
    geoms = []
    for d in values:
        d = int(d)
        side = 1
        while side**d < n:
            side += 1
        geoms.append(GeometrySpec(LatticeSpec(d, (side,) * d, a), "tweezer", n_atoms=n, label=f"{d}d"))
    rows = geometry_sweep(geoms, cfg.params(), 1, model=cfg.potential, scan=cfg.scan.to_spec(),
                          nu_clock_hz=st.nu_clock_hz, t_interrogation_s=st.t_interrogation_s,
                          tau_avg_s=st.tau_avg_s, decay=st.decay, workers=_workers(cfg, args))
    out = [dict(dimension=r.dimension, n_atoms=r.mean_n, xi2_min=r.xi2_mean, xi2_bar=r.xi2_bar_mean,
                sigma=r.sigma) for r in rows]
    return out, ["dimension", "n_atoms", "xi2_min", "xi2_bar", "sigma"]


def cmd_scan(cfg: RunConfig, args):
    cfg.require("dressing", "lattice", "sweep")
    axis = args.axis or cfg.sweep.axis
    fn = {"p_fill": _scan_p_fill, "detuning": _scan_detuning, "rc": _scan_rc,
          "dimension": _scan_dimension}[axis]
    rows, cols = fn(cfg, args, cfg.sweep.values)
    return rows, cols, None, {"axis": axis, "rows": len(rows)}


def cmd_stability(cfg: RunConfig, args):
    cfg.require("dressing", "lattice")
    st = cfg.stability
    if not st.geometries:
        raise ConfigError("stability.geometries is empty")
    a = cfg.lattice.lattice_constant_m
    geoms = []
    for gc in st.geometries:
        if (gc.extents is None) == (gc.n_sites is None):
            raise ConfigError("each geometry needs exactly one of extents or n_sites")
        ext = gc.extents or hypercubic_extents(gc.n_sites, gc.dimension)
        lat = LatticeSpec(gc.dimension, tuple(ext), a)
        _guard_size(lat.n_sites, args)
        geoms.append(GeometrySpec(lat, gc.fill_mode, gc.p_fill, gc.n_atoms, gc.label))
    rows = geometry_sweep(geoms, cfg.params(), cfg.ensemble.n_trials, model=cfg.potential,
                          scan=cfg.scan.to_spec(), master_seed=_seed(cfg, args),
                          nu_clock_hz=st.nu_clock_hz, t_interrogation_s=st.t_interrogation_s,
                          tau_avg_s=st.tau_avg_s, decay=st.decay, workers=_workers(cfg, args))
    out = [asdict(r) for r in rows]
    cols = ["label", "dimension", "fill_mode", "m_sites", "mean_n", "xi2_mean", "xi2_bar_mean", "sigma"]
    comment = (f"nu_clock_hz={_fmt(st.nu_clock_hz)} t_interrogation_s={_fmt(st.t_interrogation_s)} "
               f"tau_avg_s={_fmt(st.tau_avg_s)}")
    return out, cols, comment, {"rows": out}


def cmd_forster(cfg: RunConfig, args):
    cfg.require("forster")
    fc = cfg.forster
    table = load_quantum_defects(fc.quantum_defects_path) if fc.quantum_defects_path else example_quantum_defects()
    res = forster_defect(fc.n, table)
    rows = [dict(J=j, delta_rad_s=d, delta_hz=d / TWO_PI) for j, d in res.delta_j_rad.items()]
    rows.append(dict(J="weighted", delta_rad_s=res.weighted_rad, delta_hz=res.weighted_rad / TWO_PI))
    return rows, ["J", "delta_rad_s", "delta_hz"], None, {
        "n": fc.n, "weighted_hz": res.weighted_rad / TWO_PI, "data": table.description}


def cmd_fit(cfg: RunConfig | None, args):
    if args.rc is not None:
        rc, x, m = args.rc, args.x, None
    else:
        if cfg is None:
            raise ConfigError("fit needs --rc or a config with a fit section")
        cfg.require("fit")
        rc, x, m = cfg.fit.rc_over_a, cfg.fit.x, cfg.fit.m_sites
    inp = FitInputs(rc, x, m)
    xi = xi2_fit(inp)
    row = dict(rc_over_a=rc, x=x, xi2_fit=xi.value, tau_fit=tau_fit(inp).value if x > 0 else None,
               theta_fit=theta_fit(rc), extrapolated=xi.extrapolated)
    if cfg is not None and cfg.dressing is not None and cfg.lattice is not None:
        row["tau_fixed_s"] = fixed_params_from_fits(rc, derived_params(cfg.params()).v0_rad)[0]
    cols = [c for c in ["rc_over_a", "x", "xi2_fit", "tau_fit", "theta_fit", "tau_fixed_s",
                        "extrapolated"] if c in row]
    return [row], cols, None, {"result": row}


def cmd_oracle(cfg: RunConfig, args):
    cfg.require("oracle")
    oc = cfg.oracle
    v = TWO_PI * np.asarray(oc.couplings_hz, dtype=np.float64)
    d = None if oc.onsite_detunings_hz is None else TWO_PI * np.asarray(oc.onsite_detunings_hz)
    m = sequence_moments(SequenceSpec(v, d, oc.tau_s))
    c = m.correlators
    row = dict(jz=c.jz, jx2=c.jx2, jy2=c.jy2, jxjy_sym=c.jxjy_sym, jx=m.jx, jy=m.jy, norm=m.norm)
    return [row], list(row), None, {"result": row}


COMMANDS = {
    "squeeze": cmd_squeeze,
    "ensemble": cmd_ensemble,
    "scan": cmd_scan,
    "stability": cmd_stability,
    "forster": cmd_forster,
    "fit": cmd_fit,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rydsq", description="Rydberg-dressed spin squeezing in optical lattices")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output prefix: writes <out>.csv and <out>.json")
        sp.add_argument("--workers", type=int, help="parallel worker processes")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--slow", action="store_true", help="allow long-running lattice sizes")
        if name == "scan":
            sp.add_argument("--axis", choices=["p_fill", "detuning", "rc", "dimension"])
        if name == "fit":
            sp.add_argument("--rc", type=float, help="R_c / a")
            sp.add_argument("--x", type=float, default=0.5, help="filling fraction N/M")
    return ap


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg, digest = (None, None)
        if args.config:
            cfg, digest = load_config(args.config)
        elif args.command != "fit":
            raise ConfigError(f"{args.command} needs --config")
        rows, cols, comment, summary = COMMANDS[args.command](cfg, args)
        text = write_csv(rows, cols, comment)
        prefix = args.out or (cfg.output.prefix if cfg else None)
        if prefix:
            Path(prefix + ".csv").write_text(text)
            meta = dict(command=args.command, version=__version__, config_sha256=digest,
                        seed=_seed(cfg, args) if cfg else None,
                        workers=_workers(cfg, args) if cfg else 1, **summary)
            Path(prefix + ".json").write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
        else:
            stdout.write(text)
    except RydsqError as exc:
        print(f"rydsq {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
