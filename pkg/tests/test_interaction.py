import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants

from rydsq.errors import ConfigError, DataError, NumericalBranchError
from rydsq.geometry import LatticeSpec, build_lattice, full_filling
from rydsq.interaction import (
    HBAR,
    DressingParams,
    QuantumDefectTable,
    c6_from_forster,
    coupling_matrix,
    derived_params,
    dipole_dipole,
    example_quantum_defects,
    finite_mass_hartree,
    forster_defect,
    ladder_pair_shift,
    load_quantum_defects,
    plateau_v0,
    rydberg_radius,
    v_exact,
    v_heaviside,
    v_softcore,
)

TP = 2 * math.pi
A = 406.5e-9
OMEGA = TP * 1.6e6
DELTA = -TP * 16e6


def table1(**kw):
    return DressingParams.from_rc(OMEGA, DELTA, 9 * A, **kw)


def test_table1_derived():
    d = derived_params(table1(tau_rydberg_s=23e-6))
    assert d.v0_rad == pytest.approx(TP * 200, rel=1e-12)
    assert d.v0_rad == pytest.approx(1256.64, abs=0.01)
    assert d.tau_tilde_s == pytest.approx(9.2e-3, rel=1e-12)
    assert d.epsilon == pytest.approx(-0.05, rel=1e-12)
    assert d.r_c_m == pytest.approx(3.6585e-6, rel=1e-12)


def test_missing_c6_rejected():
    p = DressingParams(OMEGA, DELTA)
    assert derived_params(p).r_c_m is None
    with pytest.raises(ConfigError):
        rydberg_radius(p)


def test_softcore_points():
    p = table1()
    v0, rc = plateau_v0(p), rydberg_radius(p)
    assert v_softcore(0.0, p) == v0
    assert v_softcore(rc, p) == pytest.approx(v0 / 2, rel=1e-14)
    assert v_softcore(2 * rc, p) == pytest.approx(v0 / 65, rel=1e-14)
    r = np.linspace(0, 10 * rc, 1000)
    assert np.all(np.diff(v_softcore(r, p)) <= 0)


def test_heaviside_points_and_ordering():
    p = table1()
    v0, rc = plateau_v0(p), rydberg_radius(p)
    assert v_heaviside(0.0, p) == v0
    assert v_heaviside(rc, p) == v0
    assert v_heaviside(1.0001 * rc, p) == 0.0
    inside = np.linspace(0, rc, 200)
    outside = np.linspace(rc * 1.001, 5 * rc, 200)
    assert np.all(v_heaviside(inside, p) - v_softcore(inside, p) >= 0)
    assert np.all(v_heaviside(outside, p) - v_softcore(outside, p) <= 0)


def test_heaviside_lattice_boundary_is_inclusive():
    # a site at exactly R_c/a = 9 must interact even though rounding may put it a hair outside
    cfg = full_filling(build_lattice(LatticeSpec(1, (12,), A)))
    v = coupling_matrix(cfg.positions, "heaviside", table1())
    assert np.count_nonzero(v[0]) == 9


def test_c6_from_forster():
    assert c6_from_forster(0.0, 1e-6) == 0.0
    assert c6_from_forster(-1.0, 1e-6) > 0
    p = DressingParams(OMEGA, DELTA, forster_delta_rad=-TP * 1.26e9, x_c_m=2e-6)
    direct = (abs(p.c6 / (2 * HBAR * abs(DELTA)))) ** (1 / 6)
    assert rydberg_radius(p) == pytest.approx(direct, rel=1e-12)
    with pytest.raises(ConfigError):
        DressingParams(OMEGA, DELTA, c6=p.c6 * 1.01, forster_delta_rad=p.forster_delta_rad, x_c_m=2e-6)
    q = DressingParams(OMEGA, DELTA, c6=p.c6, forster_delta_rad=p.forster_delta_rad)
    assert q.x_c_m == pytest.approx(2e-6, rel=1e-12)


def test_far_off_resonance_flag():
    assert table1().far_off_resonance
    assert not DressingParams(OMEGA, -5 * OMEGA).far_off_resonance


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(1e5, 1e7), st.floats(5, 40))
def test_scale_covariance(s, omega_hz, ratio):
    p = DressingParams(TP * omega_hz, -TP * omega_hz * ratio)
    q = DressingParams(s * p.omega_r_rad, s * p.delta_rad)
    assert plateau_v0(q) == pytest.approx(s * plateau_v0(p), rel=1e-12)
    assert derived_params(q).epsilon == pytest.approx(derived_params(p).epsilon, rel=1e-12)


def _mp_oracle(vdd, omega, delta):
    """Pair shift from a 50-digit dense eigen-solve, branch chosen by |ee> overlap."""
    with mpmath.workdps(50):
        b = mpmath.mpf(omega) / mpmath.sqrt(2)
        d, v = mpmath.mpf(delta), mpmath.mpf(vdd)
        h = mpmath.matrix([[0, b, 0], [b, -d, b], [0, b, -2 * d + v]])
        e, q = mpmath.eigsy(h)
        k = max(range(3), key=lambda i: abs(q[0, i]))
        o = mpmath.mpf(omega)
        e1 = o**2 / (2 * (d + mpmath.sign(d) * mpmath.sqrt(d**2 + o**2)))
        return float(e[k] - 2 * e1)


@pytest.mark.parametrize("forster_hz", [-1.26e9, -100e6, -10e6])
def test_exact_matches_high_precision_oracle(forster_hz):
    p = table1(forster_delta_rad=TP * forster_hz)
    r = np.geomspace(0.2 * A, 40 * A, 25)
    got = v_exact(r, p)
    vdd = dipole_dipole(r, p.forster_delta_rad, p.x_c_m)
    ref = np.array([_mp_oracle(x, OMEGA, DELTA) for x in vdd])
    assert np.all(np.abs(got - ref) <= 1e-6 * np.abs(ref) + 1e-9 * plateau_v0(p))
    assert np.allclose(ladder_pair_shift(vdd, OMEGA, DELTA), ref, rtol=1e-9, atol=1e-9 * plateau_v0(p))


def test_exact_attractive_resonance_is_reported():
    # attractive C6 with red detuning brings |rr> through resonance with |gg>
    p = table1(forster_delta_rad=TP * 1.26e9)
    with pytest.raises(NumericalBranchError):
        v_exact(np.geomspace(0.2 * A, 40 * A, 25), p)


def test_exact_positive_detuning_branch():
    p = DressingParams.from_rc(OMEGA, -DELTA, 9 * A, forster_delta_rad=TP * 1.26e9)
    r = np.geomspace(0.5 * A, 30 * A, 15)
    vdd = dipole_dipole(r, p.forster_delta_rad, p.x_c_m)
    ref = np.array([_mp_oracle(x, OMEGA, -DELTA) for x in vdd])
    assert np.allclose(v_exact(r, p), ref, rtol=1e-6, atol=1e-9 * plateau_v0(p))


def test_exact_limits_and_softcore_agreement():
    p = table1(forster_delta_rad=-TP * 1.26e9)
    v0 = plateau_v0(p)
    assert abs(v_exact(1e-2, p)) <= 1e-8 * v0
    r = np.linspace(0.2 * A, 30 * A, 2000)
    assert np.max(np.abs(v_exact(r, p) - v_softcore(r, p))) <= 0.05 * v0
    with pytest.raises(ConfigError):
        v_exact(A, table1())
    with pytest.raises(ConfigError):
        v_exact(0.0, p)


def test_exact_deviation_shrinks_with_forster_defect():
    r = np.linspace(A, 20 * A, 400)
    devs = []
    for hz in (10e6, 100e6, 1.26e9):
        p = table1(forster_delta_rad=-TP * hz)
        devs.append(np.max(np.abs(v_exact(r, p) - v_softcore(r, p))) / plateau_v0(p))
    assert devs[0] > devs[1] > devs[2]


def test_coupling_matrix_exact_uses_unique_distances():
    p = table1(forster_delta_rad=-TP * 1.26e9)
    cfg = full_filling(build_lattice(LatticeSpec(2, (4, 4), A)))
    v = coupling_matrix(cfg.positions, "exact", p)
    from rydsq.geometry import pair_distances

    d = pair_distances(cfg.positions)
    iu = np.triu_indices(16, 1)
    assert np.allclose(v[iu], v_exact(d[iu], p), rtol=1e-12, atol=0)
    assert np.array_equal(v, v.T) and np.all(np.diag(v) == 0)


def _table(defects):
    return QuantumDefectTable({k: tuple(v) for k, v in defects.items()}, finite_mass_hartree())


def test_forster_hydrogenic():
    tab = _table({s: [0.0] for s in ("3S1", "3P0", "3P1", "3P2")})
    n = 55
    eh = finite_mass_hartree()
    expected = -(eh / (2 * HBAR)) * (1 / (n - 1) ** 2 - 1 / n**2)
    res = forster_defect(n, tab)
    for j in (0, 1, 2):
        assert res.delta_j_rad[j] == pytest.approx(expected, rel=1e-12)
    assert res.weighted_rad == pytest.approx(expected, rel=1e-12)


def test_finite_mass_hartree():
    me_over_m = constants.m_e / (87.9056122571 * constants.atomic_mass)
    assert finite_mass_hartree() == pytest.approx(constants.physical_constants["Hartree energy"][0] / (1 + me_over_m), rel=1e-15)


def test_forster_equal_p_defects():
    tab = _table({"3S1": [3.3], "3P0": [2.9, 0.4], "3P1": [2.9, 0.4], "3P2": [2.9, 0.4]})
    res = forster_defect(40, tab)
    assert res.weighted_rad == pytest.approx(res.delta_j_rad[1], rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(2.5, 3.2), min_size=3, max_size=3), st.floats(3.0, 3.5), st.integers(10, 90))
def test_forster_weighted_between_bounds(p_defects, s_defect, n):
    tab = _table({"3S1": [s_defect], "3P0": [p_defects[0]], "3P1": [p_defects[1]], "3P2": [p_defects[2]]})
    res = forster_defect(n, tab)
    vals = list(res.delta_j_rad.values())
    tol = 1e-12 * max(abs(v) for v in vals)
    assert min(vals) - tol <= res.weighted_rad <= max(vals) + tol


def test_forster_errors_and_loading(tmp_path):
    with pytest.raises(DataError):
        forster_defect(55, _table({"3S1": [3.3], "3P0": [2.9]}))
    with pytest.raises(DataError):
        forster_defect(1, _table({s: [0.0] for s in ("3S1", "3P0", "3P1", "3P2")}))
    f = tmp_path / "qd.json"
    f.write_text(json.dumps({"series": {"3S1": [0.0], "3P0": [0.0], "3P1": [0.0], "3P2": [0.0]},
                             "hartree_energy_J": 4.0e-18}))
    assert load_quantum_defects(f).hartree_energy_J == 4.0e-18
    f.write_text(json.dumps({"series": {"3S1": []}}))
    with pytest.raises(DataError):
        load_quantum_defects(f)
    tab = example_quantum_defects()
    assert set(tab.series) >= {"3S1", "3P0", "3P1", "3P2"}
