import io
import math

import numpy as np
import pytest

from modradar.harness import fit_scaling
from modradar.immune import (
    LnArchitecture,
    OrganismParams,
    closed_form_volume,
    compare_policies,
    n_comm,
    optimize_architecture,
    policy_fits,
    t_comm,
    t_migrate,
    total_response_time,
    two_point_exponents,
    write_policy_csv,
)

UNIT = OrganismParams()


def scan_optimum(p, lo=1e-6, hi=1e6, points=2_000_001):
    """Brute-force V minimising t_comm + t_migrate, independent of the closed form."""
    vs = np.geomspace(lo, hi, points)
    ts = p.a * p.M / vs**2 + p.b * (p.M / (p.k * p.M / vs)) ** (1 / 3)
    return float(vs[np.argmin(ts)])


def test_n_comm():
    assert n_comm(OrganismParams(M=10), 2) == 5
    p = OrganismParams(M=7, beta_B=3, beta_cell=2)
    assert n_comm(p, p.beta_B * p.M / p.beta_cell) == pytest.approx(1.0)
    assert n_comm(p.with_mass(14), 3) == pytest.approx(2 * n_comm(p, 3))


def test_t_comm():
    assert t_comm(OrganismParams(M=10), 2) == pytest.approx(2.5)
    p = OrganismParams(M=5, beta_B=2, beta_rate=3)
    assert t_comm(p.with_mass(10), 1.7) == pytest.approx(2 * t_comm(p, 1.7))
    assert t_comm(p, 3.4) == pytest.approx(t_comm(p, 1.7) / 4)
    assert t_comm(p, 1.7) == pytest.approx(p.a * p.M / 1.7**2)


def test_t_migrate():
    assert t_migrate(OrganismParams(M=3), 3) == pytest.approx(1.0)
    assert t_migrate(OrganismParams(M=8), 1) == pytest.approx(2.0)
    ms = np.geomspace(1, 1e6, 20)
    ts = [t_migrate(OrganismParams(M=float(m)), 5.0) for m in ms]
    assert fit_scaling(ms, ts, "power").slope == pytest.approx(1 / 3, abs=1e-12)


def test_total_response_time():
    arch = LnArchitecture.from_volume(UNIT, 1.0)
    assert arch.N == 1.0
    assert total_response_time(UNIT, arch) == pytest.approx(2.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = OrganismParams(M=float(10 ** rng.uniform(-3, 5)))
        assert total_response_time(p, LnArchitecture.from_volume(p, float(10 ** rng.uniform(-4, 4)))) > 0


def test_unit_optimum():
    scanned = scan_optimum(UNIT)
    assert scanned == pytest.approx(6 ** (3 / 7), rel=1e-4)
    arch = optimize_architecture(UNIT)
    assert arch.V == pytest.approx(2.1553, abs=1e-4)
    assert arch.N == pytest.approx(0.4640, abs=1e-4)
    # exact optimum is 6**(1/7) * 7/6 = 1.50700; agree with the scan to 1e-4
    assert total_response_time(UNIT, arch) == pytest.approx(6 ** (1 / 7) * 7 / 6, rel=1e-12)
    assert total_response_time(UNIT, arch) == pytest.approx(1.5070, abs=1e-4)


def test_exponent_and_coefficient_laws():
    v1 = optimize_architecture(UNIT).V
    v128 = optimize_architecture(UNIT.with_mass(128)).V
    assert v128 / v1 == pytest.approx(8.0, rel=1e-8)
    v8a = optimize_architecture(OrganismParams(beta_B=8)).V
    assert v8a / v1 == pytest.approx(8 ** (3 / 7), rel=1e-8)
    assert 8 ** (3 / 7) == pytest.approx(2.438, abs=1e-3)


def test_numeric_optimizer_matches_closed_form_on_random_params():
    rng = np.random.default_rng(123)
    for _ in range(100):
        kw = {k: float(10 ** rng.uniform(-2, 2)) for k in ("M", "k", "b", "beta_B", "beta_cell", "beta_rate")}
        p = OrganismParams(**kw)
        arch = optimize_architecture(p)
        assert arch.V == pytest.approx(closed_form_volume(p), rel=1e-6)
        assert arch.N * arch.V == pytest.approx(p.k * p.M, rel=1e-9)
        t = total_response_time(p, arch)
        for f in (0.99, 1.01):
            assert t <= total_response_time(p, LnArchitecture.from_volume(p, arch.V * f))


def test_closed_form_against_independent_scan():
    for M in (0.01, 3.0, 500.0):
        p = OrganismParams(M=M, k=0.3, b=2.0)
        assert scan_optimum(p) == pytest.approx(closed_form_volume(p), rel=1e-4)


def test_policy_table():
    masses = np.geomspace(1e-2, 1e4, 50)
    rows = compare_policies(masses)
    assert len(rows) == 150
    for r in rows:
        assert r.N * r.V == pytest.approx(r.M, rel=1e-9)
        assert r.T == pytest.approx(r.t_comm + r.t_migrate)
    assert {r.V for r in rows if r.policy == "fixed-V"} == {1.0}
    assert {r.N for r in rows if r.policy == "fixed-N"} == {1.0}
    full = policy_fits(rows)
    top = policy_fits(rows, min_mass=1e3)
    assert top["fixed-V"].slope == pytest.approx(1.0, abs=0.01)
    assert top["fixed-N"].slope == pytest.approx(1 / 3, abs=0.01)
    assert full["optimal"].slope == pytest.approx(1 / 7, abs=0.01)


def test_policy_grid_validation():
    with pytest.raises(ValueError):
        compare_policies(np.geomspace(1, 100, 20))
    with pytest.raises(ValueError):
        compare_policies(np.geomspace(1, 1e5, 5))


def test_policy_csv():
    rows = compare_policies(np.geomspace(1e-2, 1e4, 10))
    buf = io.StringIO()
    write_policy_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# modradar-immune v1"
    assert lines[1] == "M,policy,V,N,t_comm,t_migrate,T"
    assert len(lines) == 2 + 30


def test_species_data_exponents():
    ex = two_point_exponents()
    assert ex["ln_size"] == pytest.approx(math.log(200) / math.log(3000))
    assert ex["ln_count"] == pytest.approx(math.log(20) / math.log(3000))
