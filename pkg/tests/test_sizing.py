import math

import numpy as np
import pytest

from modradar.errors import DomainError, UsageError
from modradar.harness import fit_scaling
from modradar.sizing import (
    SizingPolicy,
    TotalTimeModel,
    balance_cluster_size,
    densified_link_count,
    minimize_cluster_size,
    minimize_tradeoff,
    model_total_time,
    parse_policy,
    radar_cluster_size,
)

UNIT = TotalTimeModel(1.0, 1.0)


def test_radar_cluster_size():
    assert radar_cluster_size(1) == 1
    assert radar_cluster_size(2**16, 1.0, 2.0) == 256
    assert radar_cluster_size(10**6, 1.0, math.e) == 191
    assert round(math.log(10**6) ** 2) == 191


def test_densified_link_count():
    assert densified_link_count(64, 64) == 0
    assert densified_link_count(2**16, 2**8, 1.0, 2.0) == 8
    assert densified_link_count(10**5, 100, 2.0, 2.0) == 20
    assert round(2 * math.log2(1000)) == 20
    with pytest.raises(UsageError):
        densified_link_count(10, 20)


def test_model_total_time():
    n = 10**6
    assert model_total_time(n, n, UNIT) == pytest.approx(math.sqrt(n))
    assert model_total_time(n, 4, UNIT) == pytest.approx(14.4292, abs=1e-3)
    assert 2 + math.log(250000) == pytest.approx(14.4292, abs=1e-3)
    for c in (1, 9, 100):
        assert model_total_time(1000, c, TotalTimeModel(1, 0)) == pytest.approx(math.sqrt(c))
    with pytest.raises(UsageError):
        model_total_time(10, 11, UNIT)


def brute_integer_min(n, model):
    best_c, best_t = None, math.inf
    for c in range(1, n + 1):
        t = model.a1 * math.sqrt(c) + model.a2 * math.log(n / c)
        if t < best_t:
            best_c, best_t = c, t
    return best_c, best_t


@pytest.mark.parametrize("n", [10**3, 10**4, 10**5])
def test_minimize_cluster_size_matches_brute_force(n):
    assert brute_integer_min(n, UNIT)[0] == 4
    c, t = minimize_cluster_size(n, UNIT)
    assert c == 4
    assert t == pytest.approx(brute_integer_min(n, UNIT)[1])


def test_minimize_cluster_size_examples():
    assert minimize_cluster_size(10**6, UNIT)[0] == 4
    assert (2 * UNIT.a2 / UNIT.a1) ** 2 == 4
    assert minimize_cluster_size(10**6, TotalTimeModel(1, 0))[0] == 1
    assert minimize_cluster_size(1, UNIT) == (1, 1.0)


def test_minimize_cluster_size_is_integer_minimum():
    rng = np.random.default_rng(0)
    for _ in range(10):
        model = TotalTimeModel(float(rng.uniform(0.2, 3)), float(rng.uniform(0.2, 5)))
        n = int(rng.integers(50, 20000))
        c, t = minimize_cluster_size(n, model)
        for probe in list(rng.integers(1, n + 1, 100)) + [c - 1, c + 1]:
            if 1 <= probe <= n:
                assert t <= model_total_time(n, int(probe), model) + 1e-12
        g, _ = minimize_cluster_size(n, model, method="golden")
        assert abs(g - c) <= 1


def test_golden_path_for_large_n():
    c, _ = minimize_cluster_size(10**9, UNIT)
    assert c == 4


def test_balance_cluster_size():
    assert balance_cluster_size(math.e, UNIT) == pytest.approx(1.0)
    assert balance_cluster_size(10**6, UNIT) == pytest.approx(190.87, abs=0.01)
    assert balance_cluster_size(10**6, TotalTimeModel(2, 1)) == pytest.approx(47.72, abs=0.01)
    for n in (10, 1000, 12345):
        assert balance_cluster_size(n**2, UNIT) / balance_cluster_size(n, UNIT) == pytest.approx(4.0, rel=1e-12)
    vals = [balance_cluster_size(n, UNIT) for n in range(2, 200)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("a2", [0.5, 1.0, 3.0])
def test_balance_rule_total_time_has_log_minus_loglog_shape(a2):
    model = TotalTimeModel(1.0, a2)
    ns = np.array([2.0**k for k in range(10, 21)])
    ts = [model_total_time(n, balance_cluster_size(n, model), model) for n in ns]
    fit = fit_scaling(ns, ts, "loglog")
    assert fit.coefficients["a"] == pytest.approx(2 * a2, rel=0.01)
    assert fit.coefficients["b"] == pytest.approx(-2 * a2, rel=0.01)


def test_minimize_tradeoff_examples():
    d, t = minimize_tradeoff(lambda d: d, lambda x: x, 100, (1, 100))
    assert d == pytest.approx(10, rel=1e-5)
    assert t == pytest.approx(20, rel=1e-9)
    d, _ = minimize_tradeoff(math.sqrt, math.log, 10**6, (1, 10**6))
    assert d == pytest.approx(4, rel=1e-5)
    d, t = minimize_tradeoff(lambda d: d, lambda x: 0.0, 50, (2, 40))
    assert d == 2 and t == 2


def test_minimize_tradeoff_rejects_non_finite():
    with pytest.raises(DomainError, match="d="):
        minimize_tradeoff(lambda d: 1 / (d - 5) if d > 5 else math.inf, lambda x: x, 10, (1, 10))


def test_minimize_tradeoff_matches_fine_grid_on_random_convex_pairs():
    rng = np.random.default_rng(42)
    for _ in range(20):
        u, v = rng.uniform(0.1, 10, 2)
        alpha, beta = rng.uniform(0.3, 1.5, 2)
        n = float(10 ** rng.uniform(2, 6))
        f = lambda d, u=u, alpha=alpha: u * d**alpha
        g = lambda x, v=v, beta=beta: v * x**beta
        _, best = minimize_tradeoff(f, g, n, (1.0, n))
        fine = np.geomspace(1.0, n, 200_001)
        oracle = float(np.min(u * fine**alpha + v * (n / fine) ** beta))
        assert best <= oracle * 1.001


def test_policy_resolution():
    assert SizingPolicy.baseline(16, 1).resolve(10**6) == (16, 1)
    assert SizingPolicy.explicit(64, 4).resolve(10) == (64, 4)
    assert SizingPolicy.radar().resolve(2**16) == (256, 8)
    # tiny n where log^2 n exceeds n: no long links rather than an error
    assert SizingPolicy.radar().resolve(8) == (9, 0)
    for n in range(1, 3000, 37):
        c, l = SizingPolicy.radar().resolve(n)
        assert c >= 1 and l >= 0


def test_parse_policy_round_trip():
    for text in ("baseline:c=16,l=1", "radar:b1=1,b2=1,base=2", "explicit:c=64,l=4"):
        p = parse_policy(text)
        assert parse_policy(str(p)) == p
    assert parse_policy("baseline") == SizingPolicy.baseline()
    assert parse_policy("radar:b1=0.5,base=e").b1 == 0.5


@pytest.mark.parametrize(
    "text, token",
    [
        ("baseline:c=16,x=1", "x=1"),
        ("explicit:c=sixteen,l=1", "c=sixteen"),
        ("radar:b1", "b1"),
        ("mesh:c=1", "mesh"),
    ],
)
def test_parse_policy_errors_name_token(text, token):
    with pytest.raises(UsageError, match=token):
        parse_policy(text)


def test_parse_policy_explicit_requires_both():
    with pytest.raises(UsageError):
        parse_policy("explicit:c=4")
