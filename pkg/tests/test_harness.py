import io
import math

import numpy as np
import pytest

from modradar.errors import FitError, UsageError
from modradar.harness import (
    SweepSpec,
    compare_models,
    fit_scaling,
    robustness_experiment,
    run_sweep,
    sweep_fits,
    write_fit_csv,
    write_robustness_csv,
    write_sweep_csv,
)
from modradar.sizing import SizingPolicy

XS = np.array([2.0**k for k in range(4, 14)])


def test_fit_exact_log():
    fit = fit_scaling(XS, 3 * np.log(XS), "log")
    assert fit.coefficients["a"] == pytest.approx(3, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_exact_power():
    fit = fit_scaling(XS, XS**0.5, "power")
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.coefficients["a"] == pytest.approx(1.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_exact_loglog():
    ys = 2 * np.log(XS) - 2 * np.log(np.log(XS)) + 5
    co = fit_scaling(XS, ys, "loglog").coefficients
    assert co["a"] == pytest.approx(2, abs=1e-9)
    assert co["b"] == pytest.approx(-2, abs=1e-9)
    assert co["c"] == pytest.approx(5, abs=1e-9)


@pytest.mark.parametrize(
    "form, coeffs",
    [("log", {"a": 1.7}), ("log2", {"a": 0.3}), ("loglog", {"a": -1.2, "b": 4.0, "c": 0.5}), ("power", {"a": 2.5, "b": -0.7})],
)
def test_fit_recovers_every_form(form, coeffs):
    from modradar.harness import ScalingFit

    ys = ScalingFit(form, coeffs, 1.0, 0.0, len(XS)).predict(XS)
    fit = fit_scaling(XS, ys, form)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    for k, v in coeffs.items():
        assert fit.coefficients[k] == pytest.approx(v, abs=1e-9)


def test_fit_errors():
    with pytest.raises(UsageError):
        fit_scaling(XS[:3], XS[:3], "log")
    with pytest.raises(UsageError):
        fit_scaling(XS[::-1], XS, "log")
    with pytest.raises(UsageError):
        fit_scaling(np.arange(2.0, 12), np.arange(10.0), "loglog")
    with pytest.raises(UsageError):
        fit_scaling(XS, XS, "cubic")
    with pytest.raises(FitError):
        fit_scaling(XS, np.full(len(XS), np.nan), "log")


def test_compare_models_picks_generating_form():
    assert compare_models(XS, 0.4 * np.log(XS) ** 2, ("log", "log2"))[0].form == "log2"
    assert compare_models(XS, 2.0 * np.log(XS), ("log", "log2"))[0].form == "log"
    winner = compare_models(XS, np.full(len(XS), 3.0))[0]
    assert winner.form in ("loglog", "power")
    assert winner.form == "power"  # both fit exactly; fewer parameters wins


def test_compare_models_penalty_arithmetic():
    ys = 2.0 * np.log(XS) + np.random.default_rng(0).normal(0, 0.01, len(XS))
    scores = {s.form: s for s in compare_models(XS, ys, ("log", "loglog"))}
    n = len(XS)
    for s in scores.values():
        k = s.params
        assert s.aicc == pytest.approx(n * math.log(s.rss / n) + 2 * k + 2 * k * (k + 1) / (n - k - 1))
    with pytest.raises(UsageError):
        compare_models(XS[:5], XS[:5], ("log",))


def small_spec(**kw):
    base = dict(grid=(256,), policies=(SizingPolicy.baseline(16, 1),), queries=100, trials=2, seed=0)
    base.update(kw)
    return SweepSpec(**base)


def test_sweep_single_cluster():
    rows = run_sweep(small_spec(grid=(16,), policies=(SizingPolicy.explicit(16, 0),)))
    assert len(rows) == 1
    assert rows[0].clusters == 1
    assert rows[0].mean_global_hops == 0
    assert rows[0].success_rate == 1.0


def test_sweep_determinism_and_csv():
    spec = small_spec(grid=(1024,), trials=2)
    a, b = run_sweep(spec), run_sweep(spec)
    ba, bb = io.StringIO(), io.StringIO()
    write_sweep_csv(a, ba)
    write_sweep_csv(b, bb)
    assert ba.getvalue() == bb.getvalue()
    lines = ba.getvalue().splitlines()
    assert lines[0] == "# modradar-sweep v1"
    assert lines[1].startswith("requested_n,policy,actual_n,clusters,c,l,mean_global_hops")
    # nine significant digits
    value = lines[2].split(",")[7]
    assert len(value.replace(".", "").lstrip("0")) <= 9


def test_sweep_parallel_equals_serial():
    spec = small_spec(grid=(256, 1024), policies=(SizingPolicy.baseline(16, 1), SizingPolicy.radar()))
    serial = io.StringIO()
    write_sweep_csv(run_sweep(spec), serial)
    parallel = io.StringIO()
    write_sweep_csv(run_sweep(spec, workers=2), parallel)
    assert serial.getvalue() == parallel.getvalue()


def test_sweep_hops_grow_with_n():
    grid = tuple(2**k for k in range(8, 15))
    rows = run_sweep(small_spec(grid=grid, queries=400, trials=2, r=2.0))
    hops = [r.mean_global_hops for r in rows]
    assert all(b > a for a, b in zip(hops, hops[1:]))


def test_sweep_records_build_failures():
    rows = run_sweep(small_spec(grid=(10**8,)))
    assert rows[0].error
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    assert "budget" in buf.getvalue()


def test_trial_order_does_not_change_aggregates():
    rows = run_sweep(small_spec(trials=4))
    row = rows[0]
    from modradar.harness import _bootstrap_se

    vals = [s.mean_total_time for s in row.trials]
    se1 = _bootstrap_se(vals, np.random.default_rng(1))
    se2 = _bootstrap_se(vals[::-1], np.random.default_rng(1))
    assert se1 == se2
    assert row.mean_total_time == pytest.approx(np.mean(vals[::-1]))


def test_spec_validation():
    with pytest.raises(UsageError):
        small_spec(grid=(1024, 256))
    with pytest.raises(UsageError):
        small_spec(queries=0)
    with pytest.raises(UsageError):
        small_spec(failure_p=1.5)


def test_sweep_fits_csv():
    grid = tuple(2**k for k in range(8, 14))
    rows = run_sweep(small_spec(grid=grid, queries=200, trials=1))
    fits = sweep_fits(rows)
    assert {f[1] for f in fits} == {"log", "log2"}
    buf = io.StringIO()
    write_fit_csv(fits, buf)
    assert buf.getvalue().startswith("# modradar-fits v1\npolicy,form,coefficients,r2,rss,points,rank\n")


def test_robustness_endpoints_and_monotonicity():
    rows = robustness_experiment(
        1024, [SizingPolicy.radar(), SizingPolicy.explicit(4, 1)], [0.0, 0.1, 0.3, 1.0], queries=400, seed=2
    )
    by = {(r.p, r.policy): r.success_rate for r in rows}
    for policy in ("radar:b1=1,b2=1,base=2", "explicit:c=4,l=1"):
        assert by[(0.0, policy)] == 1.0
        assert by[(1.0, policy)] == 0.0
        seq = [by[(p, policy)] for p in (0.0, 0.1, 0.3, 1.0)]
        assert all(b <= a + 0.05 for a, b in zip(seq, seq[1:]))
    buf = io.StringIO()
    write_robustness_csv(rows, buf)
    assert buf.getvalue().splitlines()[1] == "p,policy,success_rate,successes,queries"
