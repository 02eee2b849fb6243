"""Scaling sweeps, curve fits and robustness experiments.

Every random draw is seeded from ``(master_seed, point, policy, trial)`` via
:class:`numpy.random.SeedSequence`, so a sweep is a pure function of its
spec and parallel execution gives the same rows as serial execution.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, ModradarError, UsageError
from .overlay import OverlayConfig, build_overlay
from .routing import BatchSummary, FailureMask, batch_queries
from .sizing import SizingPolicy, TotalTimeModel

BOOTSTRAP_RESAMPLES = 200


# --------------------------------------------------------------------------
# fitting


FORMS = {
    # name: (parameter names, basis builder)
    "log": (("a",), lambda x: [np.log(x)]),
    "log2": (("a",), lambda x: [np.log(x) ** 2]),
    "loglog": (("a", "b", "c"), lambda x: [np.log(x), np.log(np.log(x)), np.ones_like(x)]),
    "power": (("a", "b"), None),
}


@dataclass(frozen=True)
class ScalingFit:
    form: str
    coefficients: dict
    r2: float
    rss: float
    n: int

    def predict(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        co = self.coefficients
        if self.form == "power":
            return co["a"] * xs ** co["b"]
        names, basis = FORMS[self.form]
        return sum(co[k] * col for k, col in zip(names, basis(xs)))

    @property
    def slope(self) -> float:
        """Exponent of a power-law fit."""
        return self.coefficients["b"]


def _lstsq(design, ys):
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise FitError("degenerate design matrix")
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    if not np.all(np.isfinite(coef)):
        raise FitError("non-finite coefficients")
    return coef


def _r2(ys, pred):
    rss = float(np.sum((ys - pred) ** 2))
    tss = float(np.sum((ys - ys.mean()) ** 2))
    if tss == 0.0:
        return (1.0 if rss <= 1e-24 * max(1.0, float(np.sum(ys**2))) else -math.inf), rss
    return 1.0 - rss / tss, rss


def fit_scaling(xs, ys, form: str) -> ScalingFit:
    """Least-squares fit of one of the scaling forms.

    ``log``: ``a ln x``; ``log2``: ``a ln^2 x``; ``loglog``:
    ``a ln x + b ln ln x + c``; ``power``: ``a x^b`` fitted as a line in
    log-log space. The logarithmic forms need ``x >= 16``; ``power`` needs
    positive data. ``r2`` is reported in the space the fit was made in.
    """
    if form not in FORMS:
        raise UsageError(f"unknown form {form!r}; choose from {sorted(FORMS)}")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise UsageError("xs and ys must be 1-d arrays of equal length")
    if len(xs) < 4:
        raise UsageError("need at least 4 points")
    if np.any(np.diff(xs) <= 0):
        raise UsageError("xs must be strictly increasing")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise FitError("non-finite data")
    names, basis = FORMS[form]
    if form == "power":
        if xs[0] <= 0 or np.any(ys <= 0):
            raise UsageError("power-law fit needs positive xs and ys")
        lx, ly = np.log(xs), np.log(ys)
        slope, intercept = _lstsq(np.column_stack([lx, np.ones_like(lx)]), ly)
        r2, rss = _r2(ly, slope * lx + intercept)
        return ScalingFit(form, {"a": float(math.exp(intercept)), "b": float(slope)}, r2, rss, len(xs))
    if xs[0] < 16:
        raise UsageError("logarithmic forms need xs >= 16")
    design = np.column_stack(basis(xs))
    coef = _lstsq(design, ys)
    r2, rss = _r2(ys, design @ coef)
    return ScalingFit(form, {k: float(v) for k, v in zip(names, coef)}, r2, rss, len(xs))


@dataclass(frozen=True)
class ModelScore:
    form: str
    fit: ScalingFit
    params: int
    rss: float
    aicc: float


def compare_models(xs, ys, forms=("log", "log2", "loglog", "power")) -> list[ModelScore]:
    """Rank forms by corrected AIC computed from raw-space residuals.

    Residuals smaller than ``1e-12`` of the data scale count as zero so that
    exact fits tie and the parameter penalty decides. Ties go to the form
    with fewer parameters, then to the name.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = len(xs)
    if n < 6:
        raise UsageError("model comparison needs at least 6 points")
    floor = n * (1e-12 * max(float(np.max(np.abs(ys))), 1e-300)) ** 2
    scores = []
    for form in forms:
        fit = fit_scaling(xs, ys, form)
        k = len(FORMS[form][0])
        rss = max(float(np.sum((ys - fit.predict(xs)) ** 2)), floor)
        aicc = n * math.log(rss / n) + 2 * k + 2 * k * (k + 1) / (n - k - 1)
        scores.append(ModelScore(form, fit, k, rss, aicc))
    return sorted(scores, key=lambda s: (round(s.aicc, 9), s.params, s.form))


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    grid: tuple
    policies: tuple
    r: float = 2.0
    queries: int = 1000
    trials: int = 5
    seed: int = 0
    model: TotalTimeModel = TotalTimeModel()
    failure_p: float | None = None
    redundancy: bool = False
    cluster_dim: int = 2
    intra_dim: int = 2

    def __post_init__(self):
        grid = tuple(int(n) for n in self.grid)
        if not grid or any(n < 1 for n in grid):
            raise UsageError("grid must hold positive integers")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise UsageError("grid must be strictly increasing")
        if not self.policies:
            raise UsageError("need at least one policy")
        if self.queries < 1 or self.trials < 1:
            raise UsageError("queries and trials must be >= 1")
        if self.failure_p is not None and not 0 <= self.failure_p <= 1:
            raise UsageError("failure_p must be in [0, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "policies", tuple(self.policies))


@dataclass
class SweepRow:
    requested_n: int
    policy: str
    actual_n: int = 0
    clusters: int = 0
    c: int = 0
    l: int = 0
    mean_global_hops: float = math.nan
    mean_local_rounds: float = math.nan
    mean_total_time: float = math.nan
    success_rate: float = math.nan
    se_global_hops: float = math.nan
    se_local_rounds: float = math.nan
    se_total_time: float = math.nan
    se_success_rate: float = math.nan
    error: str = ""
    trials: list = field(default_factory=list, repr=False)


SWEEP_FIELDS = (
    "requested_n", "policy", "actual_n", "clusters", "c", "l",
    "mean_global_hops", "mean_local_rounds", "mean_total_time", "success_rate",
    "se_global_hops", "se_local_rounds", "se_total_time", "se_success_rate", "error",
)


def _bootstrap_se(values, rng) -> float:
    values = np.sort(np.asarray(values, dtype=float))
    values = values[np.isfinite(values)]
    if len(values) < 2:
        return 0.0
    idx = rng.integers(0, len(values), size=(BOOTSTRAP_RESAMPLES, len(values)))
    return float(values[idx].mean(axis=1).std(ddof=1))


def _trial(spec: SweepSpec, n: int, policy: SizingPolicy, seeds):
    build_seed, query_seed, mask_seed = seeds
    net = build_overlay(
        OverlayConfig(
            requested_n=n,
            policy=policy,
            r=spec.r,
            cluster_dim=spec.cluster_dim,
            intra_dim=spec.intra_dim,
            seed=build_seed,
        )
    )
    mask = FailureMask(spec.failure_p, mask_seed) if spec.failure_p is not None else None
    summary = batch_queries(net, spec.queries, spec.model, mask, query_seed, spec.redundancy)
    return net.actual_n, net.cluster_count, net.cluster_size, net.links_per_node, summary


def _trial_seeds(master, point, policy, trial):
    ss = np.random.SeedSequence([master, point, policy, trial])
    return tuple(int(s) for s in ss.generate_state(3, dtype=np.uint64))


def _work_units(spec):
    for i, n in enumerate(spec.grid):
        for j, policy in enumerate(spec.policies):
            for t in range(spec.trials):
                yield (i, j, t), (spec, n, policy, _trial_seeds(spec.seed, i, j, t))


def _run_unit(args):
    try:
        return _trial(*args)
    except ModradarError as exc:
        return exc


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Build, query and aggregate every (grid point, policy) pair.

    Failures to build a point are reported in the row's ``error`` column and
    the sweep moves on. ``workers > 1`` runs trials in a process pool.
    """
    keys, units = zip(*_work_units(spec))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, units))
    else:
        results = [_run_unit(u) for u in units]
    by_key = dict(zip(keys, results))

    rows = []
    for i, n in enumerate(spec.grid):
        for j, policy in enumerate(spec.policies):
            row = SweepRow(requested_n=n, policy=str(policy))
            outs = [by_key[(i, j, t)] for t in range(spec.trials)]
            errors = [o for o in outs if isinstance(o, Exception)]
            if errors:
                row.error = str(errors[0])
                rows.append(row)
                continue
            row.actual_n, row.clusters, row.c, row.l = outs[0][:4]
            summaries: list[BatchSummary] = [o[4] for o in outs]
            row.trials = summaries
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed, i, j, 1 << 20]))
            for name, attr in (
                ("global_hops", "mean_global_hops"),
                ("local_rounds", "mean_local_rounds"),
                ("total_time", "mean_total_time"),
            ):
                vals = [getattr(s, attr) for s in summaries]
                finite = [v for v in vals if math.isfinite(v)]
                setattr(row, attr, float(np.mean(finite)) if finite else math.nan)
                setattr(row, "se_" + name, _bootstrap_se(vals, rng))
            rates = [s.success_rate for s in summaries]
            row.success_rate = float(np.mean(rates))
            row.se_success_rate = _bootstrap_se(rates, rng)
            rows.append(row)
    return rows


SWEEP_CSV_HEADER = "# modradar-sweep v1"
FIT_CSV_HEADER = "# modradar-fits v1"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    return v


def write_sweep_csv(rows: list[SweepRow], out) -> None:
    out.write(SWEEP_CSV_HEADER + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for row in rows:
        w.writerow([_fmt(getattr(row, f)) for f in SWEEP_FIELDS])


def sweep_fits(rows: list[SweepRow], forms=("log", "log2")) -> list[tuple[str, str, ScalingFit, int]]:
    """Fit mean global hops against cluster count for each policy.

    Returns ``(policy, form, fit, rank)`` tuples; rank comes from
    :func:`compare_models` when there are enough points, else 0.
    """
    out = []
    for policy in dict.fromkeys(r.policy for r in rows):
        sel = [r for r in rows if r.policy == policy and not r.error and r.clusters >= 16]
        sel.sort(key=lambda r: r.clusters)
        xs = [r.clusters for r in sel]
        ys = [r.mean_global_hops for r in sel]
        if len(sel) < 4 or len(set(xs)) != len(xs):
            continue
        if len(sel) >= 6:
            ranked = compare_models(xs, ys, forms)
            for rank, s in enumerate(ranked, 1):
                out.append((policy, s.form, s.fit, rank))
        else:
            for form in forms:
                out.append((policy, form, fit_scaling(xs, ys, form), 0))
    return out


def write_fit_csv(fits, out) -> None:
    out.write(FIT_CSV_HEADER + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("policy", "form", "coefficients", "r2", "rss", "points", "rank"))
    for policy, form, fit, rank in fits:
        coeffs = ";".join(f"{k}={v:.9g}" for k, v in fit.coefficients.items())
        w.writerow((policy, form, coeffs, f"{fit.r2:.9g}", f"{fit.rss:.9g}", fit.n, rank))


# --------------------------------------------------------------------------
# robustness


@dataclass
class RobustnessRow:
    p: float
    policy: str
    success_rate: float
    successes: int
    queries: int
    trial_rates: list = field(default_factory=list, repr=False)


def robustness_experiment(
    n: int,
    policies,
    p_grid,
    queries: int = 1000,
    seed: int = 0,
    redundancy: bool = True,
    trials: int = 1,
    r: float = 2.0,
    model: TotalTimeModel = TotalTimeModel(),
    workers: int = 1,
) -> list[RobustnessRow]:
    """Success rate of random queries under independent node failures.

    The same overlay (per trial) is reused across the failure grid, and the
    failure mask for a given ``(p index, trial)`` does not depend on the
    policy. With ``redundancy`` a query succeeds on reaching any live node
    of the target cluster.
    """
    p_grid = [float(p) for p in p_grid]
    if any(not 0 <= p <= 1 for p in p_grid):
        raise UsageError("failure probabilities must lie in [0, 1]")
    rows = []
    for i, p in enumerate(p_grid):
        spec = SweepSpec(
            grid=(n,),
            policies=tuple(policies),
            r=r,
            queries=queries,
            trials=trials,
            seed=seed,
            model=model,
            failure_p=p,
            redundancy=redundancy,
        )
        for srow in _run_robust_point(spec, i, workers):
            rows.append(srow)
    return rows


def _run_robust_point(spec, p_index, workers):
    units = []
    for j, policy in enumerate(spec.policies):
        for t in range(spec.trials):
            build_seed, query_seed, _ = _trial_seeds(spec.seed, 0, j, t)
            mask_seed = _trial_seeds(spec.seed, p_index, 1 << 16, t)[2]
            units.append((spec, spec.grid[0], policy, (build_seed, query_seed, mask_seed)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, units))
    else:
        results = [_run_unit(u) for u in units]
    for j, policy in enumerate(spec.policies):
        outs = results[j * spec.trials:(j + 1) * spec.trials]
        summaries = [o[4] for o in outs if not isinstance(o, Exception)]
        succ = sum(s.successes for s in summaries)
        total = sum(s.count for s in summaries)
        yield RobustnessRow(
            p=spec.failure_p,
            policy=str(policy),
            success_rate=succ / total if total else math.nan,
            successes=succ,
            queries=total,
            trial_rates=[s.success_rate for s in summaries],
        )


ROBUST_CSV_HEADER = "# modradar-robustness v1"


def write_robustness_csv(rows: list[RobustnessRow], out) -> None:
    out.write(ROBUST_CSV_HEADER + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("p", "policy", "success_rate", "successes", "queries"))
    for row in rows:
        w.writerow((f"{row.p:.9g}", row.policy, f"{row.success_rate:.9g}", row.successes, row.queries))
