"""Greedy hop counts with one long link per node versus densified links.

Takes around ten seconds. Run with ``python3 demos/hop_scaling.py``.
"""
import math

from modradar.harness import SweepSpec, compare_models, run_sweep
from modradar.sizing import SizingPolicy

c = 16
grid = [c * 2**k for k in range(8, 14)]

sparse = run_sweep(SweepSpec(grid=grid, policies=(SizingPolicy.baseline(c, 1),), queries=500, trials=3))
dense = []
for n in grid:
    l = math.ceil(math.log2(n / c))
    dense += run_sweep(SweepSpec(grid=(n,), policies=(SizingPolicy.explicit(c, l),), queries=500, trials=3))

print("clusters  hops(l=1)  hops(densified)  l")
for a, b in zip(sparse, dense):
    print(f"{a.clusters:8d}  {a.mean_global_hops:9.3f}  {b.mean_global_hops:15.3f}  {b.l}")

# %% Which growth law fits best?
xs = [r.clusters for r in sparse]
for label, rows in (("l=1", sparse), ("densified", dense)):
    ranking = compare_models(xs, [r.mean_global_hops for r in rows], ("log", "log2"))
    print(label, "->", [s.form for s in ranking])
