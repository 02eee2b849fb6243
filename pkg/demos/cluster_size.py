"""Choosing a cluster size: pointwise optimum vs the balance rule.

Run with ``python3 demos/cluster_size.py``.
"""
import math

from modradar.sizing import (
    SizingPolicy,
    TotalTimeModel,
    balance_cluster_size,
    minimize_cluster_size,
    minimize_tradeoff,
    model_total_time,
)

model = TotalTimeModel(a1=1.0, a2=1.0)

# %% For fixed n the model optimum sits at c = (2 a2 / a1)^2, independent of n
for n in (10**3, 10**6, 10**9):
    c, t = minimize_cluster_size(n, model)
    print(f"n={n:>10}  c*={c}  T={t:.3f}")

# %% The balance rule grows c like log^2 n instead
for k in (10, 16, 20):
    n = 2**k
    c = balance_cluster_size(n, model)
    print(f"n=2^{k}  balance c={c:8.1f}  T={model_total_time(n, c, model):.3f}  radar policy {SizingPolicy.radar().resolve(n)}")

# %% The same trade-off with arbitrary cost curves
d, total = minimize_tradeoff(lambda d: d**0.5, math.log, 1e6, (1.0, 1e6))
print(f"generic minimiser: d={d:.4f} total={total:.4f}")
