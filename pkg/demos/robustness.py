"""Query success under random node failures.

With redundancy a query succeeds once it reaches any live node of the
target cluster, so large clusters tolerate failures better.
Run with ``python3 demos/robustness.py``.
"""
from modradar.harness import robustness_experiment
from modradar.sizing import SizingPolicy

policies = [SizingPolicy.radar(), SizingPolicy.baseline(), SizingPolicy.explicit(4, 1)]
rows = robustness_experiment(4096, policies, [0.0, 0.05, 0.1, 0.2, 0.3], queries=500, trials=2)

print(f"{'p':>5}  " + "  ".join(f"{str(p):>24}" for p in policies))
for i in range(0, len(rows), len(policies)):
    chunk = rows[i:i + len(policies)]
    print(f"{chunk[0].p:5.2f}  " + "  ".join(f"{r.success_rate:24.3f}" for r in chunk))
