"""Query execution on a built overlay.

A query first travels greedily across clusters, each handling node forwarding
along whichever of its own gateway or long links lands closest to the target
cluster. Once inside the target cluster the entry node floods its intra-grid
neighbours in synchronous rounds until the target node is reached.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UsageError
from .overlay import OverlayNetwork
from .sizing import TotalTimeModel

LONG, GATEWAY = 0, 1


class Query(NamedTuple):
    source: int
    target: int

    @classmethod
    def from_coords(cls, net: OverlayNetwork, source, target) -> "Query":
        """Build from ``(cluster_coord, intra_coord)`` pairs."""
        return cls(net.node_id(*source), net.node_id(*target))


class QueryOutcome(NamedTuple):
    global_hops: int
    local_rounds: int
    local_messages: int
    success: bool
    total_time: float


@dataclass(frozen=True)
class FailureMask:
    """Independent node failures with probability ``p``."""

    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise UsageError(f"failure probability must be in [0, 1], got {self.p}")

    def dead(self, n: int) -> np.ndarray:
        if self.p == 0.0:
            return np.zeros(n, dtype=bool)
        if self.p == 1.0:
            return np.ones(n, dtype=bool)
        return np.random.default_rng(self.seed).random(n) < self.p

    def alive(self, n: int) -> np.ndarray:
        return ~self.dead(n)


def _alive_array(net, mask):
    if mask is None:
        return None
    if isinstance(mask, FailureMask):
        return mask.alive(net.actual_n)
    alive = np.asarray(mask, dtype=bool)
    if alive.shape != (net.actual_n,):
        raise UsageError("alive array must have one entry per node")
    return alive


class _Router:
    """Per-network lookup tables as plain Python lists for fast hop loops."""

    def __init__(self, net: OverlayNetwork, alive: np.ndarray | None):
        self.net = net
        self.c = net.cluster_size
        self.m = net.cluster_side
        self.coords = [tuple(row) for row in net.cluster_coords.tolist()]
        self.gates = net.cluster_neighbours.tolist()
        self.intra = net.intra_neighbours.tolist()
        self.long_links = net.long_links
        self.alive = alive
        self.alive_list = alive.tolist() if alive is not None else None

    def dist(self, a, b):
        m = self.m
        total = 0
        for x, y in zip(a, b):
            d = x - y if x >= y else y - x
            total += d if 2 * d <= m else m - d
        return total

    def route(self, source, target_cluster, trace=None):
        c = self.c
        alive = self.alive_list
        if alive is not None and not alive[source]:
            return source, 0, False
        budget = 4 * self.net.cluster_count
        tcoord = self.coords[target_cluster]
        node = source
        cl = node // c
        here = self.dist(self.coords[cl], tcoord)
        hops = 0
        if trace is not None:
            trace.append(node)
        while cl != target_cluster:
            if hops >= budget:
                return node, hops, False
            intra = node - cl * c
            best = None
            for v in self.long_links[node].tolist():
                if alive is not None and not alive[v]:
                    continue
                vc = v // c
                key = (self.dist(self.coords[vc], tcoord), self.coords[vc], LONG, v)
                if best is None or key < best:
                    best = key
            for vc in self.gates[cl]:
                v = vc * c + intra
                if alive is not None and not alive[v]:
                    continue
                key = (self.dist(self.coords[vc], tcoord), self.coords[vc], GATEWAY, v)
                if best is None or key < best:
                    best = key
            if best is None or best[0] >= here:
                return node, hops, False
            here, node = best[0], best[3]
            cl = node // c
            hops += 1
            if trace is not None:
                trace.append(node)
        return node, hops, True

    def flood(self, entry, target):
        if entry == target:
            return 0, 0, True
        c = self.c
        base = (entry // c) * c
        if target // c != entry // c:
            raise UsageError("flooding target must lie in the entry node's cluster")
        alive = self.alive_list
        goal = target - base
        if alive is not None and not alive[target]:
            goal = -1
        nbrs = self.intra
        seen = {entry - base}
        frontier = [entry - base]
        rounds = messages = 0
        while frontier:
            rounds += 1
            nxt = []
            for u in frontier:
                row = nbrs[u]
                messages += len(row)
                for v in row:
                    if v in seen:
                        continue
                    if alive is not None and not alive[base + v]:
                        continue
                    seen.add(v)
                    nxt.append(v)
            if goal in seen:
                return rounds, messages, True
            frontier = nxt
        return rounds, messages, False


def route_global(net: OverlayNetwork, query: Query, mask=None, trace: list | None = None):
    """Greedy inter-cluster forwarding.

    Returns ``(entry_node, global_hops, success)``. Only the handling node's
    own links are considered; a link is taken only if it strictly reduces the
    cluster distance to the target. Ties break on the lexicographically
    smaller cluster coordinate, then long links before gateways. When
    ``trace`` is a list, every visited node is appended to it.
    """
    router = _Router(net, _alive_array(net, mask))
    return router.route(query.source, net.cluster_of(query.target), trace)


def flood_local(net: OverlayNetwork, entry: int, target: int, mask=None):
    """Synchronous-round flooding inside one cluster.

    Returns ``(rounds, messages, success)``: the round in which ``target`` is
    first reached, the number of link activations up to and including that
    round, and whether it was reached through live nodes at all.
    """
    return _Router(net, _alive_array(net, mask)).flood(entry, target)


def _run(router, model, query, redundancy):
    net = router.net
    target_cluster = net.cluster_of(query.target)
    entry, hops, ok = router.route(query.source, target_cluster)
    if not ok:
        return QueryOutcome(hops, 0, 0, False, model.total(0, hops))
    if redundancy:
        return QueryOutcome(hops, 0, 0, True, model.total(0, hops))
    rounds, messages, ok = router.flood(entry, query.target)
    return QueryOutcome(hops, rounds, messages, ok, model.total(rounds, hops))


def run_query(
    net: OverlayNetwork,
    query: Query,
    model: TotalTimeModel,
    mask=None,
    redundancy: bool = False,
) -> QueryOutcome:
    """Route then flood; ``total_time = a1 * local_rounds + a2 * global_hops``.

    With ``redundancy`` set, reaching any live node of the target cluster
    counts as success and no flooding is performed.
    """
    return _run(_Router(net, _alive_array(net, mask)), model, query, redundancy)


@dataclass(frozen=True)
class BatchSummary:
    count: int
    successes: int
    mean_global_hops: float
    max_global_hops: int
    mean_local_rounds: float
    max_local_rounds: int
    mean_local_messages: float
    mean_total_time: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.count if self.count else 0.0

    @classmethod
    def from_outcomes(cls, outcomes: list[QueryOutcome]) -> "BatchSummary":
        """Means are taken over successful queries only (nan if there are none)."""
        ok = [o for o in outcomes if o.success]
        if ok:
            arr = np.array([(o.global_hops, o.local_rounds, o.local_messages, o.total_time) for o in ok], dtype=float)
            means = arr.mean(axis=0)
            maxes = arr.max(axis=0)
        else:
            means = np.full(4, math.nan)
            maxes = np.zeros(4)
        return cls(
            count=len(outcomes),
            successes=len(ok),
            mean_global_hops=float(means[0]),
            max_global_hops=int(maxes[0]),
            mean_local_rounds=float(means[1]),
            max_local_rounds=int(maxes[1]),
            mean_local_messages=float(means[2]),
            mean_total_time=float(means[3]),
        )


def draw_queries(net: OverlayNetwork, count: int, seed, alive: np.ndarray | None = None) -> list[Query]:
    """``count`` (source, target) pairs uniform over live nodes, independent per slot."""
    if count < 1:
        raise UsageError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    pool = np.flatnonzero(alive) if alive is not None else None
    if pool is None or len(pool) == 0:
        pairs = rng.integers(0, net.actual_n, size=(count, 2))
    else:
        pairs = pool[rng.integers(0, len(pool), size=(count, 2))]
    return [Query(int(s), int(t)) for s, t in pairs.tolist()]


def batch_queries(
    net: OverlayNetwork,
    count: int,
    model: TotalTimeModel,
    mask=None,
    seed=0,
    redundancy: bool = False,
    outcomes: list | None = None,
) -> BatchSummary:
    """Run ``count`` random queries and summarise them.

    Pass a list as ``outcomes`` to collect the per-query results.
    """
    alive = _alive_array(net, mask)
    router = _Router(net, alive)
    queries = draw_queries(net, count, seed, alive)
    results = [_run(router, model, q, redundancy) for q in queries]
    if outcomes is not None:
        outcomes.extend(results)
    return BatchSummary.from_outcomes(results)


QUERY_CSV_HEADER = "# modradar-queries v1"
QUERY_FIELDS = ("query", "global_hops", "local_rounds", "local_messages", "success", "total_time")


def write_outcomes_csv(outcomes: list[QueryOutcome], out) -> None:
    out.write(QUERY_CSV_HEADER + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(QUERY_FIELDS)
    for i, o in enumerate(outcomes):
        w.writerow(
            (i, o.global_hops, o.local_rounds, o.local_messages, int(o.success), f"{o.total_time:.9g}")
        )
