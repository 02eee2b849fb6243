"""Two-level clustered small-world overlay.

Clusters sit on a ``cluster_dim``-dimensional torus of side ``m``; inside each
cluster the ``c`` nodes form an ``intra_dim``-dimensional torus grid. Nodes
are numbered ``cluster_index * c + intra_index`` with both indices row-major.

Every node carries

* ``2 * intra_dim`` short links to its grid neighbours in the same cluster,
* ``2 * cluster_dim`` gateway links to its mirror node (same intra
  coordinate) in each adjacent cluster,
* ``l`` long links whose target cluster is drawn with probability
  proportional to ``d ** -r`` and whose endpoint is uniform inside it.

Gateway and intra links are implied by the geometry and exposed as shared
tables; only the long links are sampled and stored per node.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ResourceError, UsageError
from .sizing import SizingPolicy
from .torus import (
    TorusCoord,
    all_coords,
    distance_census,
    offsets_by_distance,
)

DEFAULT_NODE_BUDGET = 1 << 22

#: presets for the long-link decay exponent
PAPER_LITERAL_R = 1.0


def navigable_r(cluster_dim: int) -> float:
    """Decay exponent of the navigable regime on a ``cluster_dim`` lattice."""
    return float(cluster_dim)


@dataclass(frozen=True)
class OverlayConfig:
    requested_n: int
    policy: SizingPolicy
    r: float = 2.0
    cluster_dim: int = 2
    intra_dim: int = 2
    seed: int = 0
    max_nodes: int = DEFAULT_NODE_BUDGET

    def __post_init__(self):
        if self.requested_n < 1:
            raise UsageError(f"requested_n must be >= 1, got {self.requested_n}")
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise UsageError(f"link exponent r must be finite and >= 0, got {self.r}")
        if self.cluster_dim < 1 or self.intra_dim < 1:
            raise UsageError("cluster_dim and intra_dim must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def resolve_shape(
    requested_n: int,
    policy: SizingPolicy,
    cluster_dim: int = 2,
    intra_dim: int = 2,
) -> tuple[int, int, int]:
    """Discretise ``(n, c)`` into ``(cluster_side, intra_side, actual_n)``.

    The policy cluster size is coerced to the nearest perfect ``intra_dim``
    power and the cluster count to the nearest perfect ``cluster_dim`` power.
    """
    if requested_n < 1:
        raise UsageError(f"requested_n must be >= 1, got {requested_n}")
    c_policy = policy.cluster_size(requested_n)
    intra_side = max(1, _round_half_up(c_policy ** (1.0 / intra_dim)))
    c = intra_side**intra_dim
    m = max(1, _round_half_up((requested_n / c) ** (1.0 / cluster_dim)))
    return m, intra_side, m**cluster_dim * c


def _neighbour_table(side: int, dim: int) -> np.ndarray:
    """``(side**dim, 2*dim)`` table of +/-1 neighbours on each axis, row-major ids."""
    coords = all_coords(side, dim)
    strides = side ** np.arange(dim - 1, -1, -1)
    cols = []
    for axis in range(dim):
        for step in (1, -1):
            moved = coords.copy()
            moved[:, axis] = (moved[:, axis] + step) % side
            cols.append(moved @ strides)
    return np.stack(cols, axis=1).astype(np.int64)


class LongLinkSampler:
    """Exact sampler of long-link target clusters on a cluster torus.

    A distance ``d >= 1`` is drawn with probability proportional to
    ``census[d] * d ** -r`` and the offset is then uniform among the cells at
    that distance, which makes each individual cluster ``B != A`` have
    probability proportional to ``dist(A, B) ** -r``.
    """

    def __init__(self, side: int, dim: int, r: float, census: dict[int, int] | None = None):
        if side**dim < 2:
            raise UsageError("long links need at least two clusters")
        self.side, self.dim, self.r = side, dim, float(r)
        self.census = census if census is not None else distance_census(side, dim)
        groups = offsets_by_distance(side, dim)
        self.distances = np.array([d for d in sorted(groups) if d > 0], dtype=np.int64)
        self.offsets = np.concatenate([groups[d] for d in self.distances])
        sizes = np.array([self.census[d] for d in self.distances], dtype=np.int64)
        self.group_start = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.group_size = sizes
        weights = sizes * self.distances.astype(float) ** -self.r
        self.distance_pmf = weights / weights.sum()

    def cluster_pmf(self, d: int) -> float:
        """Probability of one particular cluster at distance ``d``."""
        i = int(np.searchsorted(self.distances, d))
        if i == len(self.distances) or self.distances[i] != d:
            return 0.0
        return float(self.distance_pmf[i] / self.group_size[i])

    def sample_offsets(self, count: int, rng: np.random.Generator) -> np.ndarray:
        which = rng.choice(len(self.distances), size=count, p=self.distance_pmf)
        pick = self.group_start[which] + np.floor(
            rng.random(count) * self.group_size[which]
        ).astype(np.int64)
        return self.offsets[pick]


def sample_long_link(
    source: TorusCoord,
    r: float,
    rng: np.random.Generator,
    census: dict[int, int] | None = None,
) -> TorusCoord:
    """Draw one long-link target cluster for ``source``."""
    sampler = LongLinkSampler(source.side, source.dim, r, census)
    off = sampler.sample_offsets(1, rng)[0]
    axes = (np.asarray(source.axes) + off) % source.side
    return TorusCoord(tuple(int(a) for a in axes), source.side)


@dataclass(frozen=True, eq=False)
class OverlayNetwork:
    """Immutable built overlay. Use :func:`build_overlay` to construct."""

    config: OverlayConfig
    cluster_side: int
    intra_side: int
    long_links: np.ndarray = field(repr=False)
    links_per_node: int = 0
    notes: tuple[str, ...] = ()

    @property
    def cluster_dim(self) -> int:
        return self.config.cluster_dim

    @property
    def intra_dim(self) -> int:
        return self.config.intra_dim

    @property
    def cluster_count(self) -> int:
        return self.cluster_side**self.cluster_dim

    @property
    def cluster_size(self) -> int:
        return self.intra_side**self.intra_dim

    @property
    def actual_n(self) -> int:
        return self.cluster_count * self.cluster_size

    @cached_property
    def cluster_coords(self) -> np.ndarray:
        return all_coords(self.cluster_side, self.cluster_dim)

    @cached_property
    def intra_coords(self) -> np.ndarray:
        return all_coords(self.intra_side, self.intra_dim)

    @cached_property
    def cluster_neighbours(self) -> np.ndarray:
        """``(cluster_count, 2*cluster_dim)`` adjacent cluster ids."""
        return _neighbour_table(self.cluster_side, self.cluster_dim)

    @cached_property
    def intra_neighbours(self) -> np.ndarray:
        """``(c, 2*intra_dim)`` intra-cluster neighbour indices, shared by all clusters."""
        return _neighbour_table(self.intra_side, self.intra_dim)

    def cluster_of(self, node: int) -> int:
        return node // self.cluster_size

    def node_id(self, cluster: TorusCoord | tuple, intra: TorusCoord | tuple) -> int:
        ca = cluster.axes if isinstance(cluster, TorusCoord) else tuple(cluster)
        ia = intra.axes if isinstance(intra, TorusCoord) else tuple(intra)
        if len(ca) != self.cluster_dim or len(ia) != self.intra_dim:
            raise UsageError("coordinate dimension does not match the network")
        if not all(0 <= a < self.cluster_side for a in ca) or not all(
            0 <= a < self.intra_side for a in ia
        ):
            raise UsageError(f"coordinate out of range: {ca}, {ia}")
        ci = int(np.ravel_multi_index(ca, (self.cluster_side,) * self.cluster_dim))
        ii = int(np.ravel_multi_index(ia, (self.intra_side,) * self.intra_dim))
        return ci * self.cluster_size + ii

    def locate(self, node: int) -> tuple[TorusCoord, TorusCoord]:
        ci, ii = divmod(int(node), self.cluster_size)
        return (
            TorusCoord(tuple(int(a) for a in self.cluster_coords[ci]), self.cluster_side),
            TorusCoord(tuple(int(a) for a in self.intra_coords[ii]), self.intra_side),
        )

    def gateway_links(self, node: int) -> np.ndarray:
        ci, ii = divmod(int(node), self.cluster_size)
        return self.cluster_neighbours[ci] * self.cluster_size + ii

    def intra_links(self, node: int) -> np.ndarray:
        ci, ii = divmod(int(node), self.cluster_size)
        return ci * self.cluster_size + self.intra_neighbours[ii]

    def long_link_distances(self) -> np.ndarray:
        """Cluster distance spanned by every long link, flattened."""
        if self.links_per_node == 0:
            return np.zeros(0, dtype=np.int64)
        src = np.repeat(np.arange(self.actual_n) // self.cluster_size, self.links_per_node)
        dst = self.long_links.ravel() // self.cluster_size
        d = np.abs(self.cluster_coords[src] - self.cluster_coords[dst]) % self.cluster_side
        return np.minimum(d, self.cluster_side - d).sum(axis=1)

    def link_table_bytes(self) -> bytes:
        return self.long_links.tobytes()


def build_overlay(config: OverlayConfig) -> OverlayNetwork:
    m, intra_side, actual_n = resolve_shape(
        config.requested_n, config.policy, config.cluster_dim, config.intra_dim
    )
    if actual_n > config.max_nodes:
        raise ResourceError(
            f"resolved overlay has {actual_n} nodes, budget is {config.max_nodes}",
            actual_n=actual_n,
        )
    c = intra_side**config.intra_dim
    l = config.policy.link_count(config.requested_n, c)
    cluster_count = m**config.cluster_dim
    notes = []
    if cluster_count == 1 and l > 0:
        notes.append(f"single cluster: {l} long links per node skipped")
        l = 0

    rng = np.random.default_rng(config.seed)
    if l > 0:
        sampler = LongLinkSampler(m, config.cluster_dim, config.r)
        total = actual_n * l
        coords = all_coords(m, config.cluster_dim)
        src_cluster = np.repeat(np.arange(actual_n) // c, l)
        target = (coords[src_cluster] + sampler.sample_offsets(total, rng)) % m
        strides = m ** np.arange(config.cluster_dim - 1, -1, -1)
        target_cluster = target @ strides
        endpoint = rng.integers(0, c, size=total)
        long_links = (target_cluster * c + endpoint).reshape(actual_n, l)
    else:
        long_links = np.zeros((actual_n, 0), dtype=np.int64)
    long_links = np.ascontiguousarray(long_links, dtype=np.int64)
    long_links.setflags(write=False)
    return OverlayNetwork(
        config=config,
        cluster_side=m,
        intra_side=intra_side,
        long_links=long_links,
        links_per_node=l,
        notes=tuple(notes),
    )


TOPOLOGY_HEADER = "# modradar-topology v1"


def dump_topology(net: OverlayNetwork, out=None) -> str | None:
    """Write one tab-separated line per node: id, cluster, intra, long-link endpoints.

    Coordinates are comma-joined axes; long-link endpoints are space-separated
    node ids. Returns the text when ``out`` is None.
    """
    buf = out if out is not None else io.StringIO()
    buf.write(TOPOLOGY_HEADER + "\n")
    buf.write("node_id\tcluster\tintra\tlong_links\n")
    cc = [",".join(map(str, row)) for row in net.cluster_coords.tolist()]
    ic = [",".join(map(str, row)) for row in net.intra_coords.tolist()]
    c = net.cluster_size
    for node, links in enumerate(net.long_links.tolist()):
        ci, ii = divmod(node, c)
        buf.write(f"{node}\t{cc[ci]}\t{ic[ii]}\t{' '.join(map(str, links))}\n")
    if out is None:
        return buf.getvalue()
    return None


def load_topology(text: str) -> list[tuple[int, tuple[int, ...], tuple[int, ...], tuple[int, ...]]]:
    """Parse :func:`dump_topology` output back into per-node records."""
    lines = text.splitlines()
    if not lines or lines[0] != TOPOLOGY_HEADER:
        raise UsageError("not a modradar topology dump")
    records = []
    for line in lines[2:]:
        node, cluster, intra, links = line.split("\t")
        records.append(
            (
                int(node),
                tuple(int(a) for a in cluster.split(",")),
                tuple(int(a) for a in intra.split(",")),
                tuple(int(a) for a in links.split()) if links else (),
            )
        )
    return records
