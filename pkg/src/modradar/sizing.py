"""Cluster sizing policies and the local/global total-time model.

Search time in a clustered overlay is modelled as

    T(c) = a1 * sqrt(c) + a2 * ln(n / c)

where ``sqrt(c)`` is the flooding diameter of a cluster of ``c`` nodes and
``ln(n / c)`` the greedy hop count across ``n / c`` clusters when each node
carries ``O(ln(n / c))`` long links. Natural logs are used throughout; a
different base only rescales ``a2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, UsageError
from .optimize import golden_section, log_golden_section

_BASES = {"2": 2.0, "e": math.e, "10": 10.0}

#: exhaustive integer scan is used up to this n, golden section beyond it
SCAN_LIMIT = 10**6


def _log(x, base):
    return math.log(x) / math.log(base)


@dataclass(frozen=True)
class TotalTimeModel:
    """Weights of the local (flooding) and global (hop) terms."""

    a1: float = 1.0
    a2: float = 1.0

    def __post_init__(self):
        for name in ("a1", "a2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise UsageError(f"{name} must be finite and non-negative, got {v}")

    def total(self, local_rounds, global_hops):
        return self.a1 * local_rounds + self.a2 * global_hops


def radar_cluster_size(n: int, b1: float = 1.0, base: float = 2.0) -> int:
    """Balance-rule cluster size ``max(1, round(b1 * log(n)**2))``."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    return max(1, int(math.floor(b1 * _log(n, base) ** 2 + 0.5)))


def densified_link_count(n: int, c: int, b2: float = 1.0, base: float = 2.0) -> int:
    """Long links per node, growing with the log of the cluster count."""
    if c < 1 or n < c:
        raise UsageError(f"need n >= c >= 1, got n={n}, c={c}")
    return max(0, int(math.floor(b2 * _log(n / c, base) + 0.5)))


@dataclass(frozen=True)
class SizingPolicy:
    """Maps a node count ``n`` to a cluster size ``c`` and long-link count ``l``.

    ``baseline`` and ``explicit`` hold both constant; ``radar`` grows ``c`` as
    ``log**2 n`` and ``l`` as ``log(n / c)``.
    """

    variant: str
    c: int = 0
    l: int = 0
    b1: float = 1.0
    b2: float = 1.0
    base: str = "2"

    def __post_init__(self):
        if self.variant not in ("baseline", "radar", "explicit"):
            raise UsageError(f"unknown policy variant {self.variant!r}")
        if self.variant == "radar":
            if self.b1 <= 0 or self.b2 <= 0:
                raise UsageError("radar policy needs b1 > 0 and b2 > 0")
            if self.base not in _BASES:
                raise UsageError(f"unsupported log base {self.base!r}")
        else:
            if self.c < 1 or self.l < 0:
                raise UsageError(f"{self.variant} policy needs c >= 1 and l >= 0")

    @classmethod
    def baseline(cls, c: int = 16, l: int = 1) -> "SizingPolicy":
        return cls("baseline", c=c, l=l)

    @classmethod
    def radar(cls, b1: float = 1.0, b2: float = 1.0, base: str = "2") -> "SizingPolicy":
        return cls("radar", b1=b1, b2=b2, base=str(base))

    @classmethod
    def explicit(cls, c: int, l: int) -> "SizingPolicy":
        return cls("explicit", c=c, l=l)

    def cluster_size(self, n: int) -> int:
        if self.variant == "radar":
            return radar_cluster_size(n, self.b1, _BASES[self.base])
        return self.c

    def link_count(self, n: int, c: int) -> int:
        if self.variant == "radar":
            if n <= c:
                return 0
            return densified_link_count(n, c, self.b2, _BASES[self.base])
        return self.l

    def resolve(self, n: int) -> tuple[int, int]:
        c = self.cluster_size(n)
        return c, self.link_count(n, c)

    def __str__(self):
        if self.variant == "radar":
            return f"radar:b1={self.b1:g},b2={self.b2:g},base={self.base}"
        return f"{self.variant}:c={self.c},l={self.l}"


_POLICY_KEYS = {
    "baseline": {"c": int, "l": int},
    "explicit": {"c": int, "l": int},
    "radar": {"b1": float, "b2": float, "base": str},
}


def parse_policy(text: str) -> SizingPolicy:
    """Parse ``baseline:c=16,l=1``, ``radar:b1=1,b2=1,base=2`` or ``explicit:c=64,l=4``."""
    variant, sep, rest = text.strip().partition(":")
    if variant not in _POLICY_KEYS:
        raise UsageError(f"unknown policy variant {variant!r} in {text!r}")
    keys = _POLICY_KEYS[variant]
    kwargs = {}
    for token in filter(None, rest.split(",")) if sep else ():
        m = re.fullmatch(r"\s*(\w+)\s*=\s*([^\s=]+)\s*", token)
        if not m:
            raise UsageError(f"malformed policy token {token!r} in {text!r}")
        key, value = m.groups()
        if key not in keys:
            raise UsageError(f"unknown key {key!r} for {variant} policy (token {token!r})")
        try:
            kwargs[key] = keys[key](value)
        except ValueError:
            raise UsageError(f"bad value in policy token {token!r}") from None
    if variant == "explicit" and {"c", "l"} - set(kwargs):
        raise UsageError(f"explicit policy needs both c and l in {text!r}")
    if variant == "baseline":
        return SizingPolicy.baseline(**kwargs)
    return SizingPolicy(variant, **kwargs)


def model_total_time(n: float, c: float, model: TotalTimeModel) -> float:
    if c < 1 or c > n:
        raise UsageError(f"need 1 <= c <= n, got c={c}, n={n}")
    return model.a1 * math.sqrt(c) + model.a2 * math.log(n / c)


def minimize_cluster_size(
    n: int, model: TotalTimeModel, method: str = "auto"
) -> tuple[int, float]:
    """Integer cluster size minimising the total-time model at fixed ``n``.

    ``method="scan"`` evaluates every ``c`` in ``[1, n]``; ``"golden"`` minimises
    the continuous relaxation in ``log c`` and then checks the two integer
    neighbours. ``"auto"`` scans up to :data:`SCAN_LIMIT`. Ties go to the
    smaller ``c``.
    """
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    if method == "auto":
        method = "scan" if n <= SCAN_LIMIT else "golden"
    if method == "scan":
        cs = np.arange(1, n + 1, dtype=np.float64)
        t = model.a1 * np.sqrt(cs) + model.a2 * np.log(n / cs)
        i = int(np.argmin(t))
        return i + 1, float(t[i])
    if method != "golden":
        raise UsageError(f"unknown method {method!r}")
    if n == 1:
        return 1, model_total_time(1, 1, model)
    x, _ = log_golden_section(lambda c: model_total_time(n, min(max(c, 1.0), n), model), 1.0, float(n))
    best = None
    for k in sorted({min(n, max(1, k)) for k in (math.floor(x), math.ceil(x))}):
        t = model_total_time(n, k, model)
        if best is None or t < best[1]:
            best = (k, t)
    return best


def balance_cluster_size(n: float, model: TotalTimeModel) -> float:
    """Cluster size where the local term equals the ``a2 * ln n`` global term."""
    if n < 2:
        raise UsageError(f"n must be >= 2, got {n}")
    if model.a1 <= 0:
        raise UsageError("balance rule needs a1 > 0")
    return (model.a2 * math.log(n) / model.a1) ** 2


def minimize_tradeoff(
    f: Callable[[float], float],
    g: Callable[[float], float],
    n: float,
    domain: tuple[float, float],
    points: int = 2048,
    rtol: float = 1e-6,
) -> tuple[float, float]:
    """Minimise ``f(d) + g(n / d)`` over a positive interval of ``d``.

    A log-spaced grid locates the best cell, then golden-section search
    refines inside the neighbouring cells. The result is the global minimum
    when the total is unimodal; otherwise it is the best grid basin.
    """
    lo, hi = map(float, domain)
    if not (0 < lo <= hi):
        raise UsageError(f"domain must be a positive interval, got {domain}")
    if points < 1000:
        raise UsageError("grid needs at least 1000 points")

    def total(d):
        return f(d) + g(n / d)

    grid = np.geomspace(lo, hi, points) if hi > lo else np.array([lo])
    values = np.empty(len(grid))
    for i, d in enumerate(grid):
        v = total(float(d))
        if not math.isfinite(v):
            raise DomainError(f"cost is not finite at d={d!r}")
        values[i] = v
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    if b <= a:
        return float(grid[i]), float(values[i])
    d, t = golden_section(total, float(a), float(b), rtol=rtol * 1e-2)
    if values[i] <= t:
        return float(grid[i]), float(values[i])
    return d, t
