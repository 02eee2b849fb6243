"""Lymph-node architecture scaling.

An organism of mass ``M`` holds ``N`` lymph nodes of volume ``V`` with total
volume ``N * V = k * M``. Responding to an infection costs

* a recruitment time ``t_comm = n_comm / rate_comm`` where the number of
  nodes to contact is ``n_comm = beta_B * M / (beta_cell * V)`` and the inflow
  rate is ``rate_comm = beta_rate * V``, so ``t_comm = a * M / V**2`` with
  ``a = beta_B / (beta_cell * beta_rate)``;
* a migration time ``t_migrate = b * (M / N) ** (1/3)``, the radius of the
  tissue region each node drains.

Summing the two and minimising over ``V`` gives
``V* = (6 a M k**(1/3) / b) ** (3/7)``, hence ``V* ~ M**(3/7)``,
``N* ~ M**(4/7)`` and a response time ``~ M**(1/7)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .errors import UsageError
from .optimize import golden_section


@dataclass(frozen=True)
class OrganismParams:
    M: float = 1.0
    k: float = 1.0
    b: float = 1.0
    beta_B: float = 1.0
    beta_cell: float = 1.0
    beta_rate: float = 1.0

    def __post_init__(self):
        for name, v in vars(self).items():
            if not (math.isfinite(v) and v > 0):
                raise UsageError(f"{name} must be finite and positive, got {v}")

    @property
    def a(self) -> float:
        """Composite communication-time coefficient."""
        return self.beta_B / (self.beta_cell * self.beta_rate)

    def with_mass(self, M: float) -> "OrganismParams":
        return replace(self, M=M)


@dataclass(frozen=True)
class LnArchitecture:
    V: float
    N: float

    @classmethod
    def from_volume(cls, p: OrganismParams, V: float) -> "LnArchitecture":
        if not V > 0:
            raise UsageError(f"lymph node volume must be positive, got {V}")
        return cls(V=V, N=p.k * p.M / V)

    @classmethod
    def from_count(cls, p: OrganismParams, N: float) -> "LnArchitecture":
        if not N > 0:
            raise UsageError(f"lymph node count must be positive, got {N}")
        return cls(V=p.k * p.M / N, N=N)


def n_comm(p: OrganismParams, V: float) -> float:
    """Number of remote lymph nodes an infected node must recruit from."""
    if not V > 0:
        raise UsageError(f"V must be positive, got {V}")
    return p.beta_B * p.M / (p.beta_cell * V)


def t_comm(p: OrganismParams, V: float) -> float:
    return n_comm(p, V) / (p.beta_rate * V)


def t_migrate(p: OrganismParams, N: float) -> float:
    if not N > 0:
        raise UsageError(f"N must be positive, got {N}")
    return p.b * (p.M / N) ** (1.0 / 3.0)


def total_response_time(p: OrganismParams, arch: LnArchitecture) -> float:
    return t_comm(p, arch.V) + t_migrate(p, arch.N)


def closed_form_volume(p: OrganismParams) -> float:
    """Stationary point of the total response time in ``V``."""
    return (6.0 * p.a * p.M * p.k ** (1.0 / 3.0) / p.b) ** (3.0 / 7.0)


def _time_of_volume(p, V):
    # t_comm + t_migrate with N = kM/V substituted
    return p.a * p.M / V**2 + p.b * (V / p.k) ** (1.0 / 3.0)


def _slope_of_volume(p, V):
    return -2.0 * p.a * p.M / V**3 + p.b / 3.0 * p.k ** (-1.0 / 3.0) * V ** (-2.0 / 3.0)


def optimize_architecture(
    p: OrganismParams, points: int = 12_001, decades: float = 12.0, rtol: float = 1e-10
) -> LnArchitecture:
    """Numerically optimal lymph-node volume and count for ``p``.

    A log-spaced scan of ``points`` volumes spanning ``decades`` decades
    around the analytic optimum brackets the minimum; the bracket is then
    bisected on the sign of ``dT/dV`` in ``log V``. Comparing ``T`` values
    alone cannot resolve ``V`` much below ``sqrt(eps)`` on a flat minimum.
    """
    centre = math.log10(closed_form_volume(p))
    grid = np.logspace(centre - decades / 2, centre + decades / 2, points)
    values = _time_of_volume(p, grid)
    i = int(np.argmin(values))
    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, points - 1)])
    if _slope_of_volume(p, math.exp(lo)) >= 0 or _slope_of_volume(p, math.exp(hi)) <= 0:
        # minimum on the grid edge; fall back to comparing values
        u, _ = golden_section(lambda t: _time_of_volume(p, math.exp(t)), lo, hi, rtol=0.0, atol=rtol)
        return LnArchitecture.from_volume(p, math.exp(u))
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if _slope_of_volume(p, math.exp(mid)) < 0:
            lo = mid
        else:
            hi = mid
    return LnArchitecture.from_volume(p, math.exp(0.5 * (lo + hi)))


@dataclass(frozen=True)
class PolicyRow:
    M: float
    policy: str
    V: float
    N: float
    t_comm: float
    t_migrate: float
    T: float


POLICIES = ("fixed-V", "fixed-N", "optimal")


def evaluate(p: OrganismParams, arch: LnArchitecture, policy: str) -> PolicyRow:
    tc, tm = t_comm(p, arch.V), t_migrate(p, arch.N)
    return PolicyRow(p.M, policy, arch.V, arch.N, tc, tm, tc + tm)


def compare_policies(
    masses: Iterable[float],
    base: OrganismParams | None = None,
    V0: float = 1.0,
    N0: float = 1.0,
) -> list[PolicyRow]:
    """Rows for fixed-volume, fixed-count and optimal architectures at each mass.

    fixed-V keeps every lymph node at volume ``V0``; fixed-N keeps ``N0`` nodes
    that grow with the organism.
    """
    base = base or OrganismParams()
    masses = np.asarray(list(masses), dtype=float)
    if len(masses) < 10:
        raise UsageError("need at least 10 masses")
    if masses.min() <= 0 or math.log10(masses.max() / masses.min()) < 4 - 1e-9:
        raise UsageError("mass grid must be positive and span at least 4 decades")
    rows = []
    for M in masses:
        p = base.with_mass(float(M))
        rows.append(evaluate(p, LnArchitecture.from_volume(p, V0), "fixed-V"))
        rows.append(evaluate(p, LnArchitecture.from_count(p, N0), "fixed-N"))
        rows.append(evaluate(p, optimize_architecture(p), "optimal"))
    return rows


def policy_fits(rows: list[PolicyRow], min_mass: float | None = None) -> dict:
    """Power-law fits of ``T`` against ``M`` per policy, optionally above ``min_mass``."""
    from .harness import fit_scaling

    fits = {}
    for policy in POLICIES:
        sel = [r for r in rows if r.policy == policy and (min_mass is None or r.M >= min_mass)]
        xs = np.array([r.M for r in sel])
        ys = np.array([r.T for r in sel])
        fits[policy] = fit_scaling(xs, ys, "power")
    return fits


POLICY_CSV_HEADER = "# modradar-immune v1"


def write_policy_csv(rows: list[PolicyRow], out) -> None:
    out.write(POLICY_CSV_HEADER + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("M", "policy", "V", "N", "t_comm", "t_migrate", "T"))
    for r in rows:
        w.writerow(
            (f"{r.M:.9g}", r.policy) + tuple(f"{v:.9g}" for v in (r.V, r.N, r.t_comm, r.t_migrate, r.T))
        )


# Lymph node counts and sizes reported for mice and humans. Two species
# cannot pin an exponent; kept for illustration only.
MOUSE = {"mass_g": 20.0, "ln_count": 24, "ln_mass_g": 0.004}
HUMAN = {
    "mass_g": MOUSE["mass_g"] * 3000,
    "ln_count": MOUSE["ln_count"] * 20,
    "ln_mass_g": MOUSE["ln_mass_g"] * 200,
}


def two_point_exponents(small=MOUSE, large=HUMAN) -> dict[str, float]:
    """Apparent size and count exponents between two species."""
    ratio = math.log(large["mass_g"] / small["mass_g"])
    return {
        "ln_size": math.log(large["ln_mass_g"] / small["ln_mass_g"]) / ratio,
        "ln_count": math.log(large["ln_count"] / small["ln_count"]) / ratio,
    }
