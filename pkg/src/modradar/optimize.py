"""Small one-dimensional minimisation helpers."""

from __future__ import annotations

import math
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rtol: float = 1e-10,
    atol: float = 0.0,
    max_iter: int = 500,
) -> tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[lo, hi]``.

    Stops once the bracket is narrower than ``rtol * max(|a|, |b|) + atol``.
    Returns ``(x, f(x))``; the bracket ends are also checked so a monotone
    ``f`` returns the boundary.
    """
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= rtol * max(abs(a), abs(b)) + atol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    for edge in (lo, hi):
        fe = f(edge)
        if fe < fx:
            x, fx = edge, fe
    return x, fx


def log_golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rtol: float = 1e-10,
) -> tuple[float, float]:
    """Golden-section search in ``log x``; suited to scale-free positive domains."""
    if lo <= 0:
        raise ValueError("log_golden_section needs a positive domain")
    u, fu = golden_section(lambda t: f(math.exp(t)), math.log(lo), math.log(hi), rtol=0.0, atol=rtol)
    return math.exp(u), fu
