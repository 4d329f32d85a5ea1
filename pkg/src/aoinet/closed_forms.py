"""Closed-form average ages and tails for the cascade and triangle layouts.

Convenience formulas for a serial relay chain, a single triangle (source,
relay, destination with a direct shortcut), and a chain of triangles glued
at shared vertices.  These double as independent oracles for the recursion
engines in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Near-equal relay rates route to the Erlang branch: the distinct-rate
# formulas have a removable singularity at mu_sv == mu_vd.
EQUAL_RATE_RTOL = 1e-9


@dataclass(frozen=True)
class TriangleRates:
    lam: float
    mu_sv: float  # source -> relay
    mu_vd: float  # relay -> destination
    mu_sd: float  # source -> destination (shortcut)

    def __post_init__(self):
        for name in ("lam", "mu_sv", "mu_vd", "mu_sd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _rates_equal(a: float, b: float) -> bool:
    return abs(a - b) <= EQUAL_RATE_RTOL * max(a, b)


def serial_cascade_age(lam: float, rates) -> float:
    """Average destination age of a serial relay chain: 1/lam + sum 1/mu."""
    rates = list(rates)
    if not rates:
        raise ValueError("rate list must be non-empty")
    if not lam > 0 or any(not mu > 0 for mu in rates):
        raise ValueError("all rates must be positive")
    return 1.0 / lam + sum(1.0 / mu for mu in rates)


def triangle_age(r: TriangleRates) -> float:
    """Average destination age of the triangle layout."""
    if _rates_equal(r.mu_sv, r.mu_vd):
        mu = r.mu_sv
        return (
            1.0 / r.lam
            + 2.0 / (mu + r.mu_sd)
            - r.mu_sd / (mu + r.mu_sd) ** 2
        )
    return 1.0 / r.lam + (r.mu_sv + r.mu_vd + r.mu_sd) / (
        (r.mu_sv + r.mu_sd) * (r.mu_vd + r.mu_sd)
    )


def triangle_min_tail(r: TriangleRates, x: float) -> float:
    """Survival function of min(direct hop, two-hop relay path) at ``x``.

    Hypoexponential branch for distinct relay rates, Erlang branch for equal
    rates.  The generation rate plays no role here.
    """
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if _rates_equal(r.mu_sv, r.mu_vd):
        mu = r.mu_sv
        return (1.0 + mu * x) * math.exp(-(mu + r.mu_sd) * x)
    c = r.mu_vd - r.mu_sv
    return (
        r.mu_vd / c * math.exp(-(r.mu_sv + r.mu_sd) * x)
        - r.mu_sv / c * math.exp(-(r.mu_vd + r.mu_sd) * x)
    )


def triangle_cascade_age(lam: float, triangles) -> float:
    """Average age at the end of a chain of triangles glued at cut vertices.

    Each entry is (mu_upper_in, mu_upper_out, mu_direct) for one triangle.
    """
    triangles = list(triangles)
    if not triangles:
        raise ValueError("triangle list must be non-empty")
    if not lam > 0:
        raise ValueError("lam must be positive")
    total = 1.0 / lam
    for m1, m2, m3 in triangles:
        if not (m1 > 0 and m2 > 0 and m3 > 0):
            raise ValueError("all rates must be positive")
        total += (m1 + m2 + m3) / ((m1 + m3) * (m2 + m3))
    return total
