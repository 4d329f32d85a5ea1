"""Exact age computations via subset recursions on the augmented graph.

Averages come from the mean recursion over boundary cuts; distributional
quantities come from the matching recursion for E[exp(s * age)], evaluated
either at real s (Chernoff bounds) or on the imaginary axis (CDF points via
Gil-Pelaez inversion of the characteristic function).

All operations are pure functions of immutable inputs and are safe to call
concurrently.  Subsets are bitmasks over user-node indices; the virtual
source never appears in a stored subset (its contribution enters the
recursions as explicit base cases).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (
    NetworkTooLarge,
    OutsideConvergenceRegion,
    QuadratureNotConverged,
)
from .network import AugmentedNetwork, check_subset

DEFAULT_MAX_EXACT_NODES = 20
HARD_MAX_EXACT_NODES = 28
MAX_NODES_ENV = "AOI_MAX_EXACT_NODES"


@dataclass(frozen=True)
class MgfQuery:
    subset: int
    s: complex


@dataclass(frozen=True)
class TailQuery:
    subset: int
    d: float


class AgeTable:
    """Map from subset bitmask to exact average age.

    Backed either by a dense array indexed by mask (full tables) or by a
    plain dict (e.g. singleton tables from the cascade engine).
    """

    def __init__(self, values, network_hash: str):
        self.values = values
        self.network_hash = network_hash

    def __getitem__(self, mask: int) -> float:
        if isinstance(self.values, dict):
            return self.values[mask]
        if mask <= 0 or mask >= len(self.values):
            raise KeyError(mask)
        return float(self.values[mask])

    def __contains__(self, mask: int) -> bool:
        if isinstance(self.values, dict):
            return mask in self.values
        return 0 < mask < len(self.values)

    def masks(self):
        if isinstance(self.values, dict):
            return sorted(self.values)
        return range(1, len(self.values))


def _resolve_max_nodes(max_nodes: int | None) -> int:
    if max_nodes is None:
        env = os.environ.get(MAX_NODES_ENV)
        max_nodes = int(env) if env else DEFAULT_MAX_EXACT_NODES
    return max_nodes


def _check_size(net: AugmentedNetwork, max_nodes: int | None) -> None:
    limit = min(_resolve_max_nodes(max_nodes), HARD_MAX_EXACT_NODES)
    if net.n_user > limit:
        raise NetworkTooLarge(
            f"{net.n_user} user nodes exceeds the exact-engine limit {limit} "
            f"(override with {MAX_NODES_ENV} up to {HARD_MAX_EXACT_NODES})"
        )


def average_age_all(net: AugmentedNetwork, max_nodes: int | None = None) -> AgeTable:
    """Exact E[age] for every non-empty subset of user nodes.

    Single bottom-up pass over a dense array indexed by bitmask, grouped by
    decreasing popcount: the recursion for a subset references only strict
    supersets.  Vectorized per popcount group across masks.
    """
    _check_size(net, max_nodes)
    n = net.n_user
    src_bit = 1 << net.source_index
    size = 1 << n
    values = np.empty(size)
    values[0] = np.nan

    masks_by_pop = [[] for _ in range(n + 1)]
    for m in range(1, size):
        masks_by_pop[m.bit_count()].append(m)

    # user edges only: for theta not in A the virtual edge never crosses
    # into A, and for theta in A the value is the 1/lambda base case.
    edges = [
        (net.edge_tails[e], net.edge_heads[e], net.edge_rates[e])
        for e in range(len(net.edge_rates) - 1)
    ]

    inv_lam = 1.0 / net.lam
    for pop in range(n, 0, -1):
        group = np.array(masks_by_pop[pop], dtype=np.int64)
        if group.size == 0:
            continue
        with_src = (group & src_bit) != 0
        values[group[with_src]] = inv_lam
        rest = group[~with_src]
        if rest.size == 0:
            continue
        mu = np.zeros(rest.size)
        acc = np.zeros(rest.size)
        for u, v, r in edges:
            sel = ((rest >> v) & 1).astype(bool) & (((rest >> u) & 1) == 0)
            if not sel.any():
                continue
            mu[sel] += r
            acc[sel] += r * values[rest[sel] | (1 << u)]
        values[rest] = (1.0 + acc) / mu

    return AgeTable(values, net.fingerprint)


def average_age(
    net: AugmentedNetwork, a: int, max_nodes: int | None = None
) -> float:
    """Exact E[age] of subset ``a``, memoized over reachable supersets."""
    check_subset(net, a)
    _check_size(net, max_nodes)
    src_bit = 1 << net.source_index
    edges = [
        (net.edge_tails[e], net.edge_heads[e], net.edge_rates[e])
        for e in range(len(net.edge_rates) - 1)
    ]
    memo: dict[int, float] = {}

    def rec(mask: int) -> float:
        if mask & src_bit:
            return 1.0 / net.lam
        got = memo.get(mask)
        if got is not None:
            return got
        mu = 0.0
        acc = 0.0
        for u, v, r in edges:
            if mask >> v & 1 and not mask >> u & 1:
                mu += r
                acc += r * rec(mask | (1 << u))
        val = (1.0 + acc) / mu
        memo[mask] = val
        return val

    return rec(a)


def mgf_convergence_bound(net: AugmentedNetwork, a: int) -> float:
    """Largest real s below which the MGF recursion stays well posed.

    Conservative bound: min of lambda and of the boundary rate sums of every
    subset reachable from ``a`` through the recursion.
    """
    check_subset(net, a)
    src_bit = 1 << net.source_index
    edges = [
        (net.edge_tails[e], net.edge_heads[e], net.edge_rates[e])
        for e in range(len(net.edge_rates) - 1)
    ]
    bound = net.lam
    seen: set[int] = set()
    stack = [a]
    while stack:
        mask = stack.pop()
        if mask & src_bit or mask in seen:
            continue
        seen.add(mask)
        mu = 0.0
        for u, v, r in edges:
            if mask >> v & 1 and not mask >> u & 1:
                mu += r
                sup = mask | (1 << u)
                if sup not in seen:
                    stack.append(sup)
        bound = min(bound, mu)
    return bound


def mgf(
    net: AugmentedNetwork, q: MgfQuery, max_nodes: int | None = None
) -> complex:
    """E[exp(s * age)] of the queried subset via the boundary-cut recursion."""
    check_subset(net, q.subset)
    _check_size(net, max_nodes)
    s = complex(q.s)
    bound = mgf_convergence_bound(net, q.subset)
    if s.real >= bound:
        raise OutsideConvergenceRegion(
            f"Re(s)={s.real} is not below the convergence bound {bound}"
        )
    return _mgf_value(net, q.subset, s)


def _mgf_value(net: AugmentedNetwork, a: int, s: complex) -> complex:
    src_bit = 1 << net.source_index
    edges = [
        (net.edge_tails[e], net.edge_heads[e], net.edge_rates[e])
        for e in range(len(net.edge_rates) - 1)
    ]
    memo: dict[int, complex] = {}

    def rec(mask: int) -> complex:
        if mask & src_bit:
            return net.lam / (net.lam - s)
        got = memo.get(mask)
        if got is not None:
            return got
        mu = 0.0
        acc = 0.0 + 0.0j
        for u, v, r in edges:
            if mask >> v & 1 and not mask >> u & 1:
                mu += r
                acc += r * rec(mask | (1 << u))
        val = acc / (mu - s)
        memo[mask] = val
        return val

    return rec(a)


def cdf_via_inversion(
    net: AugmentedNetwork,
    q: TailQuery,
    tol: float = 1e-6,
    max_nodes: int | None = None,
) -> float:
    """Pr[age <= d] by Gil-Pelaez inversion of the characteristic function.

    Pr[age <= d] = 1/2 - (1/pi) * int_0^inf Im(phi(w) e^{-iwd}) / w dw.
    The integrand has a finite limit at w = 0; the oscillating tail is
    integrated with trigonometric-weight quadrature up to a cutoff where
    |phi| has decayed below 1e-10 relative to w.
    """
    check_subset(net, q.subset)
    _check_size(net, max_nodes)
    d = q.d
    if d < 0:
        raise ValueError(f"threshold d must be non-negative, got {d}")
    if d == 0.0:
        # age has a density (it includes an Exp(lambda) summand)
        return 0.0

    phi = lambda w: _mgf_value(net, q.subset, 1j * w)
    mean = average_age(net, q.subset, max_nodes=max_nodes)

    # truncation: |phi(w)| decays at least like 1/w^2 for every subset
    omega_max = 16.0 * (net.total_rate + 1.0 / d)
    while abs(phi(omega_max)) / omega_max > 1e-10 and omega_max < 1e12:
        omega_max *= 2.0

    def integrand(w: float) -> float:
        if w < 1e-12:
            return mean - d  # limit of Im(phi(w) e^{-iwd}) / w as w -> 0
        return (phi(w) * np.exp(-1j * w * d)).imag / w

    # low part: at most half an oscillation of e^{-iwd}
    omega_0 = min(omega_max, math.pi / d)
    total, est = quad(integrand, 0.0, omega_0, epsabs=tol * 1e-3, limit=200)
    if omega_0 < omega_max:
        # Im(phi e^{-iwd})/w = Im(phi)/w cos(wd) - Re(phi)/w sin(wd)
        i_cos, e1 = quad(
            lambda w: phi(w).imag / w,
            omega_0,
            omega_max,
            weight="cos",
            wvar=d,
            epsabs=tol * 1e-3,
            limit=200,
        )
        i_sin, e2 = quad(
            lambda w: phi(w).real / w,
            omega_0,
            omega_max,
            weight="sin",
            wvar=d,
            epsabs=tol * 1e-3,
            limit=200,
        )
        total += i_cos - i_sin
        est += e1 + e2
    if est / math.pi > tol:
        raise QuadratureNotConverged("CDF inversion did not converge", est / math.pi)
    value = 0.5 - total / math.pi
    return min(1.0, max(0.0, value))


def chernoff_bound(
    net: AugmentedNetwork, q: TailQuery, max_nodes: int | None = None
) -> float:
    """Upper bound on Pr[age >= d]: min over s of e^{-sd} E[e^{s age}].

    log E[e^{s age}] - s d is convex on the convergence interval, so a coarse
    log-spaced grid followed by golden-section refinement finds the global
    optimum.  Clamped to 1 (the bound is vacuous for d at or below the mean).
    """
    check_subset(net, q.subset)
    _check_size(net, max_nodes)
    d = q.d
    if d < 0:
        raise ValueError(f"threshold d must be non-negative, got {d}")
    s_max = mgf_convergence_bound(net, q.subset) * (1.0 - 1e-6)

    def log_obj(s: float) -> float:
        return math.log(_mgf_value(net, q.subset, s).real) - s * d

    grid = np.geomspace(s_max * 1e-8, s_max, 64)
    vals = [log_obj(s) for s in grid]
    k = int(np.argmin(vals))
    lo = grid[k - 1] if k > 0 else 0.0
    hi = grid[k + 1] if k < len(grid) - 1 else s_max

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = log_obj(x1), log_obj(x2)
    while hi - lo > 1e-9 * s_max:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = log_obj(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = log_obj(x2)
    best = min(min(vals), f1, f2)
    return min(1.0, math.exp(best))
