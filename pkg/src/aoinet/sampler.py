"""Monte Carlo estimation of the stationary age law via shortest paths.

Each replicate draws one exponential service time per augmented edge and
computes single-source shortest-path distances from the virtual source; the
distance to a node is one sample of that node's stationary age, and the
minimum over a subset samples the subset age.

Random streams are counter-based: the variate for (master_seed, replicate i,
edge e) is the i-th draw of a Philox stream keyed by the master seed and a
stable hash of the edge's endpoint labels.  This makes batches bit-identical
regardless of worker count or iteration order, and makes edge-addition
experiments couple replicate-by-replicate (old edges keep their streams).

Limitation: the sampled tuples reproduce only the marginal law of each fixed
subset's age.  The true joint process has atoms where two connected nodes
share an age for a positive fraction of time; the sampled per-replicate
vectors have no such ties, so cross-node correlations read off a batch are
not meaningful.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptySubset, SubsetContainsVirtualSource
from .network import AugmentedNetwork, check_subset

_MASK64 = (1 << 64) - 1


def _edge_stream_key(edge_key: tuple[str, str]) -> int:
    raw = "\x1f".join(edge_key).encode()
    return int.from_bytes(hashlib.sha256(raw).digest()[:8], "little")


@dataclass(frozen=True)
class RngPolicy:
    """Counter-based stream derivation from a single 64-bit master seed."""

    master_seed: int

    def edge_bit_generator(
        self, edge_key: tuple[str, str], skip: int = 0
    ) -> np.random.Philox:
        """Philox generator for one edge, optionally skipping ``skip`` draws.

        ``skip`` must be a multiple of 4 (Philox counter granularity).
        """
        if skip % 4:
            raise ValueError("stream offset must be a multiple of 4")
        bg = np.random.Philox(
            key=[self.master_seed & _MASK64, _edge_stream_key(edge_key)]
        )
        if skip:
            bg.advance(skip // 4)
        return bg

    def edge_exponentials(
        self, edge_key: tuple[str, str], rate: float, start: int, count: int
    ) -> np.ndarray:
        """Draws ``start`` .. ``start+count`` of the edge's Exp(rate) stream."""
        gen = np.random.Generator(self.edge_bit_generator(edge_key, skip=start))
        u = gen.random(count)
        return -np.log1p(-u) / rate  # 1-u in (0,1], no infinities


@dataclass(frozen=True)
class SampleBatch:
    """N i.i.d. sampled age vectors, one column per user node."""

    ages: np.ndarray  # shape (n, |V|)
    n: int
    rng: RngPolicy
    network_hash: str


@dataclass(frozen=True)
class Functional:
    """Replicate-wise transform applied before averaging."""

    kind: str
    param: float | None = None

    @classmethod
    def mean(cls) -> "Functional":
        return cls("mean")

    @classmethod
    def moment(cls, k: int) -> "Functional":
        if k < 1:
            raise ValueError("moment order must be >= 1")
        return cls("moment", float(k))

    @classmethod
    def indicator_ge(cls, d: float) -> "Functional":
        return cls("indicator_ge", float(d))

    @classmethod
    def exp_tilt(cls, s: float) -> "Functional":
        return cls("exp_tilt", float(s))

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "mean":
            return x
        if self.kind == "moment":
            return x ** self.param
        if self.kind == "indicator_ge":
            return (x >= self.param).astype(float)
        if self.kind == "exp_tilt":
            return np.exp(self.param * x)
        raise ValueError(f"unknown functional kind {self.kind!r}")


def _chunk_ranges(n: int, workers: int) -> list[tuple[int, int]]:
    # boundaries on multiples of 4 so per-edge streams can be advanced
    per = -(-n // max(workers, 1))
    per = (per + 3) // 4 * 4
    return [(s, min(s + per, n)) for s in range(0, n, per)]


def _relax_distances(net: AugmentedNetwork, service: np.ndarray) -> np.ndarray:
    """Shortest-path distances from the virtual source, all replicates at once.

    ``service`` has shape (E, n).  Bellman-Ford style rounds over the fixed
    edge list, vectorized across replicates; with nonnegative weights this
    yields exactly the Dijkstra distances.
    """
    n = service.shape[1]
    dist = np.full((net.n_aug, n), np.inf)
    dist[net.theta_prime_index] = 0.0
    edges = list(zip(net.edge_tails, net.edge_heads))
    for _ in range(net.n_aug - 1):
        changed = False
        for e, (u, v) in enumerate(edges):
            cand = dist[u] + service[e]
            better = cand < dist[v]
            if better.any():
                dist[v][better] = cand[better]
                changed = True
        if not changed:
            break
    return dist


def dijkstra_single(
    net: AugmentedNetwork,
    service: np.ndarray,
    target: int | None = None,
) -> np.ndarray:
    """Binary-heap Dijkstra for one replicate's weights (shape (E,)).

    With ``target`` set, stops as soon as the target is settled; unsettled
    nodes keep distance inf.  Ties break by node index for determinism.
    """
    import heapq

    dist = np.full(net.n_aug, np.inf)
    dist[net.theta_prime_index] = 0.0
    done = [False] * net.n_aug
    heap = [(0.0, net.theta_prime_index)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for e in net.out_edges[u]:
            v = net.edge_heads[e]
            nd = d + service[e]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def sample_ages(
    net: AugmentedNetwork, n: int, rng: RngPolicy, workers: int = 1
) -> SampleBatch:
    """Draw ``n`` replicates of the per-node age vector.

    O(n (|E| + |V|) log |V|) overall; the result is bit-identical for any
    ``workers`` value (replicate ranges are fixed stream offsets).
    """
    if n < 1:
        raise ValueError("replicate count must be >= 1")
    ages = np.empty((n, net.n_user))
    ranges = _chunk_ranges(n, workers)

    def fill(span: tuple[int, int]) -> None:
        s, e = span
        ages[s:e] = _sample_chunk(net, rng, s, e - s).T

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, ranges))
    else:
        for span in ranges:
            fill(span)
    return SampleBatch(ages=ages, n=n, rng=rng, network_hash=net.fingerprint)


def _sample_chunk(
    net: AugmentedNetwork, rng: RngPolicy, start: int, count: int
) -> np.ndarray:
    service = np.empty((len(net.edge_rates), count))
    for e, rate in enumerate(net.edge_rates):
        service[e] = rng.edge_exponentials(net.edge_key(e), rate, start, count)
    return _relax_distances(net, service)[: net.n_user]


def sample_target_ages(
    net: AugmentedNetwork, n: int, rng: RngPolicy, target: str
) -> np.ndarray:
    """Ages of a single node, with Dijkstra stopped once it is settled."""
    if n < 1:
        raise ValueError("replicate count must be >= 1")
    t = net.index_of[target]
    out = np.empty(n)
    service = np.empty((len(net.edge_rates), n))
    for e, rate in enumerate(net.edge_rates):
        service[e] = rng.edge_exponentials(net.edge_key(e), rate, 0, n)
    for i in range(n):
        out[i] = dijkstra_single(net, service[:, i], target=t)[t]
    return out


def _subset_ages(batch: SampleBatch, a: int) -> np.ndarray:
    if a == 0:
        raise EmptySubset("subset must be non-empty")
    if a >> batch.ages.shape[1]:
        raise SubsetContainsVirtualSource(
            "subset must not contain the virtual source"
        )
    cols = [i for i in range(batch.ages.shape[1]) if a >> i & 1]
    return batch.ages[:, cols].min(axis=1)


def estimate(
    batch: SampleBatch, a: int, f: Functional
) -> tuple[float, float]:
    """Sample mean and standard error of ``f`` applied to the subset age."""
    vals = f.apply(_subset_ages(batch, a))
    est = float(vals.mean())
    if batch.n > 1:
        stderr = float(vals.std(ddof=1) / math.sqrt(batch.n))
    else:
        stderr = float("inf")
    return est, stderr


def empirical_cdf(batch: SampleBatch, a: int, d: float) -> float:
    """Fraction of replicates with subset age <= d."""
    return float((_subset_ages(batch, a) <= d).mean())


def fold_estimate(
    net: AugmentedNetwork,
    n: int,
    rng: RngPolicy,
    a: int,
    f: Functional,
    chunk_size: int = 1 << 18,
) -> tuple[float, float]:
    """Streaming (constant-memory) version of sample + estimate.

    Identical streams as :func:`sample_ages`; returns the same estimate and
    standard error without materializing the n x |V| matrix.
    """
    check_subset(net, a)
    if n < 1:
        raise ValueError("replicate count must be >= 1")
    chunk_size = max(4, chunk_size // 4 * 4)
    total = 0.0
    total_sq = 0.0
    cols = [i for i in range(net.n_user) if a >> i & 1]
    for start in range(0, n, chunk_size):
        count = min(chunk_size, n - start)
        dist = _sample_chunk(net, rng, start, count)
        vals = f.apply(dist[cols].min(axis=0))
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
    est = total / n
    if n > 1:
        var = max(0.0, (total_sq - n * est * est) / (n - 1))
        stderr = math.sqrt(var / n)
    else:
        stderr = float("inf")
    return est, stderr
