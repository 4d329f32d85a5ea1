"""Network parsing, validation and augmentation.

The user describes a weighted directed graph with a designated source and a
Poisson generation rate ``lambda``.  Validation checks the single-source
requirements (unique in-degree-zero node, full reachability from it, no self
loops, positive rates), merges parallel edges by summing their rates, and then
augments the graph with a virtual node feeding the source through an edge of
rate ``lambda``.  Every engine operates on the resulting
:class:`AugmentedNetwork`, which is immutable after construction.

Node indexing: user nodes get dense indices in order of appearance; the
virtual node always gets the highest index, so bitmasks over user nodes form
a contiguous prefix.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

from .errors import (
    EmptySubset,
    MalformedNetwork,
    MultipleSources,
    NonPositiveRate,
    SelfLoop,
    SourceHasIncomingEdge,
    SubsetContainsVirtualSource,
    UnreachableNode,
)

VIRTUAL_SOURCE_LABEL = "__virtual_source__"


@dataclass(frozen=True)
class EdgeSpec:
    """A directed edge with an exponential service rate."""

    frm: str
    to: str
    rate: float


@dataclass(frozen=True)
class NetworkSpec:
    """User-facing network description, prior to validation."""

    nodes: tuple[str, ...]
    edges: tuple[EdgeSpec, ...]
    source: str
    lam: float


@dataclass(frozen=True)
class Boundary:
    """The edges entering a node subset from outside, and their rate sum."""

    edges: tuple[EdgeSpec, ...]
    rate_sum: float


@dataclass(frozen=True)
class AugmentedNetwork:
    """Validated network plus the virtual source and its rate-lambda edge.

    Immutable; safe for concurrent read-only use by all engines.
    """

    base: NetworkSpec
    node_names: tuple[str, ...]  # user nodes, index order
    source_index: int
    lam: float
    # augmented edges as parallel tuples; the virtual edge is last
    edge_tails: tuple[int, ...]
    edge_heads: tuple[int, ...]
    edge_rates: tuple[float, ...]
    total_rate: float
    fingerprint: str
    index_of: dict[str, int] = field(repr=False)
    in_edges: tuple[tuple[int, ...], ...] = field(repr=False)
    out_edges: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n_user(self) -> int:
        return len(self.node_names)

    @property
    def n_aug(self) -> int:
        return self.n_user + 1

    @property
    def theta_prime_index(self) -> int:
        return self.n_user

    @property
    def full_user_mask(self) -> int:
        return (1 << self.n_user) - 1

    def label(self, index: int) -> str:
        if index == self.theta_prime_index:
            return VIRTUAL_SOURCE_LABEL
        return self.node_names[index]

    def edge_key(self, e: int) -> tuple[str, str]:
        """Stable identity of edge ``e``, used to key random streams."""
        return (self.label(self.edge_tails[e]), self.label(self.edge_heads[e]))

    def subset_mask(self, labels) -> int:
        """Bitmask over user-node indices for the given labels."""
        mask = 0
        for name in labels:
            if name not in self.index_of:
                raise KeyError(f"unknown node label {name!r}")
            mask |= 1 << self.index_of[name]
        return mask

    def subset_labels(self, mask: int) -> tuple[str, ...]:
        return tuple(
            self.node_names[i] for i in range(self.n_user) if mask >> i & 1
        )


def parse_network(text: str) -> NetworkSpec:
    """Parse the JSON network format into a :class:`NetworkSpec`.

    Structural checks only; model validation is done by :func:`validate_ssn`.
    The ``nodes`` list may be omitted, in which case nodes are inferred from
    the edges and the source, in order of appearance.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedNetwork(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedNetwork("top-level value must be a JSON object")
    for key in ("lambda", "source", "edges"):
        if key not in doc:
            raise MalformedNetwork(f"missing required field {key!r}")
    lam = doc["lambda"]
    if not isinstance(lam, (int, float)) or isinstance(lam, bool):
        raise MalformedNetwork("'lambda' must be a number")
    source = doc["source"]
    if not isinstance(source, str):
        raise MalformedNetwork("'source' must be a string label")
    if not isinstance(doc["edges"], list):
        raise MalformedNetwork("'edges' must be a list")

    edges = []
    for i, item in enumerate(doc["edges"]):
        if not isinstance(item, dict):
            raise MalformedNetwork(f"edge #{i} must be an object")
        for key in ("from", "to", "rate"):
            if key not in item:
                raise MalformedNetwork(f"edge #{i} missing field {key!r}")
        frm, to, rate = item["from"], item["to"], item["rate"]
        if not isinstance(frm, str) or not isinstance(to, str):
            raise MalformedNetwork(f"edge #{i} endpoints must be string labels")
        if not isinstance(rate, (int, float)) or isinstance(rate, bool):
            raise MalformedNetwork(f"edge #{i} rate must be a number")
        if not rate > 0:
            raise NonPositiveRate(
                f"edge ({frm!r} -> {to!r}) has non-positive rate {rate}"
            )
        edges.append(EdgeSpec(frm, to, float(rate)))

    if "nodes" in doc:
        nodes = doc["nodes"]
        if not isinstance(nodes, list) or not all(
            isinstance(x, str) for x in nodes
        ):
            raise MalformedNetwork("'nodes' must be a list of string labels")
        if len(set(nodes)) != len(nodes):
            raise MalformedNetwork("duplicate node labels")
        node_order = list(nodes)
    else:
        node_order = []
        seen = set()
        for name in [source] + [x for e in edges for x in (e.frm, e.to)]:
            if name not in seen:
                seen.add(name)
                node_order.append(name)

    return NetworkSpec(tuple(node_order), tuple(edges), source, float(lam))


def validate_ssn(spec: NetworkSpec, merge_warning: bool = True) -> AugmentedNetwork:
    """Validate the single-source requirements and build the augmented graph.

    Parallel edges are merged by summing their rates (the minimum of
    independent exponentials of rates mu1 and mu2 is exponential of rate
    mu1 + mu2, so the network law is unchanged); a warning is emitted.
    Idempotent: re-validating the ``base`` of the result is a no-op.
    """
    if not spec.lam > 0:
        raise NonPositiveRate(f"lambda must be positive, got {spec.lam}")
    if spec.source not in spec.nodes:
        raise MalformedNetwork(f"source {spec.source!r} not among nodes")
    if len(set(spec.nodes)) != len(spec.nodes):
        raise MalformedNetwork("duplicate node labels")
    if VIRTUAL_SOURCE_LABEL in spec.nodes:
        raise MalformedNetwork(f"label {VIRTUAL_SOURCE_LABEL!r} is reserved")

    node_set = set(spec.nodes)
    merged: dict[tuple[str, str], float] = {}
    order: list[tuple[str, str]] = []
    for e in spec.edges:
        if e.frm not in node_set or e.to not in node_set:
            raise MalformedNetwork(
                f"edge ({e.frm!r} -> {e.to!r}) references an undeclared node"
            )
        if e.frm == e.to:
            raise SelfLoop(f"self loop at node {e.frm!r}")
        if not e.rate > 0:
            raise NonPositiveRate(
                f"edge ({e.frm!r} -> {e.to!r}) has non-positive rate {e.rate}"
            )
        key = (e.frm, e.to)
        if key in merged:
            merged[key] += e.rate
        else:
            merged[key] = e.rate
            order.append(key)
    if len(order) != len(spec.edges):
        if merge_warning:
            warnings.warn(
                "parallel edges merged by summing their rates "
                "(equivalent in law)",
                UserWarning,
                stacklevel=2,
            )

    in_deg = {name: 0 for name in spec.nodes}
    for _, to in order:
        in_deg[to] += 1
    roots = [name for name in spec.nodes if in_deg[name] == 0]
    if len(roots) >= 2:
        raise MultipleSources(
            "multiple in-degree-zero nodes: " + ", ".join(repr(r) for r in roots)
        )
    if in_deg[spec.source] > 0:
        raise SourceHasIncomingEdge(
            f"declared source {spec.source!r} has incoming edges"
        )

    # reachability from the source over merged edges
    adj: dict[str, list[str]] = {name: [] for name in spec.nodes}
    for frm, to in order:
        adj[frm].append(to)
    reached = {spec.source}
    stack = [spec.source]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in reached:
                reached.add(v)
                stack.append(v)
    missing = [name for name in spec.nodes if name not in reached]
    if missing:
        raise UnreachableNode(
            "nodes unreachable from the source: "
            + ", ".join(repr(m) for m in missing)
        )

    index_of = {name: i for i, name in enumerate(spec.nodes)}
    n = len(spec.nodes)
    tails, heads, rates = [], [], []
    for frm, to in order:
        tails.append(index_of[frm])
        heads.append(index_of[to])
        rates.append(merged[(frm, to)])
    # virtual edge last: theta' -> theta with rate lambda
    tails.append(n)
    heads.append(index_of[spec.source])
    rates.append(spec.lam)

    in_edges = [[] for _ in range(n + 1)]
    out_edges = [[] for _ in range(n + 1)]
    for e, (u, v) in enumerate(zip(tails, heads)):
        out_edges[u].append(e)
        in_edges[v].append(e)

    canonical = {
        "lambda": spec.lam,
        "source": spec.source,
        "nodes": list(spec.nodes),
        "edges": sorted(
            [frm, to, merged[(frm, to)]] for frm, to in order
        ),
    }
    fingerprint = hashlib.sha256(
        json.dumps(canonical, sort_keys=True).encode()
    ).hexdigest()[:16]

    merged_spec = NetworkSpec(
        spec.nodes,
        tuple(EdgeSpec(frm, to, merged[(frm, to)]) for frm, to in order),
        spec.source,
        spec.lam,
    )
    return AugmentedNetwork(
        base=merged_spec,
        node_names=spec.nodes,
        source_index=index_of[spec.source],
        lam=spec.lam,
        edge_tails=tuple(tails),
        edge_heads=tuple(heads),
        edge_rates=tuple(rates),
        total_rate=float(sum(rates)),
        fingerprint=fingerprint,
        index_of=index_of,
        in_edges=tuple(tuple(x) for x in in_edges),
        out_edges=tuple(tuple(x) for x in out_edges),
    )


def check_subset(net: AugmentedNetwork, a: int) -> None:
    """Reject empty subsets and subsets containing the virtual source."""
    if a == 0:
        raise EmptySubset("subset must be non-empty")
    if a >> net.theta_prime_index & 1:
        raise SubsetContainsVirtualSource(
            "subset must not contain the virtual source"
        )
    if a >> net.n_aug:
        raise KeyError(f"subset mask {a:#x} has bits beyond the node range")


def boundary(net: AugmentedNetwork, a: int) -> Boundary:
    """Edges of the augmented graph entering subset ``a`` from outside."""
    check_subset(net, a)
    edges = []
    rate_sum = 0.0
    for e in range(len(net.edge_rates)):
        u, v = net.edge_tails[e], net.edge_heads[e]
        if a >> v & 1 and not a >> u & 1:
            edges.append(EdgeSpec(net.label(u), net.label(v), net.edge_rates[e]))
            rate_sum += net.edge_rates[e]
    return Boundary(tuple(edges), rate_sum)
