"""Core domain types: hybrid networks, demands, matchings, flows, congestion.

A hybrid network couples a static (packet-switched) topology with a complete
set of candidate reconfigurable links, of which only an endpoint-disjoint
matching can be active at a time.  Every bidirected link materializes as two
anti-parallel directed links, each with its own capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import (
    FlowOnUnselectedLinkError,
    InvalidNetworkError,
    NonConservedFlowError,
)

NodeId = int

ABS_TOL = 1e-9
REL_TOL = 1e-7
CONSERVATION_TOL = 1e-9


class LinkKind(Enum):
    STATIC = "S"
    RECONFIGURABLE = "R"


@dataclass(frozen=True)
class DirectedLink:
    """One direction of a bidirected link.

    ``copy`` is the stable index of the parallel static copy this direction
    belongs to (always 0 for reconfigurable links); it keeps flows addressable
    on static multigraphs.  Capacity is carried for convenience but does not
    take part in identity.
    """

    tail: NodeId
    head: NodeId
    kind: LinkKind
    capacity: float = field(compare=False)
    copy: int = 0

    def __repr__(self) -> str:
        tag = self.kind.value
        return f"{tag}{self.copy}({self.tail}->{self.head}, c={self.capacity:g})"


@dataclass(frozen=True)
class StaticLink:
    """A bidirected static link with per-direction capacities."""

    u: NodeId
    v: NodeId
    cap_uv: float
    cap_vu: float


@dataclass(frozen=True)
class ReconfLink:
    """A candidate reconfigurable link; endpoints stored with u < v."""

    u: NodeId
    v: NodeId
    cap_uv: float
    cap_vu: float


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> tuple[str, ...]:
        return tuple(i.code for i in self.issues)


def pair_key(i: NodeId, j: NodeId) -> tuple[NodeId, NodeId]:
    """Canonical unordered pair."""
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class HybridNetwork:
    """Static topology plus the complete candidate set of reconfigurable links.

    Immutable after construction; safe to share across workers.
    """

    n: int
    static_links: tuple[StaticLink, ...]
    reconf_links: tuple[ReconfLink, ...]

    def __post_init__(self) -> None:
        lookup = {}
        for link in self.reconf_links:
            lookup[(link.u, link.v)] = link
        object.__setattr__(self, "_reconf_by_pair", lookup)
        arcs = []
        for idx, link in enumerate(self.static_links):
            arcs.append(DirectedLink(link.u, link.v, LinkKind.STATIC, link.cap_uv, idx))
            arcs.append(DirectedLink(link.v, link.u, LinkKind.STATIC, link.cap_vu, idx))
        object.__setattr__(self, "_static_arcs", tuple(arcs))

    @classmethod
    def build(
        cls,
        n: int,
        static: Iterable[tuple[NodeId, NodeId, float, float]] = (),
        reconf_default: float = 1.0,
        reconf_overrides: Mapping[tuple[NodeId, NodeId], tuple[float, float]] | None = None,
    ) -> "HybridNetwork":
        """Assemble a network with the complete reconfigurable candidate set.

        ``reconf_overrides`` maps unordered pairs (i, j) with i < j to
        (cap i->j, cap j->i); every other pair gets ``reconf_default`` in both
        directions.
        """
        static_links = tuple(StaticLink(u, v, cf, cb) for u, v, cf, cb in static)
        overrides = dict(reconf_overrides or {})
        reconf = []
        for i in range(n):
            for j in range(i + 1, n):
                cf, cb = overrides.get((i, j), (reconf_default, reconf_default))
                reconf.append(ReconfLink(i, j, cf, cb))
        return cls(n=n, static_links=static_links, reconf_links=tuple(reconf))

    def static_arcs(self) -> tuple[DirectedLink, ...]:
        return self._static_arcs  # type: ignore[attr-defined]

    def reconf_capacity(self, i: NodeId, j: NodeId) -> float:
        """Capacity of the reconfigurable direction i -> j."""
        link = self._reconf_by_pair.get(pair_key(i, j))  # type: ignore[attr-defined]
        if link is None:
            raise KeyError(f"no reconfigurable candidate for pair {pair_key(i, j)}")
        return link.cap_uv if i == link.u else link.cap_vu

    def reconf_arc(self, i: NodeId, j: NodeId) -> DirectedLink:
        return DirectedLink(i, j, LinkKind.RECONFIGURABLE, self.reconf_capacity(i, j), 0)

    def all_arcs(self) -> tuple[DirectedLink, ...]:
        arcs = list(self.static_arcs())
        for link in self.reconf_links:
            arcs.append(DirectedLink(link.u, link.v, LinkKind.RECONFIGURABLE, link.cap_uv, 0))
            arcs.append(DirectedLink(link.v, link.u, LinkKind.RECONFIGURABLE, link.cap_vu, 0))
        return tuple(arcs)

    @property
    def c_max(self) -> float:
        return max((a.capacity for a in self.all_arcs()), default=0.0)

    @property
    def c_min(self) -> float:
        return min((a.capacity for a in self.all_arcs()), default=0.0)


def validate_network(net: HybridNetwork) -> ValidationResult:
    """Check every structural invariant; report all violations found."""
    issues: list[ValidationIssue] = []
    if net.n < 1:
        issues.append(ValidationIssue("EmptyNodeSet", "need at least one node"))
    for idx, link in enumerate(net.static_links):
        if link.u == link.v:
            issues.append(ValidationIssue("SelfLoop", f"static link {idx} is a self-loop at {link.u}"))
        if not (0 <= link.u < net.n and 0 <= link.v < net.n):
            issues.append(ValidationIssue("NodeOutOfRange", f"static link {idx} endpoints outside [0, {net.n})"))
        if link.cap_uv < 0 or link.cap_vu < 0:
            issues.append(ValidationIssue("NegativeCapacity", f"static link {idx} has a negative capacity"))
    seen_pairs: set[tuple[int, int]] = set()
    for link in net.reconf_links:
        key = pair_key(link.u, link.v)
        if link.u == link.v:
            issues.append(ValidationIssue("SelfLoop", f"reconfigurable candidate self-loop at {link.u}"))
            continue
        if link.u > link.v:
            issues.append(ValidationIssue("UnnormalizedPair", f"reconfigurable pair {key} stored out of order"))
        if not (0 <= link.u < net.n and 0 <= link.v < net.n):
            issues.append(ValidationIssue("NodeOutOfRange", f"reconfigurable pair {key} outside [0, {net.n})"))
            continue
        if key in seen_pairs:
            issues.append(ValidationIssue("DuplicateLink", f"reconfigurable pair {key} listed twice"))
        seen_pairs.add(key)
        if link.cap_uv < 0 or link.cap_vu < 0:
            issues.append(ValidationIssue("NegativeCapacity", f"reconfigurable pair {key} has a negative capacity"))
    expected = {(i, j) for i in range(net.n) for j in range(i + 1, net.n)}
    missing = sorted(expected - seen_pairs)
    for key in missing:
        issues.append(ValidationIssue("IncompleteReconfigurableSet", f"missing reconfigurable pair {key}"))
    return ValidationResult(tuple(issues))


def ensure_valid(net: HybridNetwork) -> None:
    result = validate_network(net)
    if not result.ok:
        raise InvalidNetworkError(result.issues)


class DemandStructure(Enum):
    MULTI = "multi"
    SINGLE_SOURCE = "single_source"
    SINGLE_DESTINATION = "single_destination"
    SINGLE_COMMODITY = "single_commodity"


@dataclass(frozen=True)
class DemandClassification:
    structure: DemandStructure
    uniform: bool


class DemandMatrix:
    """Nonnegative demand per ordered node pair; zero entries are dropped."""

    def __init__(self, entries: Mapping[tuple[NodeId, NodeId], float]):
        cleaned: dict[tuple[NodeId, NodeId], float] = {}
        for (i, j), d in entries.items():
            if i == j:
                raise ValueError(f"self-demand at node {i}")
            if d < 0:
                raise ValueError(f"negative demand for ({i}, {j})")
            if d > 0:
                cleaned[(i, j)] = float(d)
        self._entries = dict(sorted(cleaned.items()))

    def get(self, i: NodeId, j: NodeId) -> float:
        return self._entries.get((i, j), 0.0)

    @property
    def entries(self) -> dict[tuple[NodeId, NodeId], float]:
        return dict(self._entries)

    def commodities(self) -> tuple[tuple[NodeId, NodeId], ...]:
        """Ordered pairs with positive demand, in sorted order."""
        return tuple(self._entries.keys())

    def positive_pairs(self) -> tuple[tuple[NodeId, NodeId], ...]:
        """Unordered pairs {i, j} with d_ij + d_ji > 0, sorted."""
        return tuple(sorted({pair_key(i, j) for (i, j) in self._entries}))

    def pair_weight(self, i: NodeId, j: NodeId) -> float:
        return self.get(i, j) + self.get(j, i)

    def total(self) -> float:
        return math.fsum(self._entries.values())

    def max_demand(self) -> float:
        return max(self._entries.values(), default=0.0)

    def without_pairs(self, pairs: Iterable[tuple[NodeId, NodeId]]) -> "DemandMatrix":
        """Copy with both directions of the given unordered pairs zeroed."""
        drop = {pair_key(i, j) for (i, j) in pairs}
        kept = {k: v for k, v in self._entries.items() if pair_key(*k) not in drop}
        return DemandMatrix(kept)

    @property
    def is_empty(self) -> bool:
        return not self._entries

    @property
    def is_uniform(self) -> bool:
        values = list(self._entries.values())
        if not values:
            return True
        first = values[0]
        return all(math.isclose(v, first, rel_tol=REL_TOL, abs_tol=ABS_TOL) for v in values)

    @property
    def is_single_source(self) -> bool:
        sources = {i for (i, _) in self._entries}
        return len(sources) == 1

    @property
    def is_single_destination(self) -> bool:
        dests = {j for (_, j) in self._entries}
        return len(dests) == 1

    @property
    def is_single_commodity(self) -> bool:
        return len(self._entries) == 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DemandMatrix) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"DemandMatrix({self._entries})"


def classify_demands(demands: DemandMatrix) -> DemandClassification:
    """Structural classification used to route instances to exact solvers."""
    if demands.is_single_commodity:
        structure = DemandStructure.SINGLE_COMMODITY
    elif demands.is_single_source and not demands.is_empty:
        structure = DemandStructure.SINGLE_SOURCE
    elif demands.is_single_destination and not demands.is_empty:
        structure = DemandStructure.SINGLE_DESTINATION
    else:
        structure = DemandStructure.MULTI
    return DemandClassification(structure=structure, uniform=demands.is_uniform)


class Matching:
    """An endpoint-disjoint set of reconfigurable pairs (the active links)."""

    def __init__(self, pairs: Iterable[tuple[NodeId, NodeId]] = ()):
        canon = sorted(pair_key(i, j) for (i, j) in pairs)
        nodes: set[NodeId] = set()
        for i, j in canon:
            if i == j:
                raise ValueError(f"matching pair with equal endpoints: {i}")
            if i in nodes or j in nodes:
                raise ValueError(f"node reused in matching: pair ({i}, {j})")
            nodes.add(i)
            nodes.add(j)
        self._pairs = tuple(canon)
        self._nodes = frozenset(nodes)

    @property
    def pairs(self) -> tuple[tuple[NodeId, NodeId], ...]:
        return self._pairs

    @property
    def nodes(self) -> frozenset:
        return self._nodes

    def __contains__(self, pair: tuple[NodeId, NodeId]) -> bool:
        return pair_key(*pair) in set(self._pairs)

    def __len__(self) -> int:
        return len(self._pairs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Matching) and self._pairs == other._pairs

    def __hash__(self) -> int:
        return hash(self._pairs)

    def __repr__(self) -> str:
        return f"Matching({list(self._pairs)})"

    def arcs(self, net: HybridNetwork) -> tuple[DirectedLink, ...]:
        out = []
        for i, j in self._pairs:
            out.append(net.reconf_arc(i, j))
            out.append(net.reconf_arc(j, i))
        return tuple(out)


FlowPath = tuple[tuple[NodeId, NodeId], tuple[DirectedLink, ...], float]


class Flow:
    """Per-commodity flow values on directed links, with optional paths.

    ``paths`` entries are (commodity, arc sequence, amount); when present they
    recompose to the per-link values.
    """

    def __init__(
        self,
        by_commodity: Mapping[tuple[NodeId, NodeId], Mapping[DirectedLink, float]],
        paths: Iterable[FlowPath] | None = None,
    ):
        self.by_commodity = {
            k: {a: float(v) for a, v in links.items() if v != 0.0}
            for k, links in by_commodity.items()
        }
        self.paths = tuple(paths) if paths is not None else None

    @classmethod
    def empty(cls) -> "Flow":
        return cls({}, paths=())

    @classmethod
    def from_paths(cls, paths: Iterable[FlowPath]) -> "Flow":
        paths = tuple(paths)
        by_commodity: dict[tuple[NodeId, NodeId], dict[DirectedLink, float]] = {}
        for commodity, arcs, amount in paths:
            links = by_commodity.setdefault(commodity, {})
            for arc in arcs:
                links[arc] = links.get(arc, 0.0) + amount
        return cls(by_commodity, paths=paths)

    def aggregate(self) -> dict[DirectedLink, float]:
        total: dict[DirectedLink, float] = {}
        for links in self.by_commodity.values():
            for arc, value in links.items():
                total[arc] = total.get(arc, 0.0) + value
        return total

    def net_outflow(self, commodity: tuple[NodeId, NodeId], node: NodeId) -> float:
        links = self.by_commodity.get(commodity, {})
        out = math.fsum(v for a, v in links.items() if a.tail == node)
        inn = math.fsum(v for a, v in links.items() if a.head == node)
        return out - inn

    def conservation_residual(self, commodity: tuple[NodeId, NodeId]) -> float:
        """Largest |net flow| over interior nodes of the commodity."""
        i, j = commodity
        links = self.by_commodity.get(commodity, {})
        nodes = {a.tail for a in links} | {a.head for a in links}
        worst = 0.0
        for node in nodes:
            if node in (i, j):
                continue
            worst = max(worst, abs(self.net_outflow(commodity, node)))
        return worst


@dataclass(frozen=True)
class CongestionReport:
    """Maximum link load, the link achieving it, and the full load map."""

    max_load: float
    argmax_link: DirectedLink | None
    per_link_loads: dict[DirectedLink, float]

    @property
    def finite(self) -> bool:
        return math.isfinite(self.max_load)


def _load(flow_value: float, capacity: float) -> float:
    if capacity > 0:
        return flow_value / capacity
    return math.inf if flow_value > ABS_TOL else 0.0


def congestion_of(net: HybridNetwork, matching: Matching, flow: Flow) -> CongestionReport:
    """Loads induced by ``flow`` on the reconfigured network.

    Flow values may exceed capacities; a positive flow on a zero-capacity link
    yields an infinite load rather than an error so optimizers can still rank
    infeasible routings.
    """
    allowed = list(net.static_arcs()) + list(matching.arcs(net))
    allowed_set = set(allowed)
    for commodity, links in flow.by_commodity.items():
        for arc in links:
            if arc not in allowed_set:
                raise FlowOnUnselectedLinkError(
                    f"commodity {commodity} uses {arc!r} outside the reconfigured network"
                )
        residual = flow.conservation_residual(commodity)
        if residual > CONSERVATION_TOL:
            raise NonConservedFlowError(
                f"commodity {commodity} violates conservation by {residual:.3e}"
            )
    aggregate = flow.aggregate()
    loads: dict[DirectedLink, float] = {}
    max_load = 0.0
    argmax: DirectedLink | None = None
    for arc in allowed:
        load = _load(aggregate.get(arc, 0.0), arc.capacity)
        loads[arc] = load
        if load > max_load:
            max_load = load
            argmax = arc
    return CongestionReport(max_load=max_load, argmax_link=argmax, per_link_loads=loads)


def infinite_congestion() -> CongestionReport:
    """Sentinel report for instances where some demand has no route."""
    return CongestionReport(max_load=math.inf, argmax_link=None, per_link_loads={})


# ---------------------------------------------------------------------------
# Topology file format: one record per bidirected link,
#   kind tail head cap_forward cap_backward      (kind S or R)
# with '#' comment lines.  Reconfigurable pairs omitted from the file default
# to a configured capacity so the candidate set stays complete.
# ---------------------------------------------------------------------------


def write_topology(net: HybridNetwork, path) -> None:
    lines = [f"# nodes={net.n}"]
    for link in net.static_links:
        lines.append(f"S {link.u} {link.v} {link.cap_uv:.12g} {link.cap_vu:.12g}")
    for link in net.reconf_links:
        lines.append(f"R {link.u} {link.v} {link.cap_uv:.12g} {link.cap_vu:.12g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_topology(path, default_reconf_capacity: float = 1.0) -> HybridNetwork:
    static: list[tuple[int, int, float, float]] = []
    overrides: dict[tuple[int, int], tuple[float, float]] = {}
    max_node = -1
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 5 or parts[0] not in ("S", "R"):
                raise TopologyParseError(line_no, line)
            kind, u_s, v_s, cf_s, cb_s = parts
            try:
                u, v = int(u_s), int(v_s)
                cf, cb = float(cf_s), float(cb_s)
            except ValueError as exc:
                raise TopologyParseError(line_no, line) from exc
            max_node = max(max_node, u, v)
            if kind == "S":
                static.append((u, v, cf, cb))
            else:
                key = pair_key(u, v)
                overrides[key] = (cf, cb) if u < v else (cb, cf)
    n = max_node + 1
    return HybridNetwork.build(
        n, static, reconf_default=default_reconf_capacity, reconf_overrides=overrides
    )


class TopologyParseError(ValueError):
    def __init__(self, line_no: int, line: str):
        self.line_no = line_no
        super().__init__(f"malformed topology record at line {line_no}: {line!r}")
