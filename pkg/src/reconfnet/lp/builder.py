"""Compact edge-based LP construction for matching/routing co-optimization.

Variable layout (one block per problem):
  index 0                      lambda, the congestion objective
  1 .. C*A                     per-commodity per-arc flow values
  1 + C*A .. +P                one matching indicator per unordered pair

Both directions of a candidate pair share a single indicator variable, which
enforces their simultaneous activation structurally.  Only pairs whose own
demand is positive (in a direction of positive reconfigurable capacity) get
an indicator; every other indicator is identically zero and is dropped.

Demands are normalized to a unit scale before solving and the result is
scaled back, which keeps the simplex well conditioned for workloads with
heavy-tailed flow sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import NumericalFailureError
from ..model import DemandMatrix, DirectedLink, HybridNetwork, NodeId, pair_key
from .linprog import EQ, GE, LE, LinearProgram, LpStatus, SimplexResult, solve_simplex

RESIDUAL_TOL = 1e-7
DEGREE_TOL = 1e-9


@dataclass
class LpProblem:
    """A built LP plus the index maps needed to decode its solution."""

    lp: LinearProgram
    arcs: tuple[DirectedLink, ...]
    commodities: tuple[tuple[NodeId, NodeId], ...]
    z_pairs: tuple[tuple[NodeId, NodeId], ...]
    demands: DemandMatrix
    demand_scale: float
    net: HybridNetwork | None = None
    # row bookkeeping for the crash basis: (commodity index, node) -> row,
    # and one capacity row per arc index
    node_rows: dict = field(default_factory=dict)
    cap_rows: dict = field(default_factory=dict)

    @property
    def num_flow_vars(self) -> int:
        return len(self.commodities) * len(self.arcs)

    def flow_var(self, commodity_index: int, arc_index: int) -> int:
        return 1 + commodity_index * len(self.arcs) + arc_index

    def z_var(self, pair_index: int) -> int:
        return 1 + self.num_flow_vars + pair_index

    @property
    def trivially_optimal(self) -> bool:
        return not self.commodities


@dataclass
class LpSolution:
    """Fractional optimum: objective, indicators, and per-commodity flows."""

    status: LpStatus
    objective: float
    z: dict[tuple[NodeId, NodeId], float]
    flows: dict[tuple[NodeId, NodeId], dict[DirectedLink, float]]
    problem: LpProblem
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _positive_arcs(arcs: Sequence[DirectedLink]) -> tuple[DirectedLink, ...]:
    return tuple(a for a in arcs if a.capacity > 0)


def build_mcrn_lp(net: HybridNetwork, demands: DemandMatrix) -> LpProblem:
    """LP relaxation of the joint matching/routing problem (segregated).

    Emits, per commodity, interior-node conservation and a source row
    requiring net outflow of at least (1 - z) times the demand; per static
    arc a capacity row normalized by the capacity; per demand direction an
    indicator-capacity row; and per node a degree row capping the incident
    indicators at one.
    """
    arcs = _positive_arcs(net.static_arcs())
    commodities = demands.commodities()
    scale = demands.max_demand() or 1.0

    z_pairs = []
    for i, j in demands.positive_pairs():
        usable = True
        for (a, b) in ((i, j), (j, i)):
            if demands.get(a, b) > 0 and net.reconf_capacity(a, b) <= 0:
                usable = False  # offloading would route demand onto a dead link
        if usable:
            z_pairs.append((i, j))
    z_pairs = tuple(z_pairs)

    problem = LpProblem(
        lp=LinearProgram(num_vars=1 + len(commodities) * len(arcs) + len(z_pairs)),
        arcs=arcs,
        commodities=commodities,
        z_pairs=z_pairs,
        demands=demands,
        demand_scale=scale,
        net=net,
    )
    if problem.trivially_optimal:
        return problem

    lp = problem.lp
    lp.objective = {0: 1.0}
    z_index = {p: k for k, p in enumerate(z_pairs)}

    out_arcs: dict[NodeId, list[int]] = {}
    in_arcs: dict[NodeId, list[int]] = {}
    for ai, arc in enumerate(arcs):
        out_arcs.setdefault(arc.tail, []).append(ai)
        in_arcs.setdefault(arc.head, []).append(ai)

    for ci, (i, j) in enumerate(commodities):
        d = demands.get(i, j) / scale
        for v in range(net.n):
            if v == j:
                continue  # sink row is implied by the others
            coeffs: dict[int, float] = {}
            for ai in out_arcs.get(v, ()):
                coeffs[problem.flow_var(ci, ai)] = 1.0
            for ai in in_arcs.get(v, ()):
                coeffs[problem.flow_var(ci, ai)] = -1.0
            if v == i:
                pair = pair_key(i, j)
                if pair in z_index:
                    coeffs[problem.z_var(z_index[pair])] = d
                problem.node_rows[(ci, v)] = len(lp.rows)
                lp.add_row(coeffs, GE, d, f"dem:{i}->{j}")
            elif coeffs:
                problem.node_rows[(ci, v)] = len(lp.rows)
                lp.add_row(coeffs, EQ, 0.0, f"con:{i}->{j}@{v}")

    for ai, arc in enumerate(arcs):
        coeffs = {problem.flow_var(ci, ai): 1.0 / arc.capacity for ci in range(len(commodities))}
        coeffs[0] = -1.0
        problem.cap_rows[ai] = len(lp.rows)
        lp.add_row(coeffs, LE, 0.0, f"cap:{ai}")

    for (i, j), k in z_index.items():
        for (a, b) in ((i, j), (j, i)):
            d = demands.get(a, b)
            if d <= 0:
                continue
            cap = net.reconf_capacity(a, b)
            lp.add_row(
                {problem.z_var(k): d / scale / cap, 0: -1.0},
                LE,
                0.0,
                f"zcap:{a}->{b}",
            )

    incident: dict[NodeId, list[int]] = {}
    for (i, j), k in z_index.items():
        incident.setdefault(i, []).append(k)
        incident.setdefault(j, []).append(k)
    for node in sorted(incident):
        lp.add_row(
            {problem.z_var(k): 1.0 for k in incident[node]},
            LE,
            1.0,
            f"deg:{node}",
        )

    for pair, k in z_index.items():
        lp.add_row({problem.z_var(k): 1.0}, LE, 1.0, f"zub:{pair}")

    return problem


def build_mcmf_lp(
    net_or_arcs: HybridNetwork | Sequence[DirectedLink], demands: DemandMatrix
) -> LpProblem:
    """Plain min-congestion multicommodity-flow LP (no matching indicators).

    Accepts either a network (static arcs are used) or an explicit arc set,
    so reconfigured networks can be evaluated by passing their arcs.
    """
    source_net: HybridNetwork | None = None
    if isinstance(net_or_arcs, HybridNetwork):
        source_net = net_or_arcs
        arcs = _positive_arcs(net_or_arcs.static_arcs())
        n_nodes = net_or_arcs.n
    else:
        arcs = _positive_arcs(tuple(net_or_arcs))
        n_nodes = max((max(a.tail, a.head) for a in arcs), default=-1) + 1
        for i, j in demands.commodities():
            n_nodes = max(n_nodes, i + 1, j + 1)

    commodities = demands.commodities()
    scale = demands.max_demand() or 1.0
    problem = LpProblem(
        lp=LinearProgram(num_vars=1 + len(commodities) * len(arcs)),
        arcs=arcs,
        commodities=commodities,
        z_pairs=(),
        demands=demands,
        demand_scale=scale,
        net=source_net,
    )
    if problem.trivially_optimal:
        return problem

    lp = problem.lp
    lp.objective = {0: 1.0}
    out_arcs: dict[NodeId, list[int]] = {}
    in_arcs: dict[NodeId, list[int]] = {}
    for ai, arc in enumerate(arcs):
        out_arcs.setdefault(arc.tail, []).append(ai)
        in_arcs.setdefault(arc.head, []).append(ai)

    for ci, (i, j) in enumerate(commodities):
        d = demands.get(i, j) / scale
        for v in range(n_nodes):
            if v == j:
                continue
            coeffs = {}
            for ai in out_arcs.get(v, ()):
                coeffs[problem.flow_var(ci, ai)] = 1.0
            for ai in in_arcs.get(v, ()):
                coeffs[problem.flow_var(ci, ai)] = -1.0
            if v == i:
                problem.node_rows[(ci, v)] = len(lp.rows)
                lp.add_row(coeffs, GE, d, f"dem:{i}->{j}")
            elif coeffs:
                problem.node_rows[(ci, v)] = len(lp.rows)
                lp.add_row(coeffs, EQ, 0.0, f"con:{i}->{j}@{v}")

    for ai, arc in enumerate(arcs):
        coeffs = {problem.flow_var(ci, ai): 1.0 / arc.capacity for ci in range(len(commodities))}
        coeffs[0] = -1.0
        problem.cap_rows[ai] = len(lp.rows)
        lp.add_row(coeffs, LE, 0.0, f"cap:{ai}")

    return problem


def crash_basis(problem: LpProblem) -> dict[int, int] | None:
    """Feasible warm-start basis when the arc graph is connected.

    Each commodity starts on its spanning-tree path (the tree's node-arc
    incidence block is invertible and tree routing is nonnegative, so the
    conservation rows come out feasible) and the congestion variable starts
    basic in the most-loaded capacity row; every other row keeps its slack.
    Skips phase one entirely.  Returns None when no single tree spans all
    nodes, and the solver falls back to the two-phase start.
    """
    arcs = problem.arcs
    if not arcs or not problem.commodities or not problem.node_rows:
        return None
    n_nodes = 1 + max(max(a.tail, a.head) for a in arcs)
    for i, j in problem.commodities:
        n_nodes = max(n_nodes, i + 1, j + 1)

    # BFS spanning tree over the undirected support; remember both directions
    forward: dict[tuple[int, int], int] = {}
    for ai, arc in enumerate(arcs):
        forward.setdefault((arc.tail, arc.head), ai)
    neighbors: dict[int, list[int]] = {}
    for tail, head in forward:
        if (head, tail) in forward:  # need both directions to orient freely
            neighbors.setdefault(tail, []).append(head)
    parent: dict[int, int] = {0: -1}
    order = [0]
    cursor = 0
    while cursor < len(order):
        node = order[cursor]
        cursor += 1
        for other in sorted(neighbors.get(node, ())):
            if other not in parent:
                parent[other] = node
                order.append(other)
    if len(parent) < n_nodes:
        return None

    def tree_path(src: int, dst: int) -> list[tuple[int, int]]:
        up_src, up_dst = [src], [dst]
        seen = {src: 0}
        node = src
        while parent[node] != -1:
            node = parent[node]
            up_src.append(node)
            seen[node] = len(up_src) - 1
        node = dst
        while node not in seen:
            node = parent[node]
            up_dst.append(node)
        meet = node
        ascent = up_src[: seen[meet] + 1]
        descent = up_dst[: up_dst.index(meet) + 1][::-1] if meet in up_dst else [meet]
        nodes = ascent + descent[1:]
        return list(zip(nodes[:-1], nodes[1:]))

    tree_edges = sorted((min(v, p), max(v, p)) for v, p in parent.items() if p != -1)
    hint: dict[int, int] = {}
    loads = {ai: 0.0 for ai in problem.cap_rows}
    for ci, (i, j) in enumerate(problem.commodities):
        d = problem.demands.get(i, j) / problem.demand_scale
        path_arcs: dict[tuple[int, int], int] = {}
        for u, v in tree_path(i, j):
            ai = forward[(u, v)]
            path_arcs[(min(u, v), max(u, v))] = ai
            loads[ai] += d / arcs[ai].capacity
        columns = []
        for edge in tree_edges:
            ai = path_arcs.get(edge, forward[edge])
            columns.append(problem.flow_var(ci, ai))
        rows = sorted(r for (c, _v), r in problem.node_rows.items() if c == ci)
        if len(rows) != len(columns):
            return None  # isolated structure the tree logic cannot cover
        for row, column in zip(rows, columns):
            hint[row] = column

    busiest = max(loads, key=lambda ai: (loads[ai], -ai), default=None)
    if busiest is not None and loads[busiest] > 0:
        hint[problem.cap_rows[busiest]] = 0  # the congestion variable
    return hint


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve a built problem and decode indicators and per-commodity flows.

    The decoded solution is checked for primal feasibility (residuals within
    1e-7 on the normalized problem) and for the per-node indicator degree
    bound; violations raise rather than return silently wrong data.
    """
    if problem.trivially_optimal:
        return LpSolution(LpStatus.OPTIMAL, 0.0, {}, {}, problem)

    result = solve_simplex(problem.lp, basis_hint=crash_basis(problem))
    if result.status is LpStatus.UNBOUNDED:
        raise NumericalFailureError("congestion LP reported unbounded")
    if result.status is LpStatus.INFEASIBLE:
        return LpSolution(LpStatus.INFEASIBLE, math.inf, {}, {}, problem, result.iterations)

    _check_residuals(problem, result)

    scale = problem.demand_scale
    z = {}
    for k, pair in enumerate(problem.z_pairs):
        z[pair] = float(min(max(result.x[problem.z_var(k)], 0.0), 1.0))
    flows: dict[tuple[NodeId, NodeId], dict[DirectedLink, float]] = {}
    for ci, commodity in enumerate(problem.commodities):
        links: dict[DirectedLink, float] = {}
        for ai, arc in enumerate(problem.arcs):
            value = float(result.x[problem.flow_var(ci, ai)]) * scale
            if value > 1e-11 * scale:
                links[arc] = value
        flows[commodity] = links

    degree: dict[NodeId, float] = {}
    for (i, j), value in z.items():
        degree[i] = degree.get(i, 0.0) + value
        degree[j] = degree.get(j, 0.0) + value
    for node, total in degree.items():
        if total > 1.0 + DEGREE_TOL:
            raise NumericalFailureError(f"indicator degree bound violated at node {node}: {total}")

    return LpSolution(
        LpStatus.OPTIMAL, result.objective * scale, z, flows, problem, result.iterations
    )


def _check_residuals(problem: LpProblem, result: SimplexResult) -> None:
    x = result.x
    worst = 0.0
    for row in problem.lp.rows:
        value = math.fsum(coef * x[var] for var, coef in row.coeffs.items())
        if row.sense == LE:
            violation = value - row.rhs
        elif row.sense == GE:
            violation = row.rhs - value
        else:
            violation = abs(value - row.rhs)
        worst = max(worst, violation)
    magnitude = max(1.0, max(abs(r.rhs) for r in problem.lp.rows))
    if worst > RESIDUAL_TOL * magnitude:
        raise NumericalFailureError(f"primal residual {worst:.3e} exceeds tolerance")
