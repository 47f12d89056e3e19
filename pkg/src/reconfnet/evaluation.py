"""Congestion evaluation of a fixed matching under the four routing models,
the exact single-commodity uniform-capacity solver, and the exhaustive
toy-scale optimizer used as the ground-truth oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    InstanceTooLargeError,
    NonUniformCapacitiesError,
    NotSingleCommodityError,
)
from .lp import build_mcmf_lp, decompose_commodity, scale_paths_to, solve_lp, solver_noise
from .lp.linprog import EQ, LE, LinearProgram, LpStatus, solve_simplex
from .maxflow import max_flow_with_matching
from .model import (
    CongestionReport,
    DemandMatrix,
    DirectedLink,
    Flow,
    FlowPath,
    HybridNetwork,
    Matching,
    NodeId,
    congestion_of,
    infinite_congestion,
    pair_key,
)
from .paths import all_simple_paths, k_shortest_paths


class RoutingModel(Enum):
    """Splittable/unsplittable crossed with segregated/non-segregated."""

    SS = "ss"
    US = "us"
    SN = "sn"
    UN = "un"

    @property
    def splittable(self) -> bool:
        return self in (RoutingModel.SS, RoutingModel.SN)

    @property
    def segregated(self) -> bool:
        return self in (RoutingModel.SS, RoutingModel.US)


@dataclass(frozen=True)
class EvalSpec:
    """How to score a matching: routing model plus path restrictions.

    ``path_limit=None`` evaluates the exact LP (splittable) or rounds over
    the full fractional decomposition (unsplittable); ``path_limit=k``
    restricts each commodity to its k shortest allowed paths by hop count.
    ``trials``/``seed`` only matter for randomized unsplittable rounding.
    """

    routing: RoutingModel
    path_limit: int | None = None
    trials: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.path_limit is not None and self.path_limit < 1:
            raise ValueError("path_limit must be at least 1 when finite")


def _offload_paths(
    net: HybridNetwork, demands: DemandMatrix, matching: Matching
) -> tuple[list[FlowPath], DemandMatrix]:
    """Matched demands ride their own link; the rest become residual."""
    paths: list[FlowPath] = []
    for i, j in demands.commodities():
        if pair_key(i, j) in matching:
            paths.append(((i, j), (net.reconf_arc(i, j),), demands.get(i, j)))
    residual = demands.without_pairs(matching.pairs)
    return paths, residual


def _allowed_arcs(
    net: HybridNetwork, matching: Matching, segregated: bool
) -> tuple[DirectedLink, ...]:
    if segregated:
        return tuple(a for a in net.static_arcs() if a.capacity > 0)
    arcs = [a for a in net.static_arcs() if a.capacity > 0]
    arcs.extend(a for a in matching.arcs(net) if a.capacity > 0)
    return tuple(arcs)


def _restricted_path_lp(
    per_commodity: dict[tuple[NodeId, NodeId], list[tuple[DirectedLink, ...]]],
    demands: DemandMatrix,
) -> dict[tuple[NodeId, NodeId], list[FlowPath]] | None:
    """Min-congestion split over fixed path menus; None when infeasible."""
    commodities = sorted(per_commodity)
    offsets: dict[tuple[NodeId, NodeId], int] = {}
    total = 1
    for commodity in commodities:
        offsets[commodity] = total
        total += len(per_commodity[commodity])
    scale = demands.max_demand() or 1.0

    lp = LinearProgram(num_vars=total)
    lp.objective = {0: 1.0}
    arc_rows: dict[DirectedLink, dict[int, float]] = {}
    for commodity in commodities:
        menu = per_commodity[commodity]
        if not menu:
            return None
        base = offsets[commodity]
        lp.add_row(
            {base + idx: 1.0 for idx in range(len(menu))},
            EQ,
            demands.get(*commodity) / scale,
            f"dem:{commodity}",
        )
        for idx, path in enumerate(menu):
            for arc in path:
                arc_rows.setdefault(arc, {})[base + idx] = 1.0
    for arc, coeffs in sorted(
        arc_rows.items(), key=lambda kv: (kv[0].tail, kv[0].head, kv[0].kind.value, kv[0].copy)
    ):
        if arc.capacity <= 0:
            return None  # menus are built over positive-capacity arcs
        row = {var: 1.0 / arc.capacity for var in coeffs}
        row[0] = -1.0
        lp.add_row(row, LE, 0.0, "cap")

    result = solve_simplex(lp)
    if result.status is not LpStatus.OPTIMAL:
        return None
    out: dict[tuple[NodeId, NodeId], list[FlowPath]] = {}
    noise = solver_noise(scale)
    for commodity in commodities:
        base = offsets[commodity]
        menu = per_commodity[commodity]
        paths = [
            (commodity, menu[idx], float(result.x[base + idx]) * scale)
            for idx in range(len(menu))
            if result.x[base + idx] * scale > 1e-11 * scale
        ]
        out[commodity] = scale_paths_to(paths, demands.get(*commodity), slack=noise)
    return out


def _route_splittable_exact(
    arcs: tuple[DirectedLink, ...], residual: DemandMatrix
) -> list[FlowPath] | None:
    solution = solve_lp(build_mcmf_lp(arcs, residual))
    if not solution.optimal:
        return None
    paths: list[FlowPath] = []
    noise = solver_noise(solution.problem.demand_scale)
    for commodity in residual.commodities():
        commodity_paths, _cycles = decompose_commodity(
            commodity, solution.flows.get(commodity, {}), noise=noise
        )
        paths.extend(
            scale_paths_to(commodity_paths, residual.get(*commodity), slack=noise)
        )
    return paths


def _best_rounding(
    menus: dict[tuple[NodeId, NodeId], list[FlowPath]],
    demands: DemandMatrix,
    net: HybridNetwork,
    matching: Matching,
    fixed: list[FlowPath],
    trials: int,
    seed: int,
) -> tuple[Flow, CongestionReport]:
    rng = np.random.default_rng(seed)
    ordered = sorted(menus)
    best: tuple[Flow, CongestionReport] | None = None
    for _ in range(max(trials, 1)):
        sampled = list(fixed)
        for commodity in ordered:
            paths = menus[commodity]
            weights = np.array([amount for (_, _, amount) in paths])
            probs = weights / weights.sum()
            index = int(rng.choice(len(paths), p=probs))
            sampled.append((commodity, paths[index][1], demands.get(*commodity)))
        flow = Flow.from_paths(sampled)
        report = congestion_of(net, matching, flow)
        if best is None or report.max_load < best[1].max_load:
            best = (flow, report)
    assert best is not None
    return best


def eval_matching(
    net: HybridNetwork,
    demands: DemandMatrix,
    matching: Matching,
    spec: EvalSpec,
) -> CongestionReport:
    """Congestion of serving ``demands`` on the reconfigured network.

    Segregated models force matched demands onto their own reconfigurable
    link and route the rest over the static network; non-segregated models
    let every commodity use active reconfigurable links as shortcuts.
    Returns the infinite sentinel when some commodity has no allowed route.
    """
    flow = route_matching(net, demands, matching, spec)
    if flow is None:
        return infinite_congestion()
    return congestion_of(net, matching, flow)


def route_matching(
    net: HybridNetwork,
    demands: DemandMatrix,
    matching: Matching,
    spec: EvalSpec,
) -> Flow | None:
    """The flow realizing eval_matching, or None when no routing exists."""
    if spec.routing.segregated:
        fixed, residual = _offload_paths(net, demands, matching)
    else:
        fixed, residual = [], demands
    arcs = _allowed_arcs(net, matching, spec.routing.segregated)

    if residual.is_empty:
        return Flow.from_paths(fixed)

    if spec.routing.splittable:
        if spec.path_limit is None:
            routed = _route_splittable_exact(arcs, residual)
            if routed is None:
                return None
            return Flow.from_paths(fixed + routed)
        menus = {
            commodity: k_shortest_paths(arcs, commodity[0], commodity[1], spec.path_limit)
            for commodity in residual.commodities()
        }
        split = _restricted_path_lp(menus, residual)
        if split is None:
            return None
        routed = [p for commodity in sorted(split) for p in split[commodity]]
        return Flow.from_paths(fixed + routed)

    # unsplittable
    if spec.path_limit == 1:
        sampled: list[FlowPath] = list(fixed)
        for commodity in residual.commodities():
            menu = k_shortest_paths(arcs, commodity[0], commodity[1], 1)
            if not menu:
                return None
            sampled.append((commodity, menu[0], residual.get(*commodity)))
        return Flow.from_paths(sampled)

    if spec.path_limit is None:
        routed = _route_splittable_exact(arcs, residual)
        if routed is None:
            return None
        menus: dict[tuple[NodeId, NodeId], list[FlowPath]] = {}
        for commodity, arcs_seq, amount in routed:
            menus.setdefault(commodity, []).append((commodity, arcs_seq, amount))
    else:
        shortest = {
            commodity: k_shortest_paths(arcs, commodity[0], commodity[1], spec.path_limit)
            for commodity in residual.commodities()
        }
        menus = _restricted_path_lp(shortest, residual)
        if menus is None:
            return None
        menus = {c: [p for p in paths if p[2] > 0] for c, paths in menus.items()}
        for commodity, paths in menus.items():
            if not paths:
                return None

    trials = spec.trials if spec.trials is not None else _default_trials(net)
    flow, _report = _best_rounding(
        menus, residual, net, matching, fixed, trials, spec.seed
    )
    return flow


def _default_trials(net: HybridNetwork) -> int:
    m = max(len(net.static_links), 2)
    return int(math.ceil(math.log2(m))) + 3


# ---------------------------------------------------------------------------
# Exact solver: single commodity, uniform capacities (non-segregated).
# ---------------------------------------------------------------------------


def solve_single_commodity_uniform(
    net: HybridNetwork, demands: DemandMatrix
) -> tuple[Matching, CongestionReport]:
    """Matching maximizing the s-t max-flow of the reconfigured network.

    With uniform capacities the best achievable congestion for a single
    commodity equals demand / (capacity * max-flow-units); the matching
    search runs as one integral max-flow over an auxiliary port graph whose
    optimum provably equals the optimum over matchings.
    """
    if demands.is_empty:
        return Matching(), congestion_of(net, Matching(), Flow.empty())
    if not demands.is_single_commodity:
        raise NotSingleCommodityError("expected exactly one commodity")
    capacity = _uniform_capacity(net)
    ((s, t),) = demands.commodities()
    d = demands.get(s, t)

    units, matching = max_flow_with_matching(net, s, t)
    expected = d / (capacity * units) if units > 0 else math.inf

    report = eval_matching(net, demands, matching, EvalSpec(routing=RoutingModel.SN))
    if math.isfinite(expected) and not math.isclose(
        report.max_load, expected, rel_tol=1e-7, abs_tol=1e-9
    ):
        raise AssertionError(
            f"max-flow search predicts {expected}, exact evaluation gives {report.max_load}"
        )
    return matching, report


def _uniform_capacity(net: HybridNetwork) -> float:
    capacities = {a.capacity for a in net.all_arcs()}
    if len(capacities) != 1:
        raise NonUniformCapacitiesError(f"capacities are not uniform: {sorted(capacities)}")
    value = capacities.pop()
    if value <= 0:
        raise NonUniformCapacitiesError("uniform capacity must be positive")
    return value


# ---------------------------------------------------------------------------
# Exhaustive optimizer (the oracle for toy instances).
# ---------------------------------------------------------------------------

_PATH_ASSIGNMENT_BUDGET = 1_000_000


def brute_force_opt(
    net: HybridNetwork,
    demands: DemandMatrix,
    spec: EvalSpec,
    node_limit: int = 8,
) -> tuple[Matching, CongestionReport]:
    """True optimum by enumerating every relevant matching.

    Segregated models only need matchings over demand-positive pairs (other
    links cannot carry any flow); non-segregated models enumerate matchings
    over all candidate pairs.  Unsplittable models additionally enumerate
    path assignments exhaustively, bounded by a path-count budget.
    """
    if net.n > node_limit:
        raise InstanceTooLargeError(f"{net.n} nodes exceeds the oracle limit {node_limit}")
    if spec.routing.segregated:
        base_pairs = list(demands.positive_pairs())
    else:
        base_pairs = [(l.u, l.v) for l in net.reconf_links]

    best: tuple[Matching, CongestionReport] | None = None
    for matching in _enumerate_matchings(base_pairs):
        report = _exact_matching_cost(net, demands, matching, spec)
        if best is None or report.max_load < best[1].max_load - 1e-12:
            best = (matching, report)
    assert best is not None  # the empty matching is always enumerated
    return best


def _enumerate_matchings(pairs: list[tuple[NodeId, NodeId]]):
    pairs = sorted(pairs)

    def extend(index: int, chosen: list, used: set):
        if index == len(pairs):
            yield Matching(chosen)
            return
        yield from extend(index + 1, chosen, used)
        i, j = pairs[index]
        if i not in used and j not in used:
            chosen.append((i, j))
            used.update((i, j))
            yield from extend(index + 1, chosen, used)
            chosen.pop()
            used.difference_update((i, j))

    yield from extend(0, [], set())


def _exact_matching_cost(
    net: HybridNetwork,
    demands: DemandMatrix,
    matching: Matching,
    spec: EvalSpec,
) -> CongestionReport:
    # The oracle always prices matchings exactly: unrestricted LP for
    # splittable routing, exhaustive simple-path assignment otherwise.
    if spec.routing.splittable:
        return eval_matching(net, demands, matching, EvalSpec(routing=spec.routing))

    if spec.routing.segregated:
        fixed, residual = _offload_paths(net, demands, matching)
    else:
        fixed, residual = [], demands
    arcs = _allowed_arcs(net, matching, spec.routing.segregated)

    menus: list[tuple[tuple[NodeId, NodeId], list[tuple[DirectedLink, ...]]]] = []
    budget = _PATH_ASSIGNMENT_BUDGET
    count = 1
    for commodity in residual.commodities():
        options = all_simple_paths(arcs, commodity[0], commodity[1], budget)
        if not options:
            return infinite_congestion()
        count *= len(options)
        if count > budget:
            raise InstanceTooLargeError("path-assignment space exceeds the oracle budget")
        menus.append((commodity, options))

    fixed_flow = Flow.from_paths(fixed)
    base_loads: dict[DirectedLink, float] = {}
    for arc, value in fixed_flow.aggregate().items():
        base_loads[arc] = base_loads.get(arc, 0.0) + value

    best_assignment: list[tuple[DirectedLink, ...]] | None = None
    best_load = math.inf
    for assignment in itertools.product(*(options for (_c, options) in menus)):
        loads = dict(base_loads)
        for (commodity, _options), path in zip(menus, assignment):
            d = residual.get(*commodity)
            for arc in path:
                loads[arc] = loads.get(arc, 0.0) + d
        worst = 0.0
        for arc, value in loads.items():
            if arc.capacity > 0:
                worst = max(worst, value / arc.capacity)
            elif value > 1e-9:
                worst = math.inf
                break
        if worst < best_load - 1e-12:
            best_load = worst
            best_assignment = list(assignment)
    if best_assignment is None:
        paths = list(fixed)
    else:
        paths = list(fixed) + [
            (commodity, path, residual.get(*commodity))
            for (commodity, _options), path in zip(menus, best_assignment)
        ]
    flow = Flow.from_paths(paths)
    return congestion_of(net, matching, flow)
