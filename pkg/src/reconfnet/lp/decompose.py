"""Flow decomposition into simple paths plus discarded cycles."""

from __future__ import annotations

import math

from ..errors import NonConservedFlowError
from ..model import DirectedLink, Flow, FlowPath, NodeId

_EPS = 1e-11
_CRUMB = 1e-7  # relative: leftovers below this are solver noise, not flow


def solver_noise(demand_scale: float) -> float:
    """Absolute crumb tolerance for flows decoded from a solved LP."""
    return 1e-6 * max(1.0, demand_scale)


def decompose_commodity(
    commodity: tuple[NodeId, NodeId],
    links: dict[DirectedLink, float],
    noise: float = 0.0,
) -> tuple[list[FlowPath], list[tuple[tuple[DirectedLink, ...], float]]]:
    """Split one commodity's link flows into source-sink paths and cycles.

    Cycles are cancelled first (the LP leaves conservation unconstrained at
    the endpoints, so circulations may pass through them); the remainder is
    then a directed acyclic flow whose maximal chains all run source to sink,
    and peeling bottlenecks off those chains yields at most one simple path
    per zeroed arc.  Tiny leftovers up to ``noise`` (the LP solver's absolute
    feasibility slack, which rides on the whole problem's demand scale) are
    dropped as numerical crumbs; a substantial imbalance still raises.
    """
    src, dst = commodity
    magnitude = max(links.values(), default=0.0)
    eps = _EPS * max(1.0, magnitude)
    crumb = max(_CRUMB * max(1.0, magnitude), noise)
    residual = {arc: v for arc, v in links.items() if v > eps}
    paths: list[FlowPath] = []
    cycles: list[tuple[tuple[DirectedLink, ...], float]] = []

    def out_arcs(node: NodeId) -> list[DirectedLink]:
        found = [a for a in residual if a.tail == node]
        found.sort(key=lambda a: (a.head, a.kind.value, a.copy))
        return found

    while True:
        cycle = _find_cycle(residual, out_arcs)
        if cycle is None:
            break
        amount = min(residual[a] for a in cycle)
        _subtract(residual, cycle, amount, eps)
        cycles.append((cycle, amount))

    # Acyclic now: walk src -> dst, peel the bottleneck, repeat.
    while True:
        starts = out_arcs(src)
        if not starts:
            break
        walk: list[DirectedLink] = [starts[0]]
        node = starts[0].head
        dead_end = False
        while node != dst:
            nxt = out_arcs(node)
            if not nxt:
                dead_end = True
                break
            walk.append(nxt[0])
            node = nxt[0].head
        if dead_end:
            _drop_binding_crumb(residual, walk, crumb, commodity)
            continue
        amount = min(residual[a] for a in walk)
        _subtract(residual, walk, amount, eps)
        if amount > crumb:
            paths.append((commodity, tuple(walk), amount))

    for arc, value in sorted(residual.items(), key=lambda kv: kv[1]):
        if value > crumb:
            raise NonConservedFlowError(
                f"flow for commodity {commodity} leaves residual {value:.3e} on {arc!r}"
            )
    return paths, cycles


def _find_cycle(residual, out_arcs):
    """First directed cycle in deterministic DFS order, or None."""
    color: dict[NodeId, int] = {}  # 1 on stack, 2 finished
    for start in sorted({a.tail for a in residual}):
        if color.get(start):
            continue
        stack: list[tuple[NodeId, list[DirectedLink], int]] = [(start, out_arcs(start), 0)]
        entry_arcs: list[DirectedLink] = []
        color[start] = 1
        while stack:
            node, arcs, index = stack[-1]
            if index < len(arcs):
                stack[-1] = (node, arcs, index + 1)
                arc = arcs[index]
                head = arc.head
                state = color.get(head, 0)
                if state == 0:
                    color[head] = 1
                    entry_arcs.append(arc)
                    stack.append((head, out_arcs(head), 0))
                elif state == 1:
                    cycle = [arc]
                    for previous in reversed(entry_arcs):
                        if cycle[-1].tail == head:
                            break
                        cycle.append(previous)
                    cycle.reverse()
                    return tuple(cycle)
            else:
                color[node] = 2
                stack.pop()
                if entry_arcs and stack:
                    entry_arcs.pop()
    return None


def _drop_binding_crumb(residual, walk, crumb, commodity) -> None:
    victim = min(walk, key=lambda a: residual[a])
    if residual[victim] > crumb:
        raise NonConservedFlowError(
            f"flow for commodity {commodity} dead-ends with residual "
            f"{residual[victim]:.3e}"
        )
    del residual[victim]


def _subtract(residual, arcs, amount: float, eps: float) -> None:
    for arc in arcs:
        left = residual[arc] - amount
        if left <= eps:
            del residual[arc]
        else:
            residual[arc] = left


def decompose_paths(flow: Flow) -> Flow:
    """Path decomposition of a conserved flow; cycles are dropped.

    The returned flow recomposes exactly from its paths, so dropping cycles
    never increases any link load.
    """
    all_paths: list[FlowPath] = []
    for commodity in sorted(flow.by_commodity):
        links = flow.by_commodity[commodity]
        paths, _cycles = decompose_commodity(commodity, links)
        all_paths.extend(paths)
    return Flow.from_paths(all_paths)


def scale_paths_to(paths: list[FlowPath], target: float, slack: float = 0.0) -> list[FlowPath]:
    """Adjust path amounts to sum to exactly ``target``.

    Over-delivery (the LP demand row is one-sided) scales every amount down,
    which keeps all loads monotone non-increasing.  A deficit can only stem
    from dropped numerical crumbs; it must stay within ``slack`` and is
    repaid on the first path so the perturbation stays at noise level.
    """
    if target <= 0:
        return []
    total = math.fsum(amount for (_, _, amount) in paths)
    if total >= target:
        if total == target:
            return list(paths)
        factor = target / total
        return [(c, arcs, amount * factor) for (c, arcs, amount) in paths]
    deficit = target - total
    if deficit > max(slack, 1e-9 * max(1.0, target)) or not paths:
        raise NonConservedFlowError(
            f"decomposed paths deliver {total}, below the target {target}"
        )
    first_commodity, first_arcs, first_amount = paths[0]
    return [(first_commodity, first_arcs, first_amount + deficit)] + list(paths[1:])