"""Independent oracles for the test suite.

Deliberately built on different foundations than the package under test:
congestion optima come from a path-enumeration LP solved by scipy's HiGHS
(different formulation, different solver), exact rational LP values come
from vertex enumeration over Fractions, and matchings come from exhaustive
enumeration.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from reconfnet.model import DemandMatrix, DirectedLink, HybridNetwork, Matching, pair_key
from reconfnet.paths import all_simple_paths


def path_lp_congestion(arcs, demands: DemandMatrix, path_cap: int = 20000) -> float:
    """Exact splittable min-congestion over explicit simple paths (HiGHS).

    Returns math.inf when some commodity has no path.
    """
    arcs = tuple(a for a in arcs if a.capacity > 0)
    menus = []
    for (i, j) in demands.commodities():
        options = all_simple_paths(arcs, i, j, path_cap)
        if not options:
            return math.inf
        menus.append(((i, j), options))
    if not menus:
        return 0.0
    num_vars = 1 + sum(len(options) for _, options in menus)
    c = np.zeros(num_vars)
    c[0] = 1.0
    rows_eq, rhs_eq, rows_ub, rhs_ub = [], [], [], []
    arc_to_vars: dict[DirectedLink, list[int]] = {}
    base = 1
    for (i, j), options in menus:
        row = sp.dok_matrix((1, num_vars))
        for idx, path in enumerate(options):
            row[0, base + idx] = 1.0
            for arc in path:
                arc_to_vars.setdefault(arc, []).append(base + idx)
        rows_eq.append(row.tocsr())
        rhs_eq.append(demands.get(i, j))
        base += len(options)
    for arc in sorted(arc_to_vars, key=lambda a: (a.tail, a.head, a.kind.value, a.copy)):
        row = sp.dok_matrix((1, num_vars))
        for var in arc_to_vars[arc]:
            row[0, var] = 1.0 / arc.capacity
        row[0, 0] = -1.0
        rows_ub.append(row.tocsr())
        rhs_ub.append(0.0)
    res = linprog(
        c,
        A_ub=sp.vstack(rows_ub) if rows_ub else None,
        b_ub=rhs_ub or None,
        A_eq=sp.vstack(rows_eq),
        b_eq=rhs_eq,
        bounds=[(0, None)] * num_vars,
        method="highs",
    )
    if res.status == 2:
        return math.inf
    assert res.status == 0, f"oracle LP failed with status {res.status}"
    return float(res.fun)


def segregated_matching_cost(net: HybridNetwork, demands: DemandMatrix, matching: Matching) -> float:
    """Exact splittable-segregated cost of one matching, via the path oracle."""
    worst = 0.0
    for i, j in demands.commodities():
        if pair_key(i, j) in matching:
            cap = net.reconf_capacity(i, j)
            d = demands.get(i, j)
            worst = max(worst, d / cap if cap > 0 else math.inf)
    residual = demands.without_pairs(matching.pairs)
    static = path_lp_congestion(net.static_arcs(), residual)
    return max(worst, static)


def enumerate_matchings(pairs):
    pairs = sorted(pairs)

    def extend(index, chosen, used):
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


def exhaustive_ss_opt(net: HybridNetwork, demands: DemandMatrix) -> tuple[Matching, float]:
    """Ground-truth splittable-segregated optimum, fully independent of the
    package's LP engine."""
    best_matching, best = Matching(), math.inf
    for matching in enumerate_matchings(demands.positive_pairs()):
        cost = segregated_matching_cost(net, demands, matching)
        if cost < best - 1e-12:
            best_matching, best = matching, cost
    return best_matching, best


def exhaustive_max_weight(pairs_with_weights) -> float:
    """Best total matching weight by enumeration (math.fsum for stability)."""
    pairs = [p for p, _ in pairs_with_weights]
    weight = dict(pairs_with_weights)
    best = 0.0
    for matching in enumerate_matchings(pairs):
        total = math.fsum(weight[p] for p in matching.pairs)
        if total > best:
            best = total
    return best


def rational_vertex_lp(num_vars, rows, objective_var=0):
    """Exact LP minimum by basic-solution enumeration over Fractions.

    ``rows`` are (coeffs dict, sense, rhs) with all variables >= 0; intended
    for tiny instances only (the basis count is combinatorial).
    """
    senses = [sense for _, sense, _ in rows]
    A = [dict(coeffs) for coeffs, _, _ in rows]
    b = [Fraction(rhs).limit_denominator(10**9) for _, _, rhs in rows]
    col = num_vars
    for r, sense in enumerate(senses):
        if sense == "<=":
            A[r][col] = Fraction(1)
            col += 1
        elif sense == ">=":
            A[r][col] = Fraction(-1)
            col += 1
    ncols = col
    m = len(A)
    best = None
    for basis in itertools.combinations(range(ncols), m):
        mat = [[Fraction(A[r].get(c, 0)) for c in basis] + [b[r]] for r in range(m)]
        x_basis = _gauss_solve(mat)
        if x_basis is None or any(v < 0 for v in x_basis):
            continue
        assignment = {c: x_basis[i] for i, c in enumerate(basis)}
        value = assignment.get(objective_var, Fraction(0))
        if best is None or value < best:
            best = value
    return best


def _gauss_solve(mat):
    m = len(mat)
    for i in range(m):
        pivot = next((r for r in range(i, m) if mat[r][i] != 0), None)
        if pivot is None:
            return None
        mat[i], mat[pivot] = mat[pivot], mat[i]
        inv = Fraction(1) / mat[i][i]
        mat[i] = [v * inv for v in mat[i]]
        for r in range(m):
            if r != i and mat[r][i] != 0:
                factor = mat[r][i]
                mat[r] = [v - factor * w for v, w in zip(mat[r], mat[i])]
    return [mat[i][m] for i in range(m)]
