"""Text dump of a built LP in CPLEX-LP style, for external cross-checks."""

from __future__ import annotations

from .builder import LpProblem
from .linprog import EQ, GE, LE

_SENSE = {LE: "<=", GE: ">=", EQ: "="}


def _var_name(problem: LpProblem, index: int) -> str:
    if index == 0:
        return "lam"
    index -= 1
    n_arcs = len(problem.arcs)
    if index < len(problem.commodities) * n_arcs:
        ci, ai = divmod(index, n_arcs)
        i, j = problem.commodities[ci]
        arc = problem.arcs[ai]
        return f"f_{i}_{j}__{arc.kind.value}{arc.copy}_{arc.tail}_{arc.head}"
    k = index - len(problem.commodities) * n_arcs
    i, j = problem.z_pairs[k]
    return f"z_{i}_{j}"


def write_lp(problem: LpProblem, path) -> None:
    lines = ["Minimize", " obj: lam", "Subject To"]
    for idx, row in enumerate(problem.lp.rows):
        terms = []
        for var, coef in sorted(row.coeffs.items()):
            terms.append(f"{coef:+.12g} {_var_name(problem, var)}")
        label = row.label.replace(":", "_").replace(">", "").replace("-", "_").replace("@", "_")
        lines.append(f" r{idx}_{label}: {' '.join(terms)} {_SENSE[row.sense]} {row.rhs:.12g}")
    lines.append("Bounds")
    for v in range(problem.lp.num_vars):
        lines.append(f" 0 <= {_var_name(problem, v)}")
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
