"""Iterative solve / separate / add / re-solve loop for lazy row families."""
from __future__ import annotations

import time
from typing import Callable, Optional

from .engines import get_engine
from .model import MilpModel, MilpSolution, SolveParams

# A separator takes a solution (values by name) and returns violated rows as
# (coeffs-by-name, sense, rhs) triples.
Separator = Callable[[dict], list]


class CutLoopLimitError(RuntimeError):
    pass


class UnsoundSeparatorError(RuntimeError):
    pass


def _violated(coeffs: dict, sense: str, rhs: float, values: dict, tol: float = 1e-6) -> bool:
    lhs = sum(c * values.get(v, 0.0) for v, c in coeffs.items())
    if sense == "<=":
        return lhs > rhs + tol
    if sense == ">=":
        return lhs < rhs - tol
    return abs(lhs - rhs) > tol


def solve_with_separation(model: MilpModel, separator: Optional[Separator],
                          params: Optional[SolveParams] = None, engine=None,
                          max_rounds: int = 10_000, in_place: bool = False,
                          cut_prefix: str = "lazy") -> tuple:
    """Solve ``model`` to optimality over the rows the separator enforces.

    Returns ``(solution, cuts_added)``. ``solution.history`` holds the
    objective after every round. With ``in_place`` the cuts stay in ``model``
    (useful when the same model is re-solved later); otherwise a copy is used.
    """
    params = params or SolveParams()
    engine = engine or get_engine()
    work = model if in_place else model.copy()
    t0 = time.perf_counter()
    cuts = 0
    rounds = 0
    history = []
    while True:
        left = params.time_limit - (time.perf_counter() - t0)
        p = SolveParams(max(left, 1.0), params.mip_gap, params.threads, params.keep_files)
        sol = engine.solve(work, p)
        history.append(sol.objective)
        if not sol.has_values or separator is None:
            break
        rows = separator(sol.values)
        if not rows:
            break
        if not any(_violated(c, s, r, sol.values) for c, s, r in rows):
            raise UnsoundSeparatorError("separator returned no row the point violates")
        if sol.status != "optimal":
            sol.status = "error"
            sol.message = "time limit reached before the lazy rows were all satisfied"
            break
        if rounds >= max_rounds:
            raise CutLoopLimitError(f"cut-loop limit of {max_rounds} rounds reached")
        for coeffs, sense, rhs in rows:
            name = f"{cut_prefix}{len(work.constraints)}"
            while name in work._con_names:
                name += "_"
            work.add_constraint(coeffs, sense, rhs, name)
            cuts += 1
        rounds += 1
        if time.perf_counter() - t0 >= params.time_limit:
            sol.status = "error"
            sol.message = "time limit reached inside the cut loop"
            break
    sol.history = history
    sol.wall_time = time.perf_counter() - t0
    return sol, cuts
