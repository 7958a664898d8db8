"""Exact evaluation of the worst-case value of an observation decision by
column-and-constraint generation.

The master is an LP over the adversary's first move ``xi_bar``, one
uncertainty copy per pooled recourse policy, and an epigraph variable; its
value over-estimates the true value (min convention) because only pooled
policies are available to the decision maker. The subproblem prices the best
response to the master's ``xi_bar`` through a dualised inner maximisation.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np

from .backend.engines import get_engine
from .backend.loop import solve_with_separation
from .backend.model import BINARY, MilpModel, SolveParams
from .core import DdidProblem, WorstCaseCertificate
from .recourse import (add_recourse_block, block_point, known_cuts, make_block_separator,
                       remember_cuts, row_coeffs)

TOL = 1e-6


class CcgNumericalError(RuntimeError):
    pass


class DataError(ValueError):
    pass


@dataclass
class CcgState:
    policy_pool: list = field(default_factory=list)
    ub: float = math.inf
    lb: float = -math.inf
    iterations: int = 0
    certificate: Optional[WorstCaseCertificate] = None
    converged: bool = False
    wall_time: float = 0.0
    history: list = field(default_factory=list)


def _key(y) -> tuple:
    return tuple(int(round(v)) for v in y)


def build_ccg_master(problem: DdidProblem, w: Sequence[int], pool: Sequence[Sequence[int]]) -> MilpModel:
    """LP: max tau s.t. xibar in Xi, xi(y) in Xi pinned to xibar where w = 1,
    tau <= xi(y)'(Cw + Py) for every pooled y."""
    if not pool:
        raise ValueError("policy pool must be non-empty")
    w = np.asarray(w, dtype=int)
    xi = problem.xi_set
    n = xi.dim
    m = MilpModel("ccg_master")
    m.add_var("tau", lo=-math.inf)
    blocks = [("xb", None)] + [(f"x{k}_", y) for k, y in enumerate(pool)]
    for pre, _ in blocks:
        for i in range(n):
            m.add_var(f"{pre}{i}", lo=-math.inf)
        for l in range(xi.n_rows):
            coeffs = {f"{pre}{i}": xi.A[l, i] for i in range(n) if xi.A[l, i] != 0.0}
            m.add_constraint(coeffs, "<=", xi.b[l], f"{pre}xi{l}")
    for k, y in enumerate(pool):
        pre = f"x{k}_"
        for i in np.flatnonzero(w):
            m.add_constraint({f"{pre}{i}": 1.0, f"xb{i}": -1.0}, "=", 0.0, f"pin{k}_{i}")
        d = problem.cost_vector(w, y)
        coeffs = {f"{pre}{i}": -d[i] for i in range(n) if d[i] != 0.0}
        coeffs["tau"] = 1.0
        m.add_constraint(coeffs, "<=", 0.0, f"epi{k}")
    m.set_objective({"tau": 1.0}, "max")
    return m


def _recourse_model(problem: DdidProblem, name: str):
    m = MilpModel(name)
    names = add_recourse_block(m, problem.recourse, "r", BINARY,
                               extra_rows=list(known_cuts(problem)))
    return m, names


def _separator(problem: DdidProblem, names):
    return make_block_separator(problem.recourse, [names],
                                on_rows=lambda rows: remember_cuts(problem, rows))


def seed_policy(problem: DdidProblem, params: Optional[SolveParams] = None, engine=None) -> tuple:
    """A feasible recourse policy with the fewest active ``y`` (zero when possible)."""
    if "seed" in problem._cache:
        return problem._cache["seed"]
    m, names = _recourse_model(problem, "seed")
    n_main = problem.recourse.n_main
    m.set_objective({names[j]: 1.0 for j in range(n_main)}, "min")
    sol, _ = solve_with_separation(m, _separator(problem, names), params, engine)
    if sol.status != "optimal":
        raise DataError(f"recourse set appears empty (status {sol.status})")
    y = _key(block_point(sol.values, names)[:n_main])
    problem._cache["seed"] = y
    return y


def solve_recourse_subproblem(problem: DdidProblem, w: Sequence[int], xi_bar: Sequence[float],
                              params: Optional[SolveParams] = None, engine=None) -> tuple:
    """``min_{y in Y} max_{xi in Xi(w, xi_bar)} xi'(Cw + Py)`` via strong duality.

    Returns ``(psi, y_star, point)`` where ``point`` is the full recourse
    assignment including auxiliaries.
    """
    w = np.asarray(w, dtype=int)
    xi_bar = np.asarray(xi_bar, dtype=float)
    xi = problem.xi_set
    if not xi.contains(xi_bar, 1e-6):
        raise ValueError("xi_bar lies outside the uncertainty set")
    m, names = _recourse_model(problem, "ccg_sub")
    n, L = xi.dim, xi.n_rows
    for l in range(L):
        m.add_var(f"lam{l}", lo=0.0)
    pinned = list(np.flatnonzero(w))
    for i in pinned:
        m.add_var(f"mu{i}", lo=-math.inf)
    Cw = problem.C @ w
    for j in range(n):
        coeffs = {f"lam{l}": xi.A[l, j] for l in range(L) if xi.A[l, j] != 0.0}
        if w[j]:
            coeffs[f"mu{j}"] = 1.0
        for k in range(problem.n_y):
            if problem.P[j, k] != 0.0:
                coeffs[names[k]] = -problem.P[j, k]
        m.add_constraint(coeffs, "=", float(Cw[j]), f"dual{j}")
    obj = {f"lam{l}": xi.b[l] for l in range(L) if xi.b[l] != 0.0}
    for i in pinned:
        if xi_bar[i] != 0.0:
            obj[f"mu{i}"] = float(xi_bar[i])
    m.set_objective(obj, "min")
    sol, _ = solve_with_separation(m, _separator(problem, names), params, engine)
    if sol.status == "infeasible":
        raise DataError("dual subproblem infeasible: the inner maximisation is unbounded")
    if not sol.has_values:
        raise RuntimeError(f"recourse subproblem failed with status {sol.status}")
    point = block_point(sol.values, names)
    return float(sol.objective), _key(point[:problem.recourse.n_main]), point


def _emit(trace: Optional[IO], rec: dict) -> None:
    if trace is not None:
        trace.write(json.dumps(rec) + "\n")


def evaluate_phi(problem: DdidProblem, w: Sequence[int], params: Optional[SolveParams] = None,
                 pool: Optional[Sequence[Sequence[int]]] = None, engine=None, tol: float = TOL,
                 trace: Optional[IO] = None) -> tuple:
    """Worst-case value of ``w`` (min convention) and the final :class:`CcgState`.

    ``pool`` optionally warm-starts the policy pool (any feasible policies).
    On time limit the state is flagged non-converged and the returned value
    is the master bound.
    """
    params = params or SolveParams()
    engine = engine or get_engine()
    w = np.asarray(w, dtype=int)
    t0 = time.perf_counter()
    state = CcgState()
    start = [_key(y) for y in pool] if pool else [seed_policy(problem, params, engine)]
    for y in start:
        if y not in state.policy_pool:
            state.policy_pool.append(y)

    def left() -> float:
        return params.time_limit - (time.perf_counter() - t0)

    while True:
        if left() <= 0:
            break
        p = SolveParams(max(left(), 1.0), params.mip_gap, params.threads, params.keep_files)
        master = build_ccg_master(problem, w, state.policy_pool)
        msol = engine.solve(master, p)
        if msol.status == "infeasible":
            raise DataError("uncertainty set is empty")
        if msol.status != "optimal":
            raise RuntimeError(f"CCG master failed with status {msol.status}")
        state.iterations += 1
        state.ub = min(state.ub, float(msol.values["tau"]))
        n = problem.n_xi
        xi_bar = np.array([msol.values[f"xb{i}"] for i in range(n)])
        state.certificate = WorstCaseCertificate(
            xi_bar=xi_bar,
            xi_per_policy={y: np.array([msol.values[f"x{k}_{i}"] for i in range(n)])
                           for k, y in enumerate(state.policy_pool)},
            value=float(msol.values["tau"]))
        # the LP may return a point marginally outside Xi; project the check tolerance
        psi, y_star, _ = solve_recourse_subproblem(problem, w, _clip(problem, xi_bar), p, engine)
        state.lb = max(state.lb, psi)
        rec = {"iteration": state.iterations, "ub": state.ub, "lb": state.lb,
               "pool": len(state.policy_pool)}
        state.history.append(rec)
        _emit(trace, rec)
        if state.ub - state.lb <= tol:
            state.converged = True
            break
        if y_star in state.policy_pool:
            raise CcgNumericalError(
                f"subproblem returned pooled policy {y_star} with gap {state.ub - state.lb:.3g}")
        state.policy_pool.append(y_star)
    state.wall_time = time.perf_counter() - t0
    value = state.ub if math.isfinite(state.ub) else math.nan
    return value, state


def _clip(problem: DdidProblem, xi_bar: np.ndarray) -> np.ndarray:
    xi = problem.xi_set
    if xi.lo is not None:
        xi_bar = np.maximum(xi_bar, np.where(np.isfinite(xi.lo), xi.lo, -np.inf))
    if xi.hi is not None:
        xi_bar = np.minimum(xi_bar, np.where(np.isfinite(xi.hi), xi.hi, np.inf))
    return xi_bar
