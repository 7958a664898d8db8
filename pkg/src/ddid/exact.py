"""Exact outer loop over observation decisions (logic-based Benders).

The master minimises an epigraph variable ``phi`` over ``w in W`` subject to
one under-estimating cut per evaluated observation vector; each new master
solution is evaluated exactly by column-and-constraint generation.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np

from .backend.engines import get_engine
from .backend.model import BINARY, MilpModel, SolveParams
from .ccg import evaluate_phi, seed_policy
from .core import DdidProblem
from .kadapt import compute_optimistic_vectors, recourse_lp_minimum

logger = logging.getLogger(__name__)

TOL = 1e-6


class InvalidCutError(ValueError):
    pass


class EmptyObservationSetError(ValueError):
    pass


@dataclass(frozen=True)
class Cut:
    """``phi >= constant + coeffs'w``."""

    constant: float
    coeffs: np.ndarray
    kind: str

    def rhs(self, w: Sequence[float]) -> float:
        return float(self.constant + np.dot(self.coeffs, np.asarray(w, dtype=float)))

    def as_dict(self) -> dict:
        return {"kind": self.kind, "constant": self.constant, "coeffs": self.coeffs.tolist()}


def hamming_distance(w_prime: Sequence[int], w: Sequence[float]) -> float:
    """Linear Hamming distance, valid for fractional ``w``."""
    wp = np.asarray(w_prime)
    w = np.asarray(w, dtype=float)
    return float(np.sum(np.where(wp == 1, 1.0 - w, w)))


def information_distance(w_prime: Sequence[int], w: Sequence[float]) -> float:
    """Mass newly observed by ``w`` outside the support of ``w_prime``."""
    wp = np.asarray(w_prime)
    return float(np.sum(np.where(wp == 0, np.asarray(w, dtype=float), 0.0)))


def _check(phi_prime: float, phi_lower: float) -> float:
    if phi_lower > phi_prime + TOL:
        raise ValueError(f"lower bound {phi_lower} exceeds the evaluated value {phi_prime}")
    return max(phi_prime - phi_lower, 0.0)


def integer_optimality_cut(w_prime: Sequence[int], phi_prime: float, phi_lower: float) -> Cut:
    slope = _check(phi_prime, phi_lower)
    wp = np.asarray(w_prime, dtype=int)
    coeffs = np.where(wp == 1, slope, -slope).astype(float)
    return Cut(float(phi_prime - slope * wp.sum()), coeffs, "integer")


def information_cut(w_prime: Sequence[int], phi_prime: float, phi_lower: float, *,
                    problem: Optional[DdidProblem] = None,
                    deterministic: Optional[bool] = None) -> Cut:
    """Cut that only charges for newly observed components.

    Valid only when the discovery cost is deterministic; pass ``problem`` or
    ``deterministic`` so the precondition can be enforced.
    """
    flag = deterministic if deterministic is not None else (
        None if problem is None else problem.deterministic_discovery_cost)
    if flag is False:
        raise InvalidCutError("information cuts need a deterministic discovery cost")
    slope = _check(phi_prime, phi_lower)
    wp = np.asarray(w_prime, dtype=int)
    coeffs = np.where(wp == 0, -slope, 0.0).astype(float)
    return Cut(float(phi_prime), coeffs, "information")


def master_optimistic_bound(zeta_w: Sequence[float], offset: float = 0.0) -> Cut:
    """``phi >= zeta_w'w + offset``; ``offset`` must bound the recourse part from below."""
    return Cut(float(offset), np.asarray(zeta_w, dtype=float), "optimistic")


def lower_bound_phi(problem: DdidProblem, engine=None, params: Optional[SolveParams] = None) -> float:
    zeta_w, zeta_y = compute_optimistic_vectors(problem.xi_set, problem.C, problem.P)
    return float(np.minimum(zeta_w, 0.0).sum()
                 + recourse_lp_minimum(problem, zeta_y, engine, params))


@dataclass
class ExactParams:
    time_limit: float = 7200.0
    use_information_cuts: bool = True
    use_optimistic_bound: bool = True
    tol: float = TOL
    mip_gap: float = 1e-6
    share_pool: bool = True


@dataclass
class MasterState:
    evaluated_points: list = field(default_factory=list)
    cuts: list = field(default_factory=list)
    phi_lower: float = -math.inf
    lb: float = -math.inf
    ub: float = math.inf
    iterations: int = 0
    master_solves: int = 0
    ccg_iterations: int = 0


@dataclass
class ExactResult:
    w: Optional[np.ndarray]
    value: float
    state: MasterState
    status: str
    gap: float
    wall_time: float

    def __iter__(self):
        return iter((self.w, self.value, self.state))


def _master(problem: DdidProblem, state: MasterState, extra: Sequence[Cut]) -> MilpModel:
    m = MilpModel("benders_master")
    m.add_var("phi", lo=-math.inf)
    wn = [m.add_var(f"w{i}", BINARY) for i in range(problem.n_w)]
    for k, r in enumerate(problem.w_set):
        m.add_constraint({wn[j]: c for j, c in r.coeffs.items()}, r.sense, r.rhs, f"W{k}")
    m.add_constraint({"phi": 1.0}, ">=", state.phi_lower, "phi_lower")
    for k, cut in enumerate(list(extra) + state.cuts):
        coeffs = {wn[i]: -c for i, c in enumerate(cut.coeffs) if c != 0.0}
        coeffs["phi"] = 1.0
        m.add_constraint(coeffs, ">=", cut.constant, f"cut{k}")
    m.set_objective({"phi": 1.0}, "min")
    return m


def solve_exact(problem: DdidProblem, params: Optional[ExactParams] = None, engine=None,
                phi_lower: Optional[float] = None, trace: Optional[IO] = None) -> ExactResult:
    """Minimise the worst-case value over ``W`` (min convention)."""
    params = params or ExactParams()
    engine = engine or get_engine()
    t0 = time.perf_counter()
    milp = SolveParams(params.time_limit, params.mip_gap)
    state = MasterState()
    state.phi_lower = lower_bound_phi(problem, engine, milp) if phi_lower is None else phi_lower

    use_info = params.use_information_cuts
    if use_info and not problem.deterministic_discovery_cost:
        logger.warning("discovery cost is not deterministic; falling back to integer cuts")
        use_info = False
    extra = []
    if params.use_optimistic_bound:
        zeta_w, zeta_y = compute_optimistic_vectors(problem.xi_set, problem.C, problem.P)
        extra.append(master_optimistic_bound(
            zeta_w, recourse_lp_minimum(problem, zeta_y, engine, milp)))

    known: dict = {}
    pool = [seed_policy(problem, milp, engine)]
    best_w = None
    status = "time-limit"
    while True:
        left = params.time_limit - (time.perf_counter() - t0)
        if left <= 0:
            break
        p = SolveParams(max(left, 1.0), params.mip_gap)
        sol = engine.solve(_master(problem, state, extra), p)
        if sol.status == "infeasible":
            raise EmptyObservationSetError("master infeasible: W is empty")
        if sol.status != "optimal":
            raise RuntimeError(f"master failed with status {sol.status}")
        state.master_solves += 1
        state.lb = max(state.lb, float(sol.objective))
        w = tuple(int(round(sol.values[f"w{i}"])) for i in range(problem.n_w))
        if w in known:
            # the cut at w forces phi >= Phi(w) there, so the master bound has met ub
            if state.ub - state.lb > params.tol:
                logger.warning("master re-proposed %s with gap %.3g (solver tolerance)",
                               w, state.ub - state.lb)
            state.lb = max(state.lb, state.ub)
            status = "optimal"
            break
        phi, cstate = evaluate_phi(problem, w, SolveParams(max(left, 1.0), params.mip_gap),
                                   pool=pool if params.share_pool else None,
                                   engine=engine, tol=params.tol * 0.1)
        if not cstate.converged:
            break
        state.ccg_iterations += cstate.iterations
        if params.share_pool:
            pool = list(cstate.policy_pool)
        known[w] = phi
        state.evaluated_points.append((np.array(w), phi))
        state.iterations += 1
        if phi < state.ub:
            state.ub, best_w = phi, np.array(w)
        if state.ub < state.lb - params.tol:
            raise RuntimeError(f"bounds crossed: ub {state.ub} < lb {state.lb}")
        kind = "information" if use_info else "integer"
        rec = {"iteration": state.master_solves, "evaluated": state.iterations,
               "lb": state.lb, "ub": state.ub, "w": list(w), "cut": kind}
        if trace is not None:
            trace.write(json.dumps(rec) + "\n")
        if state.ub - state.lb <= params.tol:
            status = "optimal"
            break
        lower = min(state.phi_lower, phi)
        cut = (information_cut(w, phi, lower, problem=problem) if use_info
               else integer_optimality_cut(w, phi, lower))
        if abs(cut.rhs(w) - phi) > 1e-9 * max(1.0, abs(phi)):
            raise RuntimeError("cut is not tight at its generator")
        state.cuts.append(cut)
    gap = state.ub - state.lb
    return ExactResult(best_w, state.ub, state, status, gap, time.perf_counter() - t0)
