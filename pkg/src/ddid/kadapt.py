"""K-adaptability: commit to K recourse policies here and now, implement the
best one once the observed components are revealed.

The min-max-min problem is dualised into a single MILP over the policy
weights ``alpha``, duals ``beta``/``beta_k``/``gamma_k`` and linearised
products ``yt_k = alpha_k * y_k`` and ``wt_k = alpha_k * w``. Optional
strengthening blocks (all valid for at least one optimum):

* symmetry: ``alpha_1 >= alpha_2 >= ... >= alpha_K``
* bounds: ``alpha_1 >= 1/K`` and ``alpha_k <= 1/k``, also used as the
  McCormick envelope box
* optimistic: objective ``>= zeta_w'w + zeta_y'y_k`` for every k
* rlt: each recourse row multiplied by ``alpha_k`` and rewritten over the
  linearised copies
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .backend.engines import get_engine
from .backend.loop import solve_with_separation
from .backend.model import BINARY, CONTINUOUS, MilpModel, SolveParams
from .ccg import build_ccg_master
from .core import DdidProblem, Polyhedron, Row
from .recourse import (add_recourse_block, block_point, known_cuts, make_block_separator,
                       recourse_names, remember_cuts, row_coeffs)


@dataclass(frozen=True)
class KadaptOptions:
    K: int = 2
    symmetry: bool = True
    bounds: bool = True
    optimistic: bool = True
    rlt: bool = True
    big_M: Union[float, str] = "auto"
    fix_w: Optional[tuple] = None

    def __post_init__(self):
        if int(self.K) < 1:
            raise ValueError("K must be at least 1")
        if not isinstance(self.big_M, str) and not self.big_M > 0:
            raise ValueError("big_M must be positive")
        if isinstance(self.big_M, str) and self.big_M != "auto":
            raise ValueError("big_M must be a number or 'auto'")
        if self.fix_w is not None:
            object.__setattr__(self, "fix_w", tuple(int(v) for v in self.fix_w))

    @classmethod
    def plain(cls, K: int, **kw) -> "KadaptOptions":
        """Unstrengthened formulation (no symmetry, bounds, optimistic or RLT rows)."""
        return cls(K=K, symmetry=False, bounds=False, optimistic=False, rlt=False, **kw)

    @classmethod
    def from_flags(cls, K: int, strengthen: str = "all", **kw) -> "KadaptOptions":
        """``strengthen`` is ``all``, ``none`` or a comma list of block names."""
        names = ("symmetry", "bounds", "optimistic", "rlt")
        if strengthen == "all":
            on = set(names)
        elif strengthen == "none":
            on = set()
        else:
            on = {s.strip() for s in strengthen.split(",") if s.strip()}
            bad = on - set(names)
            if bad:
                raise ValueError(f"unknown strengthening block(s) {sorted(bad)}")
        return cls(K=K, **{n: n in on for n in names}, **kw)


@dataclass
class KadaptSolution:
    status: str
    objective: float
    bound: float
    w: Optional[np.ndarray] = None
    policies: list = field(default_factory=list)
    points: list = field(default_factory=list)
    alpha: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    beta_k: Optional[np.ndarray] = None
    gamma_k: Optional[np.ndarray] = None
    y_tilde: Optional[np.ndarray] = None
    w_tilde: Optional[np.ndarray] = None
    big_M: float = math.nan
    cuts_added: int = 0
    wall_time: float = 0.0

    @property
    def gap(self) -> float:
        if self.status == "optimal":
            return 0.0
        return abs(self.objective - self.bound) / max(abs(self.objective), 1e-10)

    def linearization_error(self) -> float:
        """``max_k |yt_k - alpha_k y_k|`` and the same for ``w``."""
        if self.alpha is None:
            return math.nan
        err = 0.0
        for k, a in enumerate(self.alpha):
            err = max(err, float(np.max(np.abs(self.y_tilde[k] - a * np.asarray(self.policies[k])),
                                        initial=0.0)))
            err = max(err, float(np.max(np.abs(self.w_tilde[k] - a * self.w), initial=0.0)))
        return err

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, list):
                return [conv(x) for x in v]
            if isinstance(v, tuple):
                return list(v)
            return v
        return {k: conv(v) for k, v in asdict(self).items()}


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def alpha_bounds(K: int) -> tuple:
    lo = np.zeros(K)
    lo[0] = 1.0 / K
    hi = 1.0 / np.arange(1, K + 1)
    return lo, hi


def symmetry_rows(K: int) -> list:
    """Rows over alpha indices: ``alpha_k - alpha_{k+1} >= 0``."""
    return [Row({k: 1.0, k + 1: -1.0}, ">=", 0.0) for k in range(K - 1)]


def compute_optimistic_vectors(xi_set: Polyhedron, C: np.ndarray, P: np.ndarray) -> tuple:
    """Column-wise best-case costs: ``min over Xi`` of ``xi'C_i`` and ``xi'P_j``."""
    def col_min(M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        out = np.zeros(M.shape[1])
        for j in range(M.shape[1]):
            if np.any(M[:, j]):
                v, _ = xi_set.minimize(M[:, j])
                if not math.isfinite(v):
                    raise ValueError(f"best-case cost of column {j} is unbounded or infeasible")
                out[j] = v
        return out
    return col_min(C), col_min(P)


def problem_optimistic_vectors(problem: DdidProblem) -> tuple:
    if "zeta" not in problem._cache:
        problem._cache["zeta"] = compute_optimistic_vectors(problem.xi_set, problem.C, problem.P)
    return problem._cache["zeta"]


def optimistic_rows(zeta_w: Sequence[float], zeta_y: Sequence[float], K: int) -> list:
    """Symbolic rows ``obj >= zeta_w'w + zeta_y'y_k`` as (k, w-coeffs, y-coeffs)."""
    zw = np.asarray(zeta_w, dtype=float)
    zy = np.asarray(zeta_y, dtype=float)
    return [(k, zw, zy) for k in range(K)]


def rlt_rows(y_constraint: Row, k: int, names: Sequence[str], alpha: str) -> tuple:
    """Row ``f'(y, aux) <sense> h`` multiplied by ``alpha_k`` over linearised names.

    Returns ``(coeffs, sense, 0.0)`` with ``-h * alpha_k`` moved to the left.
    """
    coeffs = row_coeffs(y_constraint, names)
    if y_constraint.rhs != 0.0:
        coeffs[alpha] = coeffs.get(alpha, 0.0) - y_constraint.rhs
    return coeffs, y_constraint.sense, 0.0


def auto_big_m(problem: DdidProblem, K: int) -> float:
    """Heuristic dual bound: ``K * 2 * max_i (sum_j |C_ij| + sum_j |P_ij|)``."""
    D = np.abs(problem.C).sum(axis=1) + np.abs(problem.P).sum(axis=1)
    return float(K * 2.0 * max(float(D.max(initial=0.0)), 1.0))


def recourse_lp_minimum(problem: DdidProblem, cost: Sequence[float], engine=None,
                        params: Optional[SolveParams] = None) -> float:
    """``min cost'y`` over the LP relaxation of the explicit recourse rows."""
    cost = np.asarray(cost, dtype=float)
    key = ("ylp", tuple(np.round(cost, 12)))
    if key in problem._cache:
        return problem._cache[key]
    m = MilpModel("recourse_lp")
    names = add_recourse_block(m, problem.recourse, "r", CONTINUOUS)
    m.set_objective({names[j]: c for j, c in enumerate(cost) if c != 0.0}, "min")
    sol = (engine or get_engine()).solve(m, params)
    if sol.status != "optimal":
        raise RuntimeError(f"recourse LP relaxation failed: {sol.status}")
    problem._cache[key] = float(sol.objective)
    return problem._cache[key]


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

class _Layout:
    def __init__(self, problem: DdidProblem, K: int, rlt: bool):
        spec = problem.recourse
        self.K = K
        self.n_main = spec.n_main
        self.w = [f"w{i}" for i in range(problem.n_w)]
        self.alpha = [f"alpha{k}" for k in range(K)]
        self.beta = [f"b{l}" for l in range(problem.xi_set.n_rows)]
        self.beta_k = [[f"b{k}_{l}" for l in range(problem.xi_set.n_rows)] for k in range(K)]
        self.gamma = [[f"g{k}_{i}" for i in range(problem.n_xi)] for k in range(K)]
        self.y = [recourse_names(spec, f"p{k}_") for k in range(K)]
        full = recourse_names(spec, "")
        n_lin = spec.n_vars if rlt else spec.n_main
        self.yt = [[f"t{k}_{n}" for n in full[:n_lin]] for k in range(K)]
        self.wt = [[f"v{k}_{i}" for i in range(problem.n_w)] for k in range(K)]


def _mccormick(m: MilpModel, prod: str, a: str, x: str, lo: float, hi: float, tag: str) -> None:
    m.add_constraint({prod: 1.0, x: -lo}, ">=", 0.0, f"mc1_{tag}")
    m.add_constraint({prod: 1.0, x: -hi}, "<=", 0.0, f"mc2_{tag}")
    m.add_constraint({prod: 1.0, x: -lo, a: -1.0}, "<=", -lo, f"mc3_{tag}")
    m.add_constraint({prod: 1.0, x: -hi, a: -1.0}, ">=", -hi, f"mc4_{tag}")


def _lazy_rows(lay: _Layout, rlt: bool, r: Row) -> list:
    out = [(row_coeffs(r, names), r.sense, r.rhs) for names in lay.y]
    if rlt:
        out += [rlt_rows(r, k, lay.yt[k], lay.alpha[k]) for k in range(lay.K)]
    return out


def build_strengthened(problem: DdidProblem, options: KadaptOptions,
                       include_known_cuts: bool = True) -> tuple:
    """Return ``(model, layout, M)``."""
    K = int(options.K)
    if options.fix_w is not None and len(options.fix_w) != problem.n_w:
        raise ValueError(f"fix_w has length {len(options.fix_w)}, expected {problem.n_w}")
    spec = problem.recourse
    xi = problem.xi_set
    L, n = xi.n_rows, xi.dim
    M = auto_big_m(problem, K) if options.big_M == "auto" else float(options.big_M)
    lay = _Layout(problem, K, options.rlt)
    lo, hi = alpha_bounds(K) if options.bounds else (np.zeros(K), np.ones(K))
    m = MilpModel(f"kadapt_K{K}")

    for i, name in enumerate(lay.w):
        m.add_var(name, BINARY)
        if options.fix_w is not None:
            m.fix(name, options.fix_w[i])
    for r_i, r in enumerate(problem.w_set):
        m.add_constraint({lay.w[j]: c for j, c in r.coeffs.items()}, r.sense, r.rhs, f"W{r_i}")

    for k in range(K):
        m.add_var(lay.alpha[k], lo=lo[k], hi=hi[k])
    m.add_constraint({a: 1.0 for a in lay.alpha}, "=", 1.0, "simplex")
    if options.symmetry:
        for j, r in enumerate(symmetry_rows(K)):
            m.add_constraint({lay.alpha[i]: c for i, c in r.coeffs.items()}, r.sense, r.rhs,
                             f"sym{j}")

    for name in lay.beta:
        m.add_var(name, lo=0.0)
    lazy = list(known_cuts(problem)) if include_known_cuts else []
    for k in range(K):
        for name in lay.beta_k[k]:
            m.add_var(name, lo=0.0)
        for name in lay.gamma[k]:
            m.add_var(name, lo=-M, hi=M)
        add_recourse_block(m, spec, f"p{k}_", BINARY, extra_rows=lazy)
        for j, name in enumerate(lay.yt[k]):
            m.add_var(name, lo=0.0, hi=hi[k])
            _mccormick(m, name, lay.alpha[k], lay.y[k][j], lo[k], hi[k], name)
        for i, name in enumerate(lay.wt[k]):
            m.add_var(name, lo=0.0, hi=hi[k])
            _mccormick(m, name, lay.alpha[k], lay.w[i], lo[k], hi[k], name)
        for i in range(n):
            m.add_constraint({lay.gamma[k][i]: 1.0, lay.w[i]: -M}, "<=", 0.0, f"gU{k}_{i}")
            m.add_constraint({lay.gamma[k][i]: 1.0, lay.w[i]: M}, ">=", 0.0, f"gL{k}_{i}")
        if options.rlt:
            for j, r in enumerate(list(spec.explicit_constraints) + lazy):
                c, s, h = rlt_rows(r, k, lay.yt[k], lay.alpha[k])
                m.add_constraint(c, s, h, f"rlt{k}_{j}")

    for i in range(n):
        row = {lay.beta[l]: xi.A[l, i] for l in range(L) if xi.A[l, i] != 0.0}
        for k in range(K):
            row[lay.gamma[k][i]] = -1.0
        m.add_constraint(row, "=", 0.0, f"bal{i}")
        for k in range(K):
            row = {lay.beta_k[k][l]: xi.A[l, i] for l in range(L) if xi.A[l, i] != 0.0}
            row[lay.gamma[k][i]] = 1.0
            for j in range(problem.n_w):
                if problem.C[i, j] != 0.0:
                    row[lay.wt[k][j]] = row.get(lay.wt[k][j], 0.0) - problem.C[i, j]
            for j in range(problem.n_y):
                if problem.P[i, j] != 0.0:
                    row[lay.yt[k][j]] = row.get(lay.yt[k][j], 0.0) - problem.P[i, j]
            m.add_constraint(row, "=", 0.0, f"bal{k}_{i}")

    obj = {}
    for names in [lay.beta] + lay.beta_k:
        for l, name in enumerate(names):
            if xi.b[l] != 0.0:
                obj[name] = xi.b[l]
    m.set_objective(obj, "min")

    if options.optimistic:
        zw, zy = problem_optimistic_vectors(problem)
        for k, zwk, zyk in optimistic_rows(zw, zy, K):
            row = dict(obj)
            for i, c in enumerate(zwk):
                if c != 0.0:
                    row[lay.w[i]] = row.get(lay.w[i], 0.0) - c
            for j, c in enumerate(zyk):
                if c != 0.0:
                    row[lay.y[k][j]] = row.get(lay.y[k][j], 0.0) - c
            m.add_constraint(row, ">=", 0.0, f"opt{k}")
    return m, lay, M


def _extract(problem: DdidProblem, lay: _Layout, sol, M: float, status: str) -> KadaptSolution:
    v = sol.values
    K = lay.K
    n_main = lay.n_main
    points = [block_point(v, names) for names in lay.y]
    return KadaptSolution(
        status=status, objective=float(sol.objective), bound=float(sol.best_bound),
        w=np.array([int(round(v[n])) for n in lay.w]),
        policies=[tuple(int(x) for x in p[:n_main]) for p in points],
        points=points,
        alpha=np.array([v[a] for a in lay.alpha]),
        beta=np.array([v[b] for b in lay.beta]),
        beta_k=np.array([[v[b] for b in lay.beta_k[k]] for k in range(K)]),
        gamma_k=np.array([[v[g] for g in lay.gamma[k]] for k in range(K)]),
        y_tilde=np.array([[v[t] for t in lay.yt[k][:n_main]] for k in range(K)]),
        w_tilde=np.array([[v[t] for t in lay.wt[k]] for k in range(K)]),
        big_M=M)


def solve_kadapt(problem: DdidProblem, options: KadaptOptions,
                 params: Optional[SolveParams] = None, engine=None) -> KadaptSolution:
    params = params or SolveParams()
    engine = engine or get_engine()
    t0 = time.perf_counter()
    model, lay, M = build_strengthened(problem, options)
    sep = make_block_separator(problem.recourse, lay.y,
                               expand=lambda r: _lazy_rows(lay, options.rlt, r),
                               on_rows=lambda rows: remember_cuts(problem, rows))
    sol, cuts = solve_with_separation(model, sep, params, engine)
    if not sol.has_values:
        out = KadaptSolution(status=sol.status, objective=math.nan, bound=sol.best_bound,
                             big_M=M, cuts_added=cuts)
    else:
        out = _extract(problem, lay, sol, M, sol.status)
        out.cuts_added = cuts
    out.wall_time = time.perf_counter() - t0
    return out


def lp_relaxation_bound(problem: DdidProblem, options: KadaptOptions, engine=None,
                        params: Optional[SolveParams] = None) -> float:
    """Root LP bound over the explicit rows only (no lazily discovered rows)."""
    model, _, _ = build_strengthened(problem, options, include_known_cuts=False)
    sol = (engine or get_engine()).solve(model.relaxed(), params)
    if sol.status != "optimal":
        raise RuntimeError(f"LP relaxation failed: {sol.status}")
    return float(sol.objective)


def evaluate_policies(problem: DdidProblem, w: Sequence[int], policies: Sequence[Sequence[int]],
                      engine=None, params: Optional[SolveParams] = None) -> float:
    """Exact worst-case value (min convention) of committing to ``policies`` under ``w``."""
    pool = list(dict.fromkeys(tuple(int(v) for v in y) for y in policies))
    sol = (engine or get_engine()).solve(build_ccg_master(problem, w, pool), params)
    if sol.status != "optimal":
        raise RuntimeError(f"policy evaluation LP failed: {sol.status}")
    return float(sol.values["tau"])


def big_m_audit(problem: DdidProblem, options: KadaptOptions, params: Optional[SolveParams] = None,
                engine=None, factor: float = 10.0) -> tuple:
    """Solve with the chosen M and with ``factor * M``; return both solutions."""
    base = solve_kadapt(problem, options, params, engine)
    big = solve_kadapt(problem, replace(options, big_M=base.big_M * factor), params, engine)
    return base, big
