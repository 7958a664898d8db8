"""Robust shortest path benchmark with budgeted arc-cost inflation.

Arc costs are ``c_a(xi) = (1 + xi_a / 2) * c_a`` with ``xi in [0, 1]^A`` and
``sum(xi) <= B``. The certain part ``c'z`` is expressed through a frozen
uncertainty coordinate ``xi_0 = 1``, so the generic bilinear machinery handles
the affine cost. Every coordinate is observed (``w = e``).
"""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from ..core import DdidProblem, Polyhedron, RecourseSpec, Row

logger = logging.getLogger(__name__)

REMOVE_FRACTION = 0.7
MAX_REGENERATIONS = 1000


@dataclass
class ShortestPathInstance:
    coords: np.ndarray
    arcs: list
    costs: np.ndarray
    s: int
    t: int
    B: float = 3.0
    seed: int = 0
    requested_seed: int = 0
    self_arcs: bool = False
    name: str = field(default="")

    def __post_init__(self):
        if self.s == self.t:
            raise ValueError("start and terminal must differ")
        if not self.name:
            self.name = f"sp{len(self.coords)}_{self.requested_seed}"

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def to_json(self) -> dict:
        return {"name": self.name, "coords": np.asarray(self.coords).tolist(),
                "arcs": [list(a) for a in self.arcs], "costs": np.asarray(self.costs).tolist(),
                "s": self.s, "t": self.t, "B": self.B, "seed": self.seed,
                "requested_seed": self.requested_seed, "self_arcs": self.self_arcs}

    @classmethod
    def from_json(cls, d: dict) -> "ShortestPathInstance":
        return cls(np.array(d["coords"]), [tuple(a) for a in d["arcs"]], np.array(d["costs"]),
                   d["s"], d["t"], d.get("B", 3.0), d.get("seed", 0), d.get("requested_seed", 0),
                   d.get("self_arcs", False), d.get("name", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _farthest_pair(coords: np.ndarray) -> tuple:
    best, pair = -1.0, (0, 1)
    for i, j in itertools.combinations(range(len(coords)), 2):
        d = float(np.hypot(*(coords[i] - coords[j])))
        if d > best:
            best, pair = d, (i, j)
    return pair


def _reachable(n: int, arcs: list, s: int, t: int) -> bool:
    if not arcs:
        return False
    r, c = zip(*arcs)
    g = coo_matrix((np.ones(len(arcs)), (r, c)), shape=(n, n)).tocsr()
    order = breadth_first_order(g, s, directed=True, return_predecessors=False)
    return t in set(order.tolist())


def _draw(N: int, seed: int, self_arcs: bool) -> tuple:
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, 10.0, size=(N, 2))
    s, t = _farthest_pair(coords)
    pairs = [(i, j) for i in range(N) for j in range(N) if self_arcs or i != j]
    weight = {a: float(np.hypot(*(coords[a[0]] - coords[a[1]]))) for a in pairs}
    n_remove = int(np.floor(REMOVE_FRACTION * len(pairs)))
    ranked = sorted(pairs, key=lambda a: (-weight[a], -a[0], -a[1]))
    kept = sorted(ranked[n_remove:])
    return coords, s, t, kept, np.array([weight[a] for a in kept])


def generate_shortest_path_instance(N: int, seed: int, B: float = 3.0,
                                    self_arcs: bool = False) -> ShortestPathInstance:
    """Seeded random instance; redrawn with ``seed + 1, + 2, ...`` until t is reachable."""
    if N < 2:
        raise ValueError("need at least two nodes")
    for off in range(MAX_REGENERATIONS):
        coords, s, t, arcs, costs = _draw(N, seed + off, self_arcs)
        if _reachable(N, arcs, s, t):
            if off:
                logger.info("instance N=%d seed=%d disconnected; used seed %d", N, seed, seed + off)
            return ShortestPathInstance(coords, arcs, costs, s, t, B, seed + off, seed, self_arcs)
    raise RuntimeError(f"no connected instance within {MAX_REGENERATIONS} seeds")


def build_path_recourse(inst: ShortestPathInstance) -> RecourseSpec:
    """Flow rows ``out(j) - in(j) >= [j = s] - [j = t]`` over arc binaries."""
    rows = []
    for j in range(inst.n_nodes):
        coeffs: dict = {}
        for a, (u, v) in enumerate(inst.arcs):
            if u == j:
                coeffs[a] = coeffs.get(a, 0.0) + 1.0
            if v == j:
                coeffs[a] = coeffs.get(a, 0.0) - 1.0
        rhs = float((j == inst.s) - (j == inst.t))
        coeffs = {a: c for a, c in coeffs.items() if c != 0.0}
        if coeffs or rhs > 0:
            rows.append(Row(coeffs, ">=", rhs))
    return RecourseSpec(n_main=inst.n_arcs, explicit_constraints=tuple(rows),
                        main_names=tuple(f"z{u}_{v}" for u, v in inst.arcs))


def make_budget_set(n_arcs: int, B: float) -> Polyhedron:
    """Frozen coordinate 0 plus ``xi in [0, 1]^A`` with ``sum(xi) <= B``."""
    n = n_arcs + 1
    A = np.zeros((3, n))
    A[0, 0], A[1, 0] = 1.0, -1.0
    A[2, 1:] = 1.0
    lo = np.zeros(n)
    hi = np.ones(n)
    lo[0] = 1.0
    return Polyhedron(A, np.array([1.0, -1.0, float(B)]), lo, hi)


def sp_to_kadapt(inst: ShortestPathInstance, B: Optional[float] = None) -> DdidProblem:
    """Min-convention problem with every coordinate observed; pair it with
    ``KadaptOptions(fix_w=full_observation(problem))``."""
    B = inst.B if B is None else B
    nA = inst.n_arcs
    xi = make_budget_set(nA, B)
    P = np.zeros((nA + 1, nA))
    P[0, :] = inst.costs
    P[1 + np.arange(nA), np.arange(nA)] = inst.costs / 2.0
    n = nA + 1
    w_set = (Row({i: 1.0 for i in range(n)}, ">=", float(n)),)
    return DdidProblem(xi, np.zeros((n, n)), P, w_set, build_path_recourse(inst),
                       deterministic_discovery_cost=True, name=inst.name)


def full_observation(problem: DdidProblem) -> tuple:
    return tuple([1] * problem.n_w)


def simple_paths(inst: ShortestPathInstance, limit: int = 200000) -> list:
    """All simple s-t paths as arc-index lists (depth-first; small graphs only)."""
    out_arcs: dict = {}
    for a, (u, v) in enumerate(inst.arcs):
        if u != v:
            out_arcs.setdefault(u, []).append((a, v))
    paths, stack = [], [(inst.s, [], {inst.s})]
    while stack:
        node, used, seen = stack.pop()
        if node == inst.t:
            paths.append(used)
            if len(paths) > limit:
                raise RuntimeError("too many simple paths")
            continue
        for a, v in out_arcs.get(node, []):
            if v not in seen:
                stack.append((v, used + [a], seen | {v}))
    return paths


def worst_case_cost(inst: ShortestPathInstance, arcs: list, B: Optional[float] = None) -> float:
    """Worst cost of a fixed arc set: nominal plus half the largest ``B`` unit inflations."""
    B = inst.B if B is None else B
    c = np.sort(np.asarray([inst.costs[a] for a in arcs]))[::-1]
    full = int(np.floor(B))
    frac = B - full
    extra = c[:full].sum() / 2.0
    if full < len(c):
        extra += frac * c[full] / 2.0
    return float(c.sum() + extra)


def contains_st_path(inst: ShortestPathInstance, z) -> bool:
    arcs = [a for a, v in zip(inst.arcs, z) if v > 0.5]
    return _reachable(inst.n_nodes, arcs, inst.s, inst.t)
