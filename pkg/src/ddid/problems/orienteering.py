"""Sensor-placement orienteering: collect uncertain node profits on a path
from ``s`` to ``d`` within a travel-time budget, after choosing which node
profits to observe in advance.

Recourse variable layout: ``y`` has one entry per customer node (every node
other than ``s`` and ``d``), in increasing node order; ``z`` has one entry
per undirected edge of the depot-split graph, in lexicographic order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..core import DdidProblem, Polyhedron, RecourseSpec, Row

SPLIT_DEPOT = -1


@dataclass
class OrienteeringInstance:
    """Either ``coords`` or ``times`` must be given; ``times`` wins if both are."""

    coords: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None
    s: int = 0
    d: int = 0
    U: float = 1.0
    T_list: list = field(default_factory=list)
    name: str = "orienteering"

    def __post_init__(self):
        if self.times is None:
            if self.coords is None:
                raise ValueError("need coordinates or a travel-time matrix")
            c = np.asarray(self.coords, dtype=float)
            self.coords = c
            self.times = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(-1))
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("travel-time matrix must be square")
        if not np.allclose(t, t.T):
            raise ValueError("travel-time matrix must be symmetric")
        if np.any(t < 0):
            raise ValueError("travel times must be non-negative")
        self.times = t
        n = t.shape[0]
        if not (0 <= self.s < n and 0 <= self.d < n):
            raise ValueError("start/destination out of range")

    @property
    def n_nodes(self) -> int:
        return self.times.shape[0]

    @property
    def customers(self) -> list:
        return [i for i in range(self.n_nodes) if i not in (self.s, self.d)]

    # -- I/O ----------------------------------------------------------------

    def to_json(self) -> dict:
        d = {"name": self.name, "s": self.s, "d": self.d, "U": self.U, "T": list(self.T_list)}
        if self.coords is not None:
            d["coords"] = np.asarray(self.coords).tolist()
        else:
            d["times"] = self.times.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "OrienteeringInstance":
        return cls(coords=np.array(d["coords"]) if "coords" in d else None,
                   times=np.array(d["times"]) if "times" in d else None,
                   s=int(d.get("s", 0)), d=int(d.get("d", 0)), U=float(d.get("U", 1.0)),
                   T_list=[float(v) for v in d.get("T", [])], name=d.get("name", "orienteering"))

    def to_text(self) -> str:
        if self.coords is None:
            raise ValueError("text format needs coordinates")
        lines = [f"{self.n_nodes} {float(self.U)!r}"]
        lines += [f"{float(x)!r} {float(y)!r}" for x, y in np.asarray(self.coords, dtype=float)]
        lines.append("T: " + " ".join(repr(float(v)) for v in self.T_list))
        lines.append(f"S: {self.s} {self.d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, name: str = "orienteering") -> "OrienteeringInstance":
        lines = [l.strip() for l in text.splitlines() if l.strip() and not l.startswith("#")]
        head = lines[0].split()
        n, U = int(head[0]), float(head[1])
        coords = np.array([[float(v) for v in l.split()[:2]] for l in lines[1:1 + n]])
        T_list, s, d = [], 0, 0
        for l in lines[1 + n:]:
            key, _, rest = l.partition(":")
            if key.strip().upper() == "T":
                T_list = [float(v) for v in rest.split()]
            elif key.strip().upper() == "S":
                s, d = (int(v) for v in rest.split()[:2])
            else:
                raise ValueError(f"unknown instance line {l!r}")
        return cls(coords=coords, s=s, d=d, U=U, T_list=T_list, name=name)


def load_instance(path) -> OrienteeringInstance:
    p = Path(path)
    txt = p.read_text()
    if p.suffix == ".json" or txt.lstrip().startswith("{"):
        return OrienteeringInstance.from_json(json.loads(txt))
    return OrienteeringInstance.from_text(txt, name=p.stem)


def save_instance(inst: OrienteeringInstance, path) -> None:
    p = Path(path)
    if p.suffix == ".json":
        p.write_text(json.dumps(inst.to_json(), indent=1))
    else:
        p.write_text(inst.to_text())


# ---------------------------------------------------------------------------
# Recourse set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Graph:
    """Depot-split graph: local ids 0..m-1 are customers, then s, then d."""

    customers: tuple
    edges: tuple          # (a, b) local ids, a < b
    times: tuple

    @property
    def m(self) -> int:
        return len(self.customers)

    @property
    def s(self) -> int:
        return self.m

    @property
    def d(self) -> int:
        return self.m + 1


def _split_graph(inst: OrienteeringInstance) -> _Graph:
    cust = inst.customers
    orig = list(cust) + [inst.s, inst.d]
    m = len(cust)
    edges, times = [], []
    for a in range(m + 2):
        for b in range(a + 1, m + 2):
            edges.append((a, b))
            if a == m and b == m + 1 and inst.s == inst.d:
                times.append(0.0)
            else:
                times.append(float(inst.times[orig[a], orig[b]]))
    return _Graph(tuple(cust), tuple(edges), tuple(times))


class SubtourSeparator:
    """Integer connectivity check on a recourse point ``(y, z)``.

    Stateless and reentrant. Returns one row per component that contains
    visited customers but neither depot.
    """

    def __init__(self, graph: _Graph):
        self.g = graph

    def __call__(self, x: np.ndarray) -> list:
        g = self.g
        m = g.m
        n = m + 2
        z = np.asarray(x[m:])
        chosen = [e for e, v in zip(g.edges, z) if v > 0.5]
        if not chosen:
            return []
        r = [a for a, _ in chosen]
        c = [b for _, b in chosen]
        adj = coo_matrix((np.ones(len(chosen)), (r, c)), shape=(n, n))
        _, label = connected_components(adj, directed=False)
        used = set(r) | set(c)
        out = []
        seen = set()
        for comp in sorted({label[i] for i in used}):
            if comp in seen or comp in (label[g.s], label[g.d]):
                continue
            seen.add(comp)
            S = [i for i in range(m) if label[i] == comp]
            out.append(subtour_row(g, S, S[0]))
        return out


def subtour_row(g: _Graph, S: Sequence[int], u: int) -> Row:
    """``sum_{e inside S} z_e <= sum_{i in S} y_i - y_u``."""
    Sset = set(S)
    coeffs = {}
    for k, (a, b) in enumerate(g.edges):
        if a in Sset and b in Sset:
            coeffs[g.m + k] = 1.0
    for i in S:
        if i != u:
            coeffs[i] = coeffs.get(i, 0.0) - 1.0
    return Row(coeffs, "<=", 0.0)


def build_orienteering_recourse(inst: OrienteeringInstance, T: float) -> RecourseSpec:
    if T < 0:
        raise ValueError("maximum duration T must be non-negative")
    g = _split_graph(inst)
    m = g.m
    rows = [Row({m + k: t for k, t in enumerate(g.times) if t != 0.0}, "<=", float(T))]
    for depot in (g.s, g.d):
        rows.append(Row({m + k: 1.0 for k, e in enumerate(g.edges) if depot in e}, "=", 1.0))
    for i in range(m):
        coeffs = {m + k: 1.0 for k, e in enumerate(g.edges) if i in e}
        coeffs[i] = -2.0
        rows.append(Row(coeffs, "=", 0.0))
    labels = {g.s: f"s{inst.s}", g.d: f"d{inst.d}"}
    labels.update({i: f"n{c}" for i, c in enumerate(g.customers)})
    return RecourseSpec(
        n_main=m, n_aux=len(g.edges), explicit_constraints=tuple(rows),
        separation=SubtourSeparator(g),
        main_names=tuple(f"y{c}" for c in g.customers),
        aux_names=tuple(f"z_{labels[a]}_{labels[b]}" for a, b in g.edges),
    )


def path_of(inst: OrienteeringInstance, x: Sequence[float]) -> list:
    """Original node sequence of a feasible recourse point, from s to d."""
    g = _split_graph(inst)
    m = g.m
    adj: dict = {i: [] for i in range(m + 2)}
    for (a, b), v in zip(g.edges, x[m:]):
        if v > 0.5:
            adj[a].append(b)
            adj[b].append(a)
    orig = list(g.customers) + [inst.s, inst.d]
    walk, prev, cur = [g.s], None, g.s
    while cur != g.d:
        nxt = [v for v in adj[cur] if v != prev]
        if not nxt:
            raise ValueError("recourse point is not an s-d path")
        prev, cur = cur, nxt[0]
        walk.append(cur)
    return [orig[v] for v in walk]


def path_feasible(inst: OrienteeringInstance, T: float, y: Sequence[int], tol: float = 1e-9) -> bool:
    """Independent check: is there an ordering of the visited customers
    forming an s-d path within budget T? (Permutation search, small sets.)"""
    import itertools

    visit = [c for c, v in zip(inst.customers, y) if v > 0.5]
    t = inst.times
    best = math.inf
    for perm in itertools.permutations(visit):
        seq = [inst.s, *perm, inst.d]
        best = min(best, sum(t[a, b] for a, b in zip(seq, seq[1:])))
        if best <= T + tol:
            return True
    return best <= T + tol


# ---------------------------------------------------------------------------
# Uncertainty sets and the full problem
# ---------------------------------------------------------------------------

def make_xi1(N: int, U: float) -> Polyhedron:
    """Profits in ``[0, U]`` per node with total exactly 1."""
    e = np.ones((1, N))
    return Polyhedron(np.vstack([e, -e]), np.array([1.0, -1.0]),
                      lo=np.zeros(N), hi=np.full(N, float(U)))


def make_xi2(u_hat: Sequence[float], theta: float = 0.75) -> Polyhedron:
    """Profits within ``theta`` relative deviation of ``u_hat``, total exactly 1."""
    u = np.asarray(u_hat, dtype=float)
    lo, hi = u * (1 - theta), u * (1 + theta)
    if hi.sum() < 1 - 1e-12 or lo.sum() > 1 + 1e-12:
        raise ValueError("empty uncertainty set: the box cannot reach total profit 1")
    N = len(u)
    e = np.ones((1, N))
    return Polyhedron(np.vstack([e, -e]), np.array([1.0, -1.0]), lo=lo, hi=hi)


def observation_budget(delta: float, n_w: int) -> int:
    return int(math.ceil(delta * n_w - 1e-9))


def budget_rows(n_w: int, B: int) -> tuple:
    return (Row({i: 1.0 for i in range(n_w)}, "<=", float(B)),)


def orienteering_to_ddid(inst: OrienteeringInstance, T: float, delta: Optional[float] = None,
                         xi_choice="xi1", budget: Optional[int] = None,
                         theta: float = 0.75, u_hat: Optional[Sequence[float]] = None) -> DdidProblem:
    """Max-convention problem ``max_w min max min xi'y`` stored in min convention.

    ``xi_choice`` is ``"xi1"``, ``"xi2"`` (needs ``u_hat``) or a ready
    :class:`Polyhedron`. Either ``delta`` or an explicit ``budget`` sets W.
    """
    spec = build_orienteering_recourse(inst, T)
    N = spec.n_main
    if isinstance(xi_choice, Polyhedron):
        xi = xi_choice
    elif xi_choice == "xi1":
        xi = make_xi1(N, inst.U)
    elif xi_choice == "xi2":
        if u_hat is None:
            raise ValueError("xi2 needs u_hat")
        xi = make_xi2(u_hat, theta)
    else:
        raise ValueError(f"unknown uncertainty set {xi_choice!r}")
    if xi.dim != N:
        raise ValueError(f"uncertainty set has dim {xi.dim}, instance has {N} customers")
    if budget is None:
        budget = N if delta is None else observation_budget(delta, N)
    return DdidProblem.from_max(xi, np.zeros((N, N)), np.eye(N), budget_rows(N, budget), spec,
                                name=f"{inst.name}_T{T:g}_B{budget}",
                                deterministic_discovery_cost=True)


def example1(budget: int = 1) -> DdidProblem:
    """Four nodes, depot 0, budget 3.5, profits on the unit simplex."""
    return orienteering_to_ddid(example1_instance(), 3.5, budget=budget)


def example1_instance() -> OrienteeringInstance:
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    return OrienteeringInstance(coords=coords, s=0, d=0, U=1.0, T_list=[3.5], name="example1")


def random_instance(n_nodes: int, seed: int, U: float = 0.3, n_T: int = 2,
                    same_depot: bool = True) -> OrienteeringInstance:
    """Random Euclidean instance on ``[0, 10]^2``.

    Budgets are drawn between the longest single-customer round trip and a
    fraction of a nearest-neighbour tour, so the recourse set is neither
    trivial nor complete.
    """
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0, 10, size=(n_nodes, 2))
    d = 0 if same_depot else n_nodes - 1
    inst = OrienteeringInstance(coords=coords, s=0, d=d, U=U, name=f"rand{n_nodes}_{seed}")
    t = inst.times
    cust = inst.customers
    single = max(t[0, c] + t[c, d] for c in cust)
    order, cur, left, tour = [], 0, set(cust), 0.0
    while left:
        nxt = min(left, key=lambda j: t[cur, j])
        tour += t[cur, nxt]
        cur = nxt
        left.remove(nxt)
    tour += t[cur, d]
    lo = min(t[0, c] + t[c, d] for c in cust)
    hi = max(single, 0.6 * tour)
    inst.T_list = sorted(float(round(v, 3)) for v in rng.uniform(lo, hi, size=n_T))
    return inst
