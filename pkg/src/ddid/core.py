"""Problem data model for two-stage robust problems with decision-dependent
information discovery, plus the brute-force oracles used by the test suites.

All internal algebra uses the MIN convention:

    min_{w in W} Phi(w),
    Phi(w) = max_{xibar in Xi} min_{y in Y} max_{xi in Xi(w, xibar)} xi'Cw + xi'Py

A maximisation problem is stored with negated ``C`` and ``P`` and
``sense="max"``; :meth:`DdidProblem.report` maps internal values back.
"""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-6
OBJ_TOL = 1e-6
SCHEMA_VERSION = 1

SENSES = ("<=", ">=", "=")


class EnumerationCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Row:
    """A linear row ``sum_j coeffs[j] * x[j]  sense  rhs`` over indexed variables."""

    coeffs: Mapping[int, float]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")

    def activity(self, x: Sequence[float]) -> float:
        return float(sum(c * x[j] for j, c in self.coeffs.items()))

    def violation(self, x: Sequence[float]) -> float:
        lhs = self.activity(x)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)

    def satisfied(self, x: Sequence[float], tol: float = FEAS_TOL) -> bool:
        return self.violation(x) <= tol

    def key(self) -> tuple:
        return (tuple(sorted((j, round(c, 12)) for j, c in self.coeffs.items() if c != 0.0)),
                self.sense, round(self.rhs, 12))

    def to_json(self) -> dict:
        return {"coeffs": {str(j): c for j, c in self.coeffs.items()},
                "sense": self.sense, "rhs": self.rhs}

    @classmethod
    def from_json(cls, d: dict) -> "Row":
        return cls({int(j): float(c) for j, c in d["coeffs"].items()}, d["sense"], float(d["rhs"]))


# ---------------------------------------------------------------------------
# Uncertainty set
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Polyhedron:
    """``Xi = {xi : A xi <= b}``.

    Optional box bounds ``lo``/``hi`` are kept alongside the rows for fast
    big-M derivation; any finite box bound not already present as a row is
    appended to ``(A, b)`` so that ``A xi <= b`` alone is a complete
    membership test.
    """

    A: np.ndarray
    b: np.ndarray
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if A.shape[0] < 1:
            raise ValueError("polyhedron needs at least one row")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("polyhedron rows must be finite")
        n = A.shape[1]
        lo = None if self.lo is None else np.asarray(self.lo, dtype=float).reshape(n)
        hi = None if self.hi is None else np.asarray(self.hi, dtype=float).reshape(n)
        extra_A, extra_b = [], []
        existing = {(tuple(r), bb) for r, bb in zip(A, b)}
        for i in range(n):
            if hi is not None and np.isfinite(hi[i]):
                r = np.zeros(n)
                r[i] = 1.0
                if (tuple(r), hi[i]) not in existing:
                    extra_A.append(r)
                    extra_b.append(hi[i])
            if lo is not None and np.isfinite(lo[i]):
                r = np.zeros(n)
                r[i] = -1.0
                if (tuple(r), -lo[i]) not in existing:
                    extra_A.append(r)
                    extra_b.append(-lo[i])
        if extra_A:
            A = np.vstack([A, np.array(extra_A)])
            b = np.concatenate([b, np.array(extra_b)])
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def contains(self, xi: Sequence[float], tol: float = FEAS_TOL) -> bool:
        xi = np.asarray(xi, dtype=float)
        return bool(np.all(self.A @ xi <= self.b + tol))

    def minimize(self, c: Sequence[float]) -> tuple[float, Optional[np.ndarray]]:
        """Return ``min c'xi`` over the set (``-inf`` if unbounded, ``inf`` if empty)."""
        res = linprog(np.asarray(c, dtype=float), A_ub=self.A, b_ub=self.b,
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 0:
            return float(res.fun), res.x
        if res.status == 3:
            return -np.inf, None
        if res.status == 2:
            return np.inf, None
        raise RuntimeError(f"LP probe failed: {res.message}")

    def coordinate_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate bounds from two LP probes each."""
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            lo[i] = self.minimize(e)[0]
            hi[i] = -self.minimize(-e)[0]
        return lo, hi

    def is_empty(self) -> bool:
        return self.minimize(np.zeros(self.dim))[0] == np.inf

    def vertices(self, tol: float = 1e-9) -> np.ndarray:
        """Enumerate vertices by brute force over row subsets (small sets only)."""
        n, L = self.dim, self.n_rows
        out = []
        for rows in itertools.combinations(range(L), n):
            sub = self.A[list(rows)]
            if abs(np.linalg.det(sub)) < 1e-12:
                continue
            v = np.linalg.solve(sub, self.b[list(rows)])
            if self.contains(v, tol) and not any(np.allclose(v, u, atol=1e-9) for u in out):
                out.append(v)
        return np.array(out).reshape(-1, n)

    def to_json(self) -> dict:
        d = {"A": self.A.tolist(), "b": self.b.tolist()}
        if self.lo is not None:
            d["lo"] = [None if not np.isfinite(v) else float(v) for v in self.lo]
        if self.hi is not None:
            d["hi"] = [None if not np.isfinite(v) else float(v) for v in self.hi]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Polyhedron":
        def vec(key, fill):
            if d.get(key) is None:
                return None
            return np.array([fill if v is None else v for v in d[key]], dtype=float)
        return cls(np.array(d["A"], dtype=float), np.array(d["b"], dtype=float),
                   vec("lo", -np.inf), vec("hi", np.inf))


def restrict_xi_set(xi_set: Polyhedron, w: Sequence[int], xi_bar: Sequence[float],
                    tol: float = FEAS_TOL) -> Polyhedron:
    """``Xi(w, xibar)``: pin every observed coordinate to its value in ``xi_bar``."""
    w = np.asarray(w).astype(int)
    xi_bar = np.asarray(xi_bar, dtype=float)
    if w.shape != (xi_set.dim,) or xi_bar.shape != (xi_set.dim,):
        raise ValueError("w and xi_bar must match the dimension of the uncertainty set")
    if not xi_set.contains(xi_bar, tol):
        raise ValueError("xi_bar lies outside the uncertainty set")
    rows, rhs = [], []
    for i in np.flatnonzero(w):
        e = np.zeros(xi_set.dim)
        e[i] = 1.0
        rows += [e, -e]
        rhs += [xi_bar[i], -xi_bar[i]]
    lo = np.full(xi_set.dim, -np.inf) if xi_set.lo is None else xi_set.lo.copy()
    hi = np.full(xi_set.dim, np.inf) if xi_set.hi is None else xi_set.hi.copy()
    lo[w == 1] = xi_bar[w == 1]
    hi[w == 1] = xi_bar[w == 1]
    if not rows:
        return Polyhedron(xi_set.A, xi_set.b, xi_set.lo, xi_set.hi)
    return Polyhedron(np.vstack([xi_set.A, np.array(rows)]),
                      np.concatenate([xi_set.b, np.array(rhs)]), lo, hi)


# ---------------------------------------------------------------------------
# Recourse set
# ---------------------------------------------------------------------------

Separator = Callable[[np.ndarray], list]


@dataclass(frozen=True, eq=False)
class RecourseSpec:
    """Binary recourse set ``Y`` over ``(y, aux)``.

    Variable ``j < n_main`` is the profit-bearing ``y_j``; ``j >= n_main`` is
    auxiliary ``aux_{j - n_main}``. ``separation`` receives an integer point
    and returns rows (``Row``) it violates; it must be sound for ``Y``.
    """

    n_main: int
    n_aux: int = 0
    explicit_constraints: tuple = ()
    separation: Optional[Separator] = None
    main_names: Optional[tuple] = None
    aux_names: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "explicit_constraints", tuple(self.explicit_constraints))
        n = self.n_main + self.n_aux
        for r in self.explicit_constraints:
            bad = [j for j in r.coeffs if not 0 <= j < n]
            if bad:
                raise ValueError(f"row references undeclared recourse variables {bad}")

    @property
    def n_vars(self) -> int:
        return self.n_main + self.n_aux

    def separate(self, x: Sequence[float]) -> list:
        if self.separation is None:
            return []
        return list(self.separation(np.rint(np.asarray(x, dtype=float)).astype(int)))

    def is_feasible(self, x: Sequence[float], tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            return False
        if np.any(np.abs(x - np.rint(x)) > tol) or np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        return all(r.satisfied(x, tol) for r in self.explicit_constraints) and not self.separate(x)


# ---------------------------------------------------------------------------
# Full problem
# ---------------------------------------------------------------------------

def discovery_cost_is_deterministic(xi_set: Polyhedron, C: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff ``xi'C_i`` is constant over Xi for every column ``C_i``."""
    C = np.asarray(C, dtype=float)
    for i in range(C.shape[1]):
        col = C[:, i]
        if not np.any(col):
            continue
        lo = xi_set.minimize(col)[0]
        hi = -xi_set.minimize(-col)[0]
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi - lo > tol:
            return False
    return True


@dataclass(frozen=True, eq=False)
class DdidProblem:
    """A DDID instance stored in min convention.

    ``w_set`` are linear rows over the binary observation vector ``w``.
    ``deterministic_discovery_cost`` defaults to an LP-based detection.
    """

    xi_set: Polyhedron
    C: np.ndarray
    P: np.ndarray
    w_set: tuple
    recourse: RecourseSpec
    deterministic_discovery_cost: Optional[bool] = None
    sense: str = "min"
    name: str = "ddid"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "w_set", tuple(self.w_set))
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if self.deterministic_discovery_cost is None:
            flag = C.shape[0] == self.xi_set.dim and discovery_cost_is_deterministic(self.xi_set, C)
            object.__setattr__(self, "deterministic_discovery_cost", flag)

    @classmethod
    def from_max(cls, xi_set, C, P, w_set, recourse, name="ddid", **kw) -> "DdidProblem":
        """Build from a maximisation statement ``max_w min_xibar max_y min_xi xi'Cw + xi'Py``."""
        return cls(xi_set, -np.asarray(C, dtype=float), -np.asarray(P, dtype=float), w_set,
                   recourse, sense="max", name=name, **kw)

    @property
    def n_xi(self) -> int:
        return self.xi_set.dim

    @property
    def n_w(self) -> int:
        return self.C.shape[1]

    @property
    def n_y(self) -> int:
        return self.P.shape[1]

    def report(self, value: float) -> float:
        """Map an internal (min-convention) value to the original sense."""
        return (-value if self.sense == "max" else value) + 0.0

    def internal(self, value: float) -> float:
        return -value if self.sense == "max" else value

    def w_feasible(self, w: Sequence[int], tol: float = FEAS_TOL) -> bool:
        return all(r.satisfied(w, tol) for r in self.w_set)

    def enumerate_w(self, cap: int = 1 << 16) -> list:
        """All binary ``w`` satisfying ``w_set`` (brute force)."""
        if 2 ** self.n_w > cap:
            raise EnumerationCapExceeded(f"2^{self.n_w} observation vectors exceed cap {cap}")
        return [np.array(w) for w in itertools.product((0, 1), repeat=self.n_w)
                if self.w_feasible(w)]

    def cost_vector(self, w: Sequence[int], y: Sequence[int]) -> np.ndarray:
        """``Cw + Py``: the coefficient of xi in the objective."""
        return self.C @ np.asarray(w, dtype=float) + self.P @ np.asarray(y, dtype=float)

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> dict:
        """JSON document; the recourse separator is not serialisable and is
        re-attached from ``recourse_kind`` metadata by the problem adapters."""
        spec = self.recourse
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "sense": self.sense,
            "xi_set": self.xi_set.to_json(),
            "C": self.C.tolist(),
            "P": self.P.tolist(),
            "w_set": [r.to_json() for r in self.w_set],
            "recourse": {
                "n_main": spec.n_main,
                "n_aux": spec.n_aux,
                "explicit_constraints": [r.to_json() for r in spec.explicit_constraints],
                "main_names": list(spec.main_names) if spec.main_names else None,
                "aux_names": list(spec.aux_names) if spec.aux_names else None,
            },
            "deterministic_discovery_cost": bool(self.deterministic_discovery_cost),
        }

    @classmethod
    def from_json(cls, d: dict, separation: Optional[Separator] = None) -> "DdidProblem":
        if "schema_version" not in d:
            raise ValueError("missing schema_version")
        if d["schema_version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d['schema_version']}")
        r = d["recourse"]
        spec = RecourseSpec(
            r["n_main"], r["n_aux"], tuple(Row.from_json(x) for x in r["explicit_constraints"]), separation,
            tuple(r["main_names"]) if r.get("main_names") else None,
            tuple(r["aux_names"]) if r.get("aux_names") else None,
        )
        return cls(Polyhedron.from_json(d["xi_set"]), np.array(d["C"], dtype=float),
                   np.array(d["P"], dtype=float), tuple(Row.from_json(x) for x in d["w_set"]),
                   spec, d.get("deterministic_discovery_cost"), d["sense"], d["name"])

    def dumps(self) -> str:
        return json.dumps(self.to_json())


@dataclass
class WorstCaseCertificate:
    xi_bar: np.ndarray
    xi_per_policy: dict
    value: float

    def verify(self, xi_set: Polyhedron, w: Sequence[int], tol: float = FEAS_TOL) -> bool:
        w = np.asarray(w)
        pts = [self.xi_bar] + list(self.xi_per_policy.values())
        if not all(xi_set.contains(p, tol) for p in pts):
            return False
        return all(np.all(np.abs(w * (p - self.xi_bar)) <= tol) for p in self.xi_per_policy.values())


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    deterministic_discovery_cost: bool = False
    flag_consistent: bool = True

    @property
    def valid(self) -> bool:
        return not self.errors


def validate(problem: DdidProblem) -> ValidationReport:
    """Report-only sanity checks; never raises."""
    rep = ValidationReport()
    xi = problem.xi_set
    if problem.C.shape[0] != xi.dim:
        rep.errors.append(f"dimension mismatch: C has {problem.C.shape[0]} rows, Xi has dim {xi.dim}")
    if problem.P.shape[0] != xi.dim:
        rep.errors.append(f"dimension mismatch: P has {problem.P.shape[0]} rows, Xi has dim {xi.dim}")
    if problem.n_w != xi.dim:
        rep.errors.append(f"dimension mismatch: N_w = {problem.n_w} but N_xi = {xi.dim}")
    if problem.P.shape[1] != problem.recourse.n_main:
        rep.errors.append(f"dimension mismatch: P has {problem.P.shape[1]} columns, "
                          f"recourse has {problem.recourse.n_main} main variables")
    for r in problem.w_set:
        if any(not 0 <= j < problem.n_w for j in r.coeffs):
            rep.errors.append("observation row references an undeclared w index")
            break
    if xi.is_empty():
        rep.errors.append("uncertainty set is empty")
    else:
        lo, hi = xi.coordinate_bounds()
        for i in range(xi.dim):
            if not np.isfinite(lo[i]) or not np.isfinite(hi[i]):
                rep.warnings.append(f"unbounded uncertainty coordinate {i}")
    if not rep.errors:
        if _w_set_empty(problem):
            rep.errors.append("empty W: no binary observation vector satisfies the rows")
        det = discovery_cost_is_deterministic(xi, problem.C)
        rep.deterministic_discovery_cost = det
        rep.flag_consistent = bool(problem.deterministic_discovery_cost) == det
        if problem.deterministic_discovery_cost and not det:
            rep.errors.append("deterministic_discovery_cost is set but xi'Cw varies over Xi")
        elif not rep.flag_consistent:
            rep.warnings.append("deterministic_discovery_cost is unset although xi'Cw is constant")
    return rep


def _w_set_empty(problem: DdidProblem) -> bool:
    from scipy.optimize import milp, LinearConstraint, Bounds

    n = problem.n_w
    if not problem.w_set:
        return False
    A = np.zeros((len(problem.w_set), n))
    lo = np.full(len(problem.w_set), -np.inf)
    hi = np.full(len(problem.w_set), np.inf)
    for k, r in enumerate(problem.w_set):
        for j, c in r.coeffs.items():
            A[k, j] = c
        if r.sense in ("<=", "="):
            hi[k] = r.rhs
        if r.sense in (">=", "="):
            lo[k] = r.rhs
    res = milp(np.zeros(n), constraints=LinearConstraint(A, lo, hi),
               integrality=np.ones(n), bounds=Bounds(0, 1))
    return res.status == 2


# ---------------------------------------------------------------------------
# Recourse enumeration (oracle)
# ---------------------------------------------------------------------------

class _RowState:
    """Incremental activity bounds of every row under a partial assignment."""

    def __init__(self, rows: Sequence[Row], n: int):
        self.rows = list(rows)
        self.by_var: list = [[] for _ in range(n)]
        self.fixed = np.zeros(len(self.rows))
        self.fmin = np.zeros(len(self.rows))
        self.fmax = np.zeros(len(self.rows))
        for k, r in enumerate(self.rows):
            for j, c in r.coeffs.items():
                if c == 0.0:
                    continue
                self.by_var[j].append((k, c))
                self.fmin[k] += min(0.0, c)
                self.fmax[k] += max(0.0, c)

    def assign(self, j: int, v: int) -> bool:
        ok = True
        for k, c in self.by_var[j]:
            self.fixed[k] += c * v
            self.fmin[k] -= min(0.0, c)
            self.fmax[k] -= max(0.0, c)
            if ok and not self._row_ok(k):
                ok = False
        return ok

    def unassign(self, j: int, v: int) -> None:
        for k, c in self.by_var[j]:
            self.fixed[k] -= c * v
            self.fmin[k] += min(0.0, c)
            self.fmax[k] += max(0.0, c)

    def _row_ok(self, k: int, tol: float = 1e-9) -> bool:
        r = self.rows[k]
        lo = self.fixed[k] + self.fmin[k]
        hi = self.fixed[k] + self.fmax[k]
        if r.sense == "<=":
            return lo <= r.rhs + tol
        if r.sense == ">=":
            return hi >= r.rhs - tol
        return lo <= r.rhs + tol and hi >= r.rhs - tol


def enumerate_recourse(spec: RecourseSpec, cap: int = 4096) -> list:
    """All distinct ``y`` projections of feasible integer points of ``Y``.

    Depth-first search over ``y`` then ``aux`` with interval pruning on the
    explicit rows; each complete leaf is confirmed with the separation
    contract. Raises :class:`EnumerationCapExceeded` past ``cap`` points.
    """
    n = spec.n_vars
    state = _RowState(spec.explicit_constraints, n)
    x = np.zeros(n, dtype=int)
    found: list = []

    def search_aux(j: int) -> bool:
        if j == n:
            return not spec.separate(x)
        for v in (0, 1):
            x[j] = v
            ok = state.assign(j, v)
            hit = ok and search_aux(j + 1)
            state.unassign(j, v)
            x[j] = 0
            if hit:
                return True
        return False

    def search_main(j: int) -> None:
        if j == spec.n_main:
            if search_aux(j):
                found.append(tuple(int(v) for v in x[: spec.n_main]))
                if len(found) > cap:
                    raise EnumerationCapExceeded(f"more than {cap} recourse points (cap exceeded)")
            return
        for v in (0, 1):
            x[j] = v
            if state.assign(j, v):
                search_main(j + 1)
            state.unassign(j, v)
            x[j] = 0

    search_main(0)
    return found


def recourse_points(problem: DdidProblem, cap: int = 4096) -> list:
    """Cached :func:`enumerate_recourse` for a problem."""
    key = ("Y", cap)
    if key not in problem._cache:
        problem._cache[key] = enumerate_recourse(problem.recourse, cap)
    return problem._cache[key]


# ---------------------------------------------------------------------------
# Brute-force Phi (oracle)
# ---------------------------------------------------------------------------

def policy_lp(problem: DdidProblem, w: Sequence[int], policies: Sequence[Sequence[int]]):
    """Solve ``max tau`` over ``xibar in Xi``, ``xi(y) in Xi(w, xibar)``,
    ``tau <= xi(y)'(Cw + Py)`` for each listed policy, directly with scipy.

    Returns ``(value, certificate)``.
    """
    w = np.asarray(w, dtype=int)
    xi = problem.xi_set
    n, L, m = xi.dim, xi.n_rows, len(policies)
    if m == 0:
        raise ValueError("need at least one policy")
    nv = 1 + n * (m + 1)
    c = np.zeros(nv)
    c[0] = -1.0
    A_ub, b_ub, A_eq = [], [], []
    for blk in range(m + 1):
        off = 1 + blk * n
        for l in range(L):
            row = np.zeros(nv)
            row[off:off + n] = xi.A[l]
            A_ub.append(row)
            b_ub.append(xi.b[l])
    for k, y in enumerate(policies):
        off = 1 + (k + 1) * n
        d = problem.cost_vector(w, y)
        row = np.zeros(nv)
        row[0] = 1.0
        row[off:off + n] = -d
        A_ub.append(row)
        b_ub.append(0.0)
        for i in np.flatnonzero(w):
            row = np.zeros(nv)
            row[off + i] = 1.0
            row[1 + i] = -1.0
            A_eq.append(row)
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub),
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=np.zeros(len(A_eq)) if A_eq else None,
                  bounds=[(None, None)] * nv, method="highs")
    if res.status == 2:
        raise ValueError("uncertainty set is empty")
    if res.status != 0:
        raise RuntimeError(f"policy LP failed: {res.message}")
    z = res.x
    cert = WorstCaseCertificate(
        xi_bar=z[1:1 + n].copy(),
        xi_per_policy={tuple(int(v) for v in y): z[1 + (k + 1) * n:1 + (k + 2) * n].copy()
                       for k, y in enumerate(policies)},
        value=float(-res.fun),
    )
    return float(-res.fun), cert


def brute_force_phi(problem: DdidProblem, w: Sequence[int], cap: int = 4096,
                    policies: Optional[Iterable] = None):
    """Exact ``Phi(w)`` (min convention) over the fully enumerated recourse set."""
    pol = list(policies) if policies is not None else recourse_points(problem, cap)
    return policy_lp(problem, w, pol)
