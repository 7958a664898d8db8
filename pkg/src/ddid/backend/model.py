"""Solver-neutral MILP intermediate representation."""
from __future__ import annotations

import copy as _copy
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

CONTINUOUS = "continuous"
BINARY = "binary"
INF = math.inf

STATUSES = ("optimal", "feasible-at-limit", "infeasible", "unbounded", "error")


class ModelError(ValueError):
    pass


@dataclass
class Variable:
    name: str
    kind: str = CONTINUOUS
    lo: float = 0.0
    hi: float = INF


@dataclass
class Constraint:
    name: str
    coeffs: dict
    sense: str
    rhs: float


@dataclass
class Objective:
    sense: str = "min"
    coeffs: dict = field(default_factory=dict)
    constant: float = 0.0


@dataclass
class SolveParams:
    time_limit: float = 7200.0
    mip_gap: float = 1e-6
    threads: int = 1
    keep_files: bool = False


@dataclass
class MilpSolution:
    status: str
    objective: float = math.nan
    best_bound: float = math.nan
    values: dict = field(default_factory=dict)
    wall_time: float = 0.0
    nodes: Optional[int] = None
    iterations: Optional[int] = None
    message: str = ""
    history: list = field(default_factory=list)

    @property
    def has_values(self) -> bool:
        return self.status in ("optimal", "feasible-at-limit")

    def __getitem__(self, name: str) -> float:
        return self.values.get(name, 0.0)


class MilpModel:
    """Mutable builder; treat as frozen while a solve is running."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: dict = {}
        self.constraints: list = []
        self._con_names: set = set()
        self.objective = Objective()

    # -- building -----------------------------------------------------------

    def add_var(self, name: str, kind: str = CONTINUOUS, lo: float = 0.0, hi: float = INF) -> str:
        if name in self.variables:
            raise ModelError(f"duplicate variable {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lo, hi = max(0.0, lo), min(1.0, hi)
        if lo > hi:
            raise ModelError(f"variable {name!r} has lo > hi")
        self.variables[name] = Variable(name, kind, float(lo), float(hi))
        return name

    def add_constraint(self, coeffs: Mapping[str, float], sense: str, rhs: float,
                       name: Optional[str] = None) -> str:
        if sense not in ("<=", ">=", "="):
            raise ModelError(f"unknown sense {sense!r}")
        if name is None:
            name = f"c{len(self.constraints)}"
            while name in self._con_names:
                name += "_"
        if name in self._con_names:
            raise ModelError(f"duplicate constraint {name!r}")
        merged: dict = {}
        for v, c in coeffs.items():
            if v not in self.variables:
                raise ModelError(f"constraint {name!r} references undeclared variable {v!r}")
            if c != 0.0:
                merged[v] = merged.get(v, 0.0) + float(c)
        self.constraints.append(Constraint(name, merged, sense, float(rhs)))
        self._con_names.add(name)
        return name

    def set_objective(self, coeffs: Mapping[str, float], sense: str = "min", constant: float = 0.0):
        if sense not in ("min", "max"):
            raise ModelError("objective sense must be 'min' or 'max'")
        for v in coeffs:
            if v not in self.variables:
                raise ModelError(f"objective references undeclared variable {v!r}")
        self.objective = Objective(sense, {v: float(c) for v, c in coeffs.items() if c != 0.0},
                                   float(constant))

    def fix(self, name: str, value: float) -> None:
        v = self.variables[name]
        v.lo = v.hi = float(value)

    # -- queries ------------------------------------------------------------

    @property
    def is_mip(self) -> bool:
        return any(v.kind == BINARY and v.lo < v.hi for v in self.variables.values())

    def validate(self) -> None:
        for v in self.variables.values():
            if v.lo > v.hi:
                raise ModelError(f"variable {v.name!r} has lo > hi")
            if v.kind == BINARY and (v.lo < 0 or v.hi > 1):
                raise ModelError(f"binary {v.name!r} has bounds outside [0, 1]")
        for c in self.constraints:
            for n in c.coeffs:
                if n not in self.variables:
                    raise ModelError(f"constraint {c.name!r} references undeclared variable {n!r}")
            if not math.isfinite(c.rhs):
                raise ModelError(f"constraint {c.name!r} has non-finite rhs")

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        m.variables = {k: _copy.copy(v) for k, v in self.variables.items()}
        m.constraints = [Constraint(c.name, dict(c.coeffs), c.sense, c.rhs) for c in self.constraints]
        m._con_names = set(self._con_names)
        m.objective = Objective(self.objective.sense, dict(self.objective.coeffs),
                                self.objective.constant)
        return m

    def relaxed(self) -> "MilpModel":
        """Continuous relaxation (binaries become [lo, hi] continuous)."""
        m = self.copy()
        for v in m.variables.values():
            v.kind = CONTINUOUS
        return m

    def evaluate(self, values: Mapping[str, float]) -> float:
        o = self.objective
        return o.constant + sum(c * values.get(v, 0.0) for v, c in o.coeffs.items())

    def violations(self, values: Mapping[str, float], tol: float = 1e-6) -> list:
        """Names of violated constraints / bounds / integrality at ``values``."""
        out = []
        for v in self.variables.values():
            x = values.get(v.name, 0.0)
            if x < v.lo - tol or x > v.hi + tol:
                out.append(f"bound:{v.name}")
            if v.kind == BINARY and abs(x - round(x)) > tol:
                out.append(f"integrality:{v.name}")
        for c in self.constraints:
            lhs = sum(a * values.get(n, 0.0) for n, a in c.coeffs.items())
            scale = max(1.0, abs(c.rhs))
            if c.sense == "<=" and lhs > c.rhs + tol * scale:
                out.append(c.name)
            elif c.sense == ">=" and lhs < c.rhs - tol * scale:
                out.append(c.name)
            elif c.sense == "=" and abs(lhs - c.rhs) > tol * scale:
                out.append(c.name)
        return out

    def __repr__(self) -> str:
        nb = sum(v.kind == BINARY for v in self.variables.values())
        return (f"MilpModel({self.name!r}, vars={len(self.variables)} ({nb} binary), "
                f"rows={len(self.constraints)})")
