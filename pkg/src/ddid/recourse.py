"""Embedding of a :class:`RecourseSpec` into MILP models, with the lazy-row
separator translated to model variable names."""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .backend.model import BINARY, CONTINUOUS, MilpModel
from .core import DdidProblem, RecourseSpec, Row


def recourse_names(spec: RecourseSpec, prefix: str) -> list:
    main = [f"{prefix}y{j}" for j in range(spec.n_main)]
    aux = [f"{prefix}a{j}" for j in range(spec.n_aux)]
    return main + aux


def add_recourse_block(model: MilpModel, spec: RecourseSpec, prefix: str,
                       kind: str = BINARY, rows: bool = True,
                       extra_rows: Sequence[Row] = ()) -> list:
    """Declare one copy of ``(y, aux)`` and, optionally, its explicit rows."""
    names = recourse_names(spec, prefix)
    for n in names:
        model.add_var(n, kind, 0.0, 1.0)
    if rows:
        for k, r in enumerate(list(spec.explicit_constraints) + list(extra_rows)):
            model.add_constraint(row_coeffs(r, names), r.sense, r.rhs, f"{prefix}Y{k}")
    return names


def row_coeffs(row: Row, names: Sequence[str]) -> dict:
    return {names[j]: c for j, c in row.coeffs.items()}


def block_point(values: dict, names: Sequence[str]) -> np.ndarray:
    return np.rint([values.get(n, 0.0) for n in names]).astype(int)


def known_cuts(problem: DdidProblem) -> list:
    """Lazy rows discovered so far for this problem's recourse set (shared cache)."""
    return problem._cache.setdefault("lazy_rows", [])


def remember_cuts(problem: DdidProblem, rows: Sequence[Row]) -> None:
    store = known_cuts(problem)
    keys = problem._cache.setdefault("lazy_keys", set())
    for r in rows:
        k = r.key()
        if k not in keys:
            keys.add(k)
            store.append(r)


def make_block_separator(spec: RecourseSpec, blocks: Sequence[Sequence[str]],
                         expand: Optional[Callable[[Row], list]] = None,
                         on_rows: Optional[Callable[[list], None]] = None):
    """Model-level separator over one or more recourse blocks.

    Each block is checked independently. By default a violated row is added
    for the offending block only; ``expand`` maps a spec row to the full list
    of ``(coeffs, sense, rhs)`` model rows to add instead (e.g. the row for
    every block plus companions). ``on_rows`` receives the raw spec rows.
    """

    def separate(values: dict) -> list:
        out, seen, raw = [], set(), []
        for names in blocks:
            for r in spec.separate(block_point(values, names)):
                raw.append(r)
                cand = expand(r) if expand else [(row_coeffs(r, names), r.sense, r.rhs)]
                for coeffs, sense, rhs in cand:
                    key = (tuple(sorted(coeffs.items())), sense, rhs)
                    if key not in seen:
                        seen.add(key)
                        out.append((coeffs, sense, rhs))
        if raw and on_rows:
            on_rows(raw)
        return out

    return separate


def violated_only(rows: list, values: dict, tol: float = 1e-6) -> list:
    """Drop rows the current point already satisfies (companions may be slack)."""
    keep = []
    for coeffs, sense, rhs in rows:
        lhs = sum(c * values.get(v, 0.0) for v, c in coeffs.items())
        if (sense == "<=" and lhs > rhs + tol) or (sense == ">=" and lhs < rhs - tol) or (
                sense == "=" and abs(lhs - rhs) > tol):
            keep.append((coeffs, sense, rhs))
    return keep
