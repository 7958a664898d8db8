"""MILP engines.

``CbcEngine`` drives the CBC binary as a subprocess on an emitted LP file.
``HighsEngine`` is the in-process alternative (HiGHS through scipy) with the
same contract. :func:`get_engine` picks one by name, by the ``DDID_ENGINE``
environment variable, or defaults to CBC.

Engine configuration file (INI, path from ``DDID_CONFIG`` or
``~/.config/ddid/config.ini``)::

    [cbc]
    path = /opt/cbc/bin/cbc
    extra_flags = -cuts off

    [engine]
    default = cbc
"""
from __future__ import annotations

import configparser
import logging
import math
import os
import re
import shlex
import shutil
import struct
import subprocess
import tempfile
import time
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from .lpformat import emit_model_file, parse_solution_file
from .model import BINARY, MilpModel, MilpSolution, SolveParams

logger = logging.getLogger(__name__)


class EngineNotFoundError(RuntimeError):
    pass


class SolutionParseError(RuntimeError):
    pass


def load_config() -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    path = os.environ.get("DDID_CONFIG") or os.path.expanduser("~/.config/ddid/config.ini")
    if os.path.exists(path):
        cfg.read(path)
    return cfg


def _finalize(model: MilpModel, sol: MilpSolution, params: SolveParams) -> MilpSolution:
    """Recompute the objective from values, add the constant, check feasibility."""
    if sol.has_values:
        for v in model.variables.values():
            if v.kind == BINARY and v.name in sol.values:
                sol.values[v.name] = float(round(sol.values[v.name]))
        sol.objective = model.evaluate(sol.values)
        bad = model.violations(sol.values, tol=1e-5)
        if bad:
            if sol.status == "feasible-at-limit":
                sol.status = "error"
                sol.message = "no feasible incumbent at limit"
                sol.objective = math.nan
            else:
                logger.warning("engine solution violates %d row(s), e.g. %s", len(bad), bad[:3])
        if sol.status == "optimal":
            sol.best_bound = sol.objective
    return sol


def _overlay_binary(sol: MilpSolution, blob: bytes) -> None:
    """Replace the 8-digit text values with the full-precision binary dump.

    Layout: int32 rows, int32 cols, float64 objective, row activities, row
    duals, column values, reduced costs. Column order matches the text file.
    """
    if len(blob) < 16:
        return
    nr, nc = struct.unpack("<ii", blob[:8])
    if len(blob) != 16 + 8 * (2 * nr + 2 * nc) or nc != len(sol.values):
        logger.warning("binary solution layout mismatch; keeping 8-digit text values")
        return
    cols = struct.unpack(f"<{nc}d", blob[16 + 16 * nr:16 + 16 * nr + 8 * nc])
    for name, v in zip(list(sol.values), cols):
        sol.values[name] = v


class CbcEngine:
    name = "cbc"

    def __init__(self, path: Optional[str] = None, extra_flags: Optional[list] = None,
                 keep_files: bool = False):
        cfg = load_config()
        self.path = path or self.locate(cfg)
        if extra_flags is None:
            extra_flags = shlex.split(cfg.get("cbc", "extra_flags", fallback=""))
        self.extra_flags = list(extra_flags)
        self.keep_files = keep_files

    @staticmethod
    def locate(cfg: Optional[configparser.ConfigParser] = None) -> str:
        cands = [os.environ.get("DDID_CBC")]
        if cfg is not None:
            cands.append(cfg.get("cbc", "path", fallback=None))
        cands.append(shutil.which("cbc"))
        try:
            from pulp.apis import PULP_CBC_CMD

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                cands.append(PULP_CBC_CMD().path)
        except Exception:  # pragma: no cover - pulp missing or broken
            pass
        for c in cands:
            if c and os.path.isfile(c) and os.access(c, os.X_OK):
                return c
        raise EngineNotFoundError("CBC binary not found; set DDID_CBC or install pulp")

    def solve(self, model: MilpModel, params: Optional[SolveParams] = None) -> MilpSolution:
        params = params or SolveParams()
        t0 = time.perf_counter()
        work = model.copy()
        flip = work.objective.sense == "max"
        if flip:
            work.objective.coeffs = {k: -c for k, c in work.objective.coeffs.items()}
            work.objective.sense = "min"
        work.objective.constant = 0.0
        if not work.constraints:
            # CBC mishandles an empty row section; anchor it with a harmless row.
            one = "_anchor"
            while one in work.variables:
                one += "_"
            work.add_var(one, lo=1.0, hi=1.0)
            work.add_constraint({one: 1.0}, "=", 1.0, name=one + "_row")
        keep = self.keep_files or params.keep_files
        tmp = tempfile.mkdtemp(prefix="ddid_cbc_")
        try:
            lp = Path(tmp, "model.lp")
            solf = Path(tmp, "model.sol")
            binf = Path(tmp, "model.bin")
            try:
                lp.write_text(emit_model_file(work))
            except OSError as exc:
                raise RuntimeError(f"model-file write failure: {exc}") from exc
            cmd = [self.path, str(lp), "-sec", repr(float(params.time_limit)),
                   "-ratioGap", repr(float(params.mip_gap)), "-allowableGap", "1e-9",
                   "-threads", str(int(params.threads)), "-printingOptions", "all",
                   *self.extra_flags,
                   "-solve", "-solu", str(solf), "-saveSolution", str(binf)]
            proc = subprocess.run(cmd, capture_output=True, text=True,
                                  timeout=params.time_limit + 60)
            if not solf.exists():
                raise SolutionParseError(f"CBC wrote no solution file:\n{proc.stdout[-2000:]}")
            blob = binf.read_bytes() if binf.exists() else b""
            n_rows = struct.unpack("<i", blob[:4])[0] if len(blob) >= 8 else len(work.constraints)
            try:
                raw = parse_solution_file(solf.read_text(), n_rows=n_rows)
            except ValueError as exc:
                raise SolutionParseError(str(exc)) from exc
            _overlay_binary(raw, blob)
            missing = [n for n in work.variables if n not in raw.values]
            if missing and raw.has_values:
                logger.warning("%d variable(s) missing from CBC output, defaulting to 0",
                               len(missing))
        finally:
            if keep:
                logger.info("kept CBC files in %s", tmp)
            else:
                shutil.rmtree(tmp, ignore_errors=True)
        values = {k: v for k, v in raw.values.items() if k in model.variables}
        sol = MilpSolution(status=raw.status, values=values)
        m = re.search(r"Enumerated nodes:\s+(\d+)", proc.stdout)
        sol.nodes = int(m.group(1)) if m else None
        m = re.search(r"Total iterations:\s+(\d+)", proc.stdout)
        sol.iterations = int(m.group(1)) if m else None
        if sol.status == "feasible-at-limit":
            m = re.search(r"Lower bound:\s+(\S+)", proc.stdout)
            if m:
                lb = float(m.group(1))
                sol.best_bound = (-lb if flip else lb) + model.objective.constant
        if sol.status in ("infeasible", "unbounded", "error"):
            sol.values = {}
        sol.wall_time = time.perf_counter() - t0
        return _finalize(model, sol, params)


class HighsEngine:
    """In-process HiGHS via :func:`scipy.optimize.milp`."""

    name = "highs"

    def solve(self, model: MilpModel, params: Optional[SolveParams] = None) -> MilpSolution:
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import coo_matrix

        params = params or SolveParams()
        t0 = time.perf_counter()
        names = list(model.variables)
        idx = {n: i for i, n in enumerate(names)}
        n = len(names)
        sign = -1.0 if model.objective.sense == "max" else 1.0
        c = np.zeros(n)
        for v, a in model.objective.coeffs.items():
            c[idx[v]] = sign * a
        lo = np.array([model.variables[v].lo for v in names])
        hi = np.array([model.variables[v].hi for v in names])
        integ = np.array([model.variables[v].kind == BINARY for v in names], dtype=int)
        rows, cols, data = [], [], []
        rlo, rhi = [], []
        for r, con in enumerate(model.constraints):
            for v, a in con.coeffs.items():
                rows.append(r)
                cols.append(idx[v])
                data.append(a)
            rlo.append(-np.inf if con.sense == "<=" else con.rhs)
            rhi.append(np.inf if con.sense == ">=" else con.rhs)
        cons = []
        if model.constraints:
            A = coo_matrix((data, (rows, cols)), shape=(len(model.constraints), n)).tocsr()
            cons = [LinearConstraint(A, np.array(rlo), np.array(rhi))]
        opts = {"time_limit": float(params.time_limit), "mip_rel_gap": float(params.mip_gap),
                "disp": False}
        res = milp(c, constraints=cons, integrality=integ, bounds=Bounds(lo, hi), options=opts)
        status = {0: "optimal", 1: "feasible-at-limit", 2: "infeasible", 3: "unbounded"}.get(
            res.status, "error")
        sol = MilpSolution(status=status, message=str(res.message))
        if res.x is not None and status in ("optimal", "feasible-at-limit"):
            sol.values = {v: float(res.x[i]) for i, v in enumerate(names)}
        elif status == "feasible-at-limit":
            sol.status = "error"
        bound = getattr(res, "mip_dual_bound", None)
        if bound is not None and np.isfinite(bound):
            sol.best_bound = sign * bound + model.objective.constant
        sol.nodes = getattr(res, "mip_node_count", None)
        sol.wall_time = time.perf_counter() - t0
        return _finalize(model, sol, params)


_ENGINES = {"cbc": CbcEngine, "highs": HighsEngine}


def get_engine(name: Optional[str] = None, **kw):
    """Engine by name, else ``DDID_ENGINE``, else the config default, else CBC."""
    if name is None:
        name = os.environ.get("DDID_ENGINE") or load_config().get("engine", "default",
                                                                  fallback="cbc")
    name = name.lower()
    if name not in _ENGINES:
        raise EngineNotFoundError(f"unknown engine {name!r}; choose from {sorted(_ENGINES)}")
    return _ENGINES[name](**kw)


def solve(model: MilpModel, params: Optional[SolveParams] = None, engine=None) -> MilpSolution:
    model.validate()
    return (engine or get_engine()).solve(model, params)
