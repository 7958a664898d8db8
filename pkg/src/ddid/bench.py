"""Experiment sweeps over instances, methods, K and observation budgets.

A sweep is described by a flat key-value config (INI section ``[bench]`` or a
JSON object with the same keys)::

    [bench]
    instances = example1, random:7:3, sp:20:1, file:inst.txt
    methods = exact, kadapt, kadapt-plain
    K = 1, 2, 3
    delta = 0.25, 0.5          ; or: budget = 0, 1, 3
    T = 3.5                    ; default: the instance's own T list
    time_limit = 120
    workers = 2
    engine = cbc
    xi = xi1

Instance specs: ``example1``, ``random:<nodes>:<seed>[:<U>]`` (orienteering),
``sp:<N>:<seed>[:<B>]`` (shortest path, all coordinates observed) and
``file:<path>`` (orienteering text or JSON file), ``spfile:<path>``
(shortest-path JSON as written by ``ddid gen-sp``); a bare existing path is
sniffed.

Objectives are reported in each problem's own sense; gaps are always
computed on the internal minimisation, so they are non-negative.
"""
from __future__ import annotations

import configparser
import csv
import io
import itertools
import json
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .backend.engines import get_engine
from .backend.model import SolveParams
from .exact import ExactParams, solve_exact
from .kadapt import KadaptOptions, solve_kadapt
from .problems import orienteering as orient
from .problems import shortest_path as sp

logger = logging.getLogger(__name__)

CSV_SCHEMA = 1
GAP_TOL = 1e-6
METHODS = ("exact", "kadapt", "kadapt-plain")
INF_GAP = math.inf


def compute_gap(conservative: float, progressive: float, tol: float = GAP_TOL) -> float:
    """``(conservative - progressive) / |progressive|``, guarded at zero."""
    if not math.isfinite(progressive):
        raise ValueError("progressive bound must be finite")
    if not math.isfinite(conservative):
        return INF_GAP
    if abs(progressive) <= tol:
        if abs(conservative) <= tol:
            return 0.0
        warnings.warn(f"progressive bound is zero and conservative is {conservative}; gap undefined",
                      RuntimeWarning, stacklevel=2)
        return INF_GAP
    return (conservative - progressive) / abs(progressive)


@dataclass
class RunRecord:
    instance: str
    method: str
    K: Optional[int]
    delta: Optional[float]
    budget: Optional[int]
    T: Optional[float]
    status: str = "pending"
    objective: float = math.nan
    bound: float = math.nan
    gap: float = math.nan
    iterations: int = 0
    cuts_added: int = 0
    wall_time_s: float = 0.0
    seed: Optional[int] = None
    error: str = ""

    def row(self) -> dict:
        d = asdict(self)
        d["schema"] = CSV_SCHEMA
        return d


CSV_COLUMNS = ["schema"] + [f.name for f in fields(RunRecord)]


@dataclass
class BenchConfig:
    instances: list = field(default_factory=list)
    methods: list = field(default_factory=lambda: ["exact"])
    K: list = field(default_factory=lambda: [2])
    delta: list = field(default_factory=list)
    budget: list = field(default_factory=list)
    T: list = field(default_factory=list)
    time_limit: float = 120.0
    workers: int = 1
    engine: Optional[str] = None
    xi: str = "xi1"

    def __post_init__(self):
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown method(s) {sorted(bad)}")
        if self.delta and self.budget:
            raise ValueError("give either delta or budget, not both")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @classmethod
    def from_mapping(cls, d: dict) -> "BenchConfig":
        def lst(key, conv):
            v = d.get(key)
            if v is None or v == "":
                return []
            if isinstance(v, str):
                v = [s for s in (p.strip() for p in v.split(",")) if s]
            elif not isinstance(v, (list, tuple)):
                v = [v]
            return [conv(x) for x in v]

        kw = {"instances": lst("instances", str), "methods": lst("methods", str) or ["exact"],
              "K": lst("K", int) or [2], "delta": lst("delta", float),
              "budget": lst("budget", int), "T": lst("T", float)}
        if "time_limit" in d:
            kw["time_limit"] = float(d["time_limit"])
        if "workers" in d:
            kw["workers"] = int(d["workers"])
        if d.get("engine"):
            kw["engine"] = str(d["engine"])
        if d.get("xi"):
            kw["xi"] = str(d["xi"])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        text = Path(path).read_text()
        if text.lstrip().startswith("{"):
            return cls.from_mapping(json.loads(text))
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        cp.read_string(text)
        if "bench" not in cp:
            raise ValueError("config needs a [bench] section")
        return cls.from_mapping(dict(cp["bench"]))


# -- instances ---------------------------------------------------------------

@dataclass
class _Source:
    label: str
    kind: str  # "orienteering" or "sp"
    orienteering: Optional[orient.OrienteeringInstance] = None
    sp: Optional[sp.ShortestPathInstance] = None
    seed: Optional[int] = None


def load_source(spec: str) -> _Source:
    head, _, rest = spec.partition(":")
    parts = rest.split(":") if rest else []
    if head == "example1":
        return _Source("example1", "orienteering", orient.example1_instance())
    if head == "random":
        n, seed = int(parts[0]), int(parts[1])
        U = float(parts[2]) if len(parts) > 2 else 0.3
        return _Source(spec, "orienteering", orient.random_instance(n, seed, U=U), seed=seed)
    if head == "sp":
        N, seed = int(parts[0]), int(parts[1])
        B = float(parts[2]) if len(parts) > 2 else 3.0
        return _Source(spec, "sp", sp=sp.generate_shortest_path_instance(N, seed, B=B), seed=seed)
    if head == "file":
        inst = orient.load_instance(rest)
        return _Source(inst.name, "orienteering", inst)
    if head == "spfile":
        inst = sp.ShortestPathInstance.from_json(json.loads(Path(rest).read_text()))
        return _Source(inst.name, "sp", sp=inst, seed=inst.seed)
    if Path(spec).is_file():
        return load_source(("spfile:" if _is_sp_file(spec) else "file:") + spec)
    raise ValueError(f"unrecognised instance spec {spec!r}")


def _is_sp_file(path: str) -> bool:
    try:
        return "arcs" in json.loads(Path(path).read_text())
    except (ValueError, TypeError):
        return False


def build_problem(src: _Source, T=None, delta=None, budget=None, xi: str = "xi1"):
    return _build(src, T, delta, budget, xi)


def _build(src: _Source, T, delta, budget, xi):
    if src.kind == "sp":
        return sp.sp_to_kadapt(src.sp)
    return orient.orienteering_to_ddid(src.orienteering, T, delta=delta, budget=budget, xi_choice=xi)


def _tasks(cfg: BenchConfig, sources: list) -> list:
    out = []
    for src in sources:
        if src.kind == "sp":
            settings = [(None, None, None)]
        else:
            Ts = cfg.T or list(src.orienteering.T_list)
            if not Ts:
                raise ValueError(f"instance {src.label} has no T values and none were configured")
            if cfg.budget:
                obs = [(None, b) for b in cfg.budget]
            else:
                obs = [(d, None) for d in (cfg.delta or [1.0])]
            settings = [(T, d, b) for T in Ts for d, b in obs]
        for (T, d, b), method in itertools.product(settings, cfg.methods):
            Ks = [None] if method == "exact" else cfg.K
            for K in Ks:
                out.append((src, method, K, d, b, T))
    return out


# -- single run --------------------------------------------------------------

def _run(task, cfg: BenchConfig) -> RunRecord:
    src, method, K, delta, budget, T = task
    rec = RunRecord(src.label, method, K, delta, budget, T, seed=src.seed)
    t0 = time.perf_counter()
    try:
        problem = _build(src, T, delta, budget, cfg.xi)
        if rec.budget is None and src.kind == "orienteering":
            rec.budget = int(problem.w_set[0].rhs)
        engine = get_engine(cfg.engine)
        if method == "exact":
            res = solve_exact(problem, ExactParams(time_limit=cfg.time_limit), engine)
            ub, lb = res.value, res.state.lb
            rec.iterations = res.state.iterations
            rec.cuts_added = len(res.state.cuts)
            rec.status = "optimal" if res.status == "optimal" else (
                "feasible-at-limit" if math.isfinite(ub) else "no-solution")
        else:
            fix = sp.full_observation(problem) if src.kind == "sp" else None
            opts = (KadaptOptions(K=K, fix_w=fix) if method == "kadapt"
                    else KadaptOptions.plain(K, fix_w=fix))
            sol = solve_kadapt(problem, opts, SolveParams(time_limit=cfg.time_limit), engine)
            ub, lb = sol.objective, sol.bound
            rec.cuts_added = sol.cuts_added
            rec.status = sol.status
        rec.objective = problem.report(ub) if math.isfinite(ub) else math.nan
        rec.bound = problem.report(lb) if math.isfinite(lb) else math.nan
        if math.isfinite(ub) and math.isfinite(lb):
            rec.gap = 0.0 if rec.status == "optimal" else max(compute_gap(ub, lb), 0.0)
    except Exception as exc:  # one failed run must not stop the sweep
        logger.exception("run %s/%s failed", src.label, method)
        rec.status = "error"
        rec.error = f"{type(exc).__name__}: {exc}"
    rec.wall_time_s = time.perf_counter() - t0
    return rec


def run_experiment(cfg: BenchConfig) -> list:
    """All runs of the sweep, in deterministic task order."""
    if not cfg.instances:
        return []
    sources = [load_source(s) for s in cfg.instances]
    tasks = _tasks(cfg, sources)
    if cfg.workers == 1:
        return [_run(t, cfg) for t in tasks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda t: _run(t, cfg), tasks))


# -- reporting ---------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def to_csv(records: list, with_time: bool = True) -> str:
    cols = CSV_COLUMNS if with_time else [c for c in CSV_COLUMNS if c != "wall_time_s"]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    for r in records:
        row = r.row()
        wr.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def to_json(records: list) -> str:
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v
    return json.dumps([{k: clean(v) for k, v in r.row().items()} for r in records], indent=2)


def aggregate(records: list) -> list:
    """Per (instance, delta/budget, method, K): solved count, mean time, mean gap."""
    groups: dict = {}
    for r in records:
        key = (r.instance, r.delta, r.budget, r.method, r.K)
        groups.setdefault(key, []).append(r)
    rows = []
    for (inst, delta, budget, method, K), rs in groups.items():
        gaps = [r.gap for r in rs if math.isfinite(r.gap)]
        rows.append({"instance": inst, "delta": delta, "budget": budget, "method": method, "K": K,
                     "runs": len(rs), "opt": sum(r.status == "optimal" for r in rs),
                     "time": sum(r.wall_time_s for r in rs) / len(rs),
                     "gap": sum(gaps) / len(gaps) if gaps else math.nan})
    return rows


def to_markdown(records: list) -> str:
    lines = ["| Instance | delta | B | Method | K | Opt (#) | Time (s) | Gap |",
             "|---|---|---|---|---|---|---|---|"]
    for a in aggregate(records):
        gap = "" if math.isnan(a["gap"]) else ("inf" if math.isinf(a["gap"]) else f"{100 * a['gap']:.2f}%")
        lines.append(f"| {a['instance']} | {_fmt(a['delta'])} | {_fmt(a['budget'])} | {a['method']} "
                     f"| {_fmt(a['K'])} | {a['opt']}/{a['runs']} | {a['time']:.2f} | {gap} |")
    return "\n".join(lines) + "\n"


def delta_series(records: list) -> dict:
    """``{(instance, T, method, K): [(delta or budget, objective), ...]}`` sorted by x."""
    out: dict = {}
    for r in records:
        x = r.delta if r.delta is not None else r.budget
        if x is None or r.status == "error":
            continue
        out.setdefault((r.instance, r.T, r.method, r.K), []).append((x, r.objective))
    return {k: sorted(v) for k, v in out.items()}


def series_csv(records: list) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["instance", "T", "method", "K", "x", "objective"])
    for (inst, T, method, K), pts in delta_series(records).items():
        for x, obj in pts:
            wr.writerow([inst, _fmt(T), method, _fmt(K), _fmt(x), _fmt(obj)])
    return buf.getvalue()


def render(records: list, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(records)
    if fmt == "json":
        return to_json(records)
    if fmt == "md":
        return to_markdown(records)
    if fmt == "series":
        return series_csv(records)
    raise ValueError(f"unknown output format {fmt!r}")
