"""Command-line entry point (``ddid <verb> ...``)."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import bench
from .backend.engines import get_engine
from .backend.model import SolveParams
from .ccg import evaluate_phi
from .exact import ExactParams, solve_exact
from .kadapt import KadaptOptions, big_m_audit, evaluate_policies, solve_kadapt
from .problems import shortest_path as sp


def _bits(text: str) -> tuple:
    return tuple(int(c) for c in text.replace(",", "").replace(" ", ""))


def _problem(args):
    src = bench.load_source(args.instance)
    T = args.T
    if src.kind == "orienteering" and T is None:
        if not src.orienteering.T_list:
            raise SystemExit("instance has no T values; pass --T")
        T = src.orienteering.T_list[0]
    budget = getattr(args, "budget", None)
    delta = args.delta if budget is None else None
    if src.kind == "orienteering" and delta is None and budget is None:
        delta = 1.0
    return src, bench.build_problem(src, T, delta, budget, args.xi)


def _emit(args, payload: dict) -> None:
    fmt = getattr(args, "out", "json")
    if fmt == "json":
        text = json.dumps(payload, indent=2, default=_json_default)
    else:
        flat = {k: v for k, v in payload.items() if not isinstance(v, (list, dict))}
        if fmt == "csv":
            text = ",".join(flat) + "\n" + ",".join(str(v) for v in flat.values())
        else:
            text = "| " + " | ".join(flat) + " |\n|" + "---|" * len(flat) + "\n| " + " | ".join(
                str(v) for v in flat.values()) + " |"
    if getattr(args, "output", None):
        Path(args.output).write_text(text + "\n")
    else:
        print(text)


def _json_default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer, np.floating)):
        return v.item()
    raise TypeError(type(v).__name__)


def _trace(args):
    return open(args.trace, "w") if getattr(args, "trace", None) else nullcontext(None)


def cmd_solve_exact(args) -> int:
    _, problem = _problem(args)
    cuts = {c.strip() for c in args.cuts.split(",") if c.strip()}
    params = ExactParams(time_limit=args.time_limit, use_information_cuts="info" in cuts,
                         use_optimistic_bound="optimistic" in cuts)
    with _trace(args) as fh:
        res = solve_exact(problem, params, get_engine(args.engine), trace=fh)
    _emit(args, {"instance": problem.name, "status": res.status,
                 "objective": problem.report(res.value),
                 "bound": problem.report(res.state.lb) if math.isfinite(res.state.lb) else None,
                 "w": None if res.w is None else res.w.tolist(),
                 "iterations": res.state.iterations, "master_solves": res.state.master_solves,
                 "cuts": len(res.state.cuts), "wall_time_s": res.wall_time})
    return 0


def cmd_solve_kadapt(args) -> int:
    src, problem = _problem(args)
    fix = sp.full_observation(problem) if src.kind == "sp" else None
    big_m = "auto" if args.big_m is None else args.big_m
    opts = KadaptOptions.from_flags(args.K, args.strengthen, fix_w=fix, big_M=big_m)
    params = SolveParams(time_limit=args.time_limit)
    engine = get_engine(args.engine)
    if args.big_m_audit:
        sol, big = big_m_audit(problem, opts, params, engine)
    else:
        sol, big = solve_kadapt(problem, opts, params, engine), None
    payload = {"instance": problem.name, "status": sol.status, "K": args.K,
               "objective": problem.report(sol.objective) if math.isfinite(sol.objective) else None,
               "solution": sol.to_json()}
    if big is not None:
        payload["big_m_audit_objective"] = problem.report(big.objective)
    _emit(args, payload)
    return 0


def cmd_eval_phi(args) -> int:
    _, problem = _problem(args)
    w = _bits(args.w)
    with _trace(args) as fh:
        val, state = evaluate_phi(problem, w, SolveParams(time_limit=args.time_limit),
                                  engine=get_engine(args.engine), trace=fh)
    _emit(args, {"instance": problem.name, "w": list(w), "value": problem.report(val),
                 "converged": state.converged, "iterations": state.iterations,
                 "policies": [list(y) for y in state.policy_pool]})
    return 0


def cmd_eval_policies(args) -> int:
    _, problem = _problem(args)
    w = _bits(args.w)
    pols = [_bits(p) for p in args.policies.split(";") if p.strip()]
    val = evaluate_policies(problem, w, pols, get_engine(args.engine))
    _emit(args, {"instance": problem.name, "w": list(w), "value": problem.report(val)})
    return 0


def cmd_gen_sp(args) -> int:
    inst = sp.generate_shortest_path_instance(args.N, args.seed, B=args.B, self_arcs=args.self_arcs)
    text = json.dumps(inst.to_json(), indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_bench(args) -> int:
    cfg = bench.BenchConfig.load(args.config) if args.config else bench.BenchConfig()
    if args.instance:
        cfg.instances = list(args.instance)
    if args.workers:
        cfg.workers = args.workers
    if args.time_limit is not None:
        cfg.time_limit = args.time_limit
    if args.engine:
        cfg.engine = args.engine
    records = bench.run_experiment(cfg)
    text = bench.render(records, args.out)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _common(p, instance=True):
    if instance:
        p.add_argument("--instance", required=True,
                       help="example1 | random:<n>:<seed>[:U] | sp:<N>:<seed>[:B] | file:<path> | <path>")
        p.add_argument("--T", type=float, help="duration limit (orienteering)")
        p.add_argument("--delta", type=float, help="observed fraction of profits")
        p.add_argument("--budget", type=int, help="number of observations (overrides --delta)")
        p.add_argument("--xi", default="xi1", choices=["xi1", "xi2"])
    p.add_argument("--engine", choices=["cbc", "highs"], help="default: $DDID_ENGINE or cbc")
    p.add_argument("--time-limit", type=float, default=120.0)
    p.add_argument("--output", help="write to file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddid")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("solve-exact")
    _common(p)
    p.add_argument("--cuts", default="info,optimistic",
                   help="comma list from {info, optimistic}; plain integer cuts otherwise")
    p.add_argument("--trace")
    p.add_argument("--out", choices=["json", "csv", "md"], default="json")
    p.set_defaults(func=cmd_solve_exact)

    p = sub.add_parser("solve-kadapt")
    _common(p)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--strengthen", default="all", help="all | none | symmetry,bounds,optimistic,rlt")
    p.add_argument("--big-m", type=float)
    p.add_argument("--big-m-audit", action="store_true")
    p.add_argument("--out", choices=["json", "csv", "md"], default="json")
    p.set_defaults(func=cmd_solve_kadapt)

    p = sub.add_parser("eval-phi")
    _common(p)
    p.add_argument("--w", required=True, help="observation vector, e.g. 101")
    p.add_argument("--trace")
    p.add_argument("--out", choices=["json", "csv", "md"], default="json")
    p.set_defaults(func=cmd_eval_phi)

    p = sub.add_parser("eval-policies")
    _common(p)
    p.add_argument("--w", required=True)
    p.add_argument("--policies", required=True, help="semicolon list, e.g. 100;011")
    p.add_argument("--out", choices=["json", "csv", "md"], default="json")
    p.set_defaults(func=cmd_eval_policies)

    p = sub.add_parser("gen-sp")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--B", type=float, default=3.0)
    p.add_argument("--self-arcs", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_gen_sp)

    p = sub.add_parser("bench")
    _common(p, instance=False)
    p.set_defaults(time_limit=None)
    p.add_argument("--config", help="INI ([bench] section) or JSON sweep description")
    p.add_argument("--instance", action="append", help="overrides the config instance list")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", choices=["csv", "json", "md", "series"], default="csv")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
