"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (shown with
``-s``); the conftest also lists the verdicts in the terminal summary.
Heavier criteria run on ``DDID_TEST_ENGINE`` (default: the in-process engine).
"""
import itertools
import math
import time
from math import comb

import numpy as np
import pytest

from ddid.backend import get_engine
from ddid.bench import BenchConfig, delta_series, run_experiment
from ddid.ccg import evaluate_phi
from ddid.core import brute_force_phi, recourse_points
from ddid.exact import (hamming_distance, information_cut, information_distance,
                        integer_optimality_cut, lower_bound_phi, solve_exact)
from ddid.exact import InvalidCutError
from ddid.kadapt import (KadaptOptions, evaluate_policies, lp_relaxation_bound, solve_kadapt)
from ddid.problems.orienteering import example1, orienteering_to_ddid, random_instance
from ddid.problems.shortest_path import (full_observation, generate_shortest_path_instance,
                                         sp_to_kadapt)

TOL = 1e-6


def report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


# -- shared instance sets ----------------------------------------------------

def oracle_instances():
    """50 seeded orienteering instances (6-8 nodes, U in {0.2, 0.3}, two T each)."""
    out = []
    for k in range(50):
        n = 6 + k % 3
        U = (0.2, 0.3)[(k // 3) % 2]
        out.append(random_instance(n, seed=1000 + k, U=U, n_T=2))
    return out


def small_budget(n_w, cap=64):
    """Largest budget up to ceil(n/2) whose observation set has at most ``cap`` points."""
    best = 0
    for b in range(int(math.ceil(n_w / 2)) + 1):
        if sum(comb(n_w, j) for j in range(b + 1)) <= cap:
            best = b
    return best


# -- 1 -----------------------------------------------------------------------

EX1_EXACT = {0: 0.0, 1: 0.5, 2: 0.5, 3: 0.5}
EX1_PHI = {(1, 1, 1): 0.5, (0, 1, 0): 0.0, (1, 0, 0): 0.5, (0, 0, 0): 0.0}


@pytest.mark.parametrize("engine_name", ["cbc", "highs"])
def test_criterion_1_example1_goldens(engine_name):
    eng = get_engine(engine_name)
    t0 = time.perf_counter()
    bad = []
    for B, want in EX1_EXACT.items():
        p = example1(B)
        got = p.report(solve_exact(p, engine=eng).value)
        if abs(got - want) > TOL:
            bad.append(("exact", B, got))
    p = example1(3)
    for w, want in EX1_PHI.items():
        got = p.report(evaluate_phi(p, w, engine=eng)[0])
        oracle = p.report(brute_force_phi(p, w)[0])
        if abs(got - want) > TOL or abs(oracle - want) > TOL:
            bad.append(("phi", w, got, oracle))
    dt = time.perf_counter() - t0
    report(1, not bad and dt < 10.0, f"[{engine_name}] {dt:.2f}s mismatches={bad}")


# -- 2 -----------------------------------------------------------------------

@pytest.mark.parametrize("engine_name", ["cbc", "highs"])
def test_criterion_2_kadapt_goldens(engine_name):
    eng = get_engine(engine_name)
    p = example1(1)
    assert len(recourse_points(p)) == 6
    got = {K: p.report(solve_kadapt(p, KadaptOptions(K=K), engine=eng).objective) for K in (1, 2, 6)}
    want = {1: 0.0, 2: 0.5, 6: 0.5}
    ok = all(abs(got[K] - want[K]) <= TOL for K in want)
    report(2, ok, f"[{engine_name}] objectives={got}")


# -- 3 -----------------------------------------------------------------------

def test_criterion_3_ccg_matches_brute_force(heavy_engine):
    t0 = time.perf_counter()
    worst, over_iter, n_checks = 0.0, [], 0
    for inst in oracle_instances():
        rng = np.random.default_rng(abs(hash(inst.name)) % (2 ** 32))
        for T in inst.T_list:
            p = orienteering_to_ddid(inst, T, delta=1.0)
            n_y = len(recourse_points(p))
            for _ in range(8):
                w = tuple(int(v) for v in rng.integers(0, 2, p.n_w))
                val, state = evaluate_phi(p, w, engine=heavy_engine)
                ref = brute_force_phi(p, w)[0]
                worst = max(worst, abs(val - ref))
                if state.iterations > n_y:
                    over_iter.append((inst.name, T, w, state.iterations, n_y))
                n_checks += 1
    dt = time.perf_counter() - t0
    ok = worst <= TOL and not over_iter and dt < 600
    report(3, ok, f"{n_checks} evaluations, max |diff|={worst:.2e}, "
                  f"iteration-bound violations={over_iter}, {dt:.1f}s")


# -- 4 -----------------------------------------------------------------------

def test_criterion_4_exact_matches_enumeration(heavy_engine):
    t0 = time.perf_counter()
    worst, over_iter, n = 0.0, [], 0
    for inst in oracle_instances():
        for T in inst.T_list:
            n_w = len(inst.customers)
            p = orienteering_to_ddid(inst, T, budget=small_budget(n_w))
            W = p.enumerate_w()
            assert len(W) <= 64
            ref = min(brute_force_phi(p, w)[0] for w in W)
            res = solve_exact(p, engine=heavy_engine)
            worst = max(worst, abs(res.value - ref))
            if res.state.iterations > len(W):
                over_iter.append((inst.name, T, res.state.iterations, len(W)))
            n += 1
    dt = time.perf_counter() - t0
    report(4, worst <= TOL and not over_iter,
           f"{n} problems, max |diff|={worst:.2e}, iteration-bound violations={over_iter}, {dt:.1f}s")


# -- 5 and 9 -----------------------------------------------------------------

def neutrality_cases():
    cases = []
    for seed in range(5):
        inst = random_instance(8, seed=2000 + seed, U=0.3)
        p = orienteering_to_ddid(inst, inst.T_list[1], delta=0.5)
        for K in (2, 3):
            cases.append((f"or8_{seed}_K{K}", p, K, None))
    for N, seeds in ((10, range(3)), (15, range(2))):
        for seed in seeds:
            p = sp_to_kadapt(generate_shortest_path_instance(N, seed))
            for K in (2, 3):
                cases.append((f"sp{N}_{seed}_K{K}", p, K, full_observation(p)))
    assert len(cases) == 20
    return cases


@pytest.fixture(scope="module")
def neutrality_runs(heavy_engine):
    runs = []
    for name, p, K, fix in neutrality_cases():
        strong = solve_kadapt(p, KadaptOptions(K=K, fix_w=fix), engine=heavy_engine)
        plain = solve_kadapt(p, KadaptOptions.plain(K, fix_w=fix), engine=heavy_engine)
        lp_s = lp_relaxation_bound(p, KadaptOptions(K=K, fix_w=fix), heavy_engine)
        lp_p = lp_relaxation_bound(p, KadaptOptions.plain(K, fix_w=fix), heavy_engine)
        runs.append((name, p, K, fix, strong, plain, lp_s, lp_p))
    return runs


def test_criterion_5_strengthening_neutrality(neutrality_runs):
    bad_obj, bad_bound, worst = [], [], 0.0
    for name, _, _, _, strong, plain, lp_s, lp_p in neutrality_runs:
        assert strong.status == "optimal" and plain.status == "optimal", name
        d = abs(strong.objective - plain.objective)
        worst = max(worst, d)
        if d > TOL:
            bad_obj.append((name, strong.objective, plain.objective))
        if lp_s < lp_p - 1e-9:
            bad_bound.append((name, lp_s, lp_p))
    report(5, not bad_obj and not bad_bound,
           f"{len(neutrality_runs)} cases, max |strong-plain|={worst:.2e}, "
           f"objective mismatches={bad_obj}, bound violations={bad_bound}")


def test_criterion_9_big_m_audit(neutrality_runs, heavy_engine):
    bad, worst = [], 0.0
    for name, p, K, fix, strong, _, _, _ in neutrality_runs:
        big = solve_kadapt(p, KadaptOptions(K=K, fix_w=fix, big_M=10 * strong.big_M),
                           engine=heavy_engine)
        d = abs(big.objective - strong.objective)
        worst = max(worst, d)
        if not d < TOL:
            bad.append((name, strong.objective, big.objective))
    report(9, not bad, f"{len(neutrality_runs)} cases, max change={worst:.2e}, failures={bad}")


# -- 6 -----------------------------------------------------------------------

def test_criterion_6_cut_properties():
    problems = [example1(3)]
    for seed in range(3):
        inst = random_instance(6, seed=3000 + seed)
        problems.append(orienteering_to_ddid(inst, inst.T_list[1], delta=1.0))
    n_checked, bad = 0, []
    for p in problems:
        phi = {tuple(w): brute_force_phi(p, w)[0] for w in p.enumerate_w()}
        low = lower_bound_phi(p)
        for wp, v in phi.items():
            for cut in (integer_optimality_cut(wp, v, low), information_cut(wp, v, low, problem=p)):
                if abs(cut.rhs(wp) - v) > TOL:
                    bad.append(("tight", cut.kind, wp))
                for w, u in phi.items():
                    n_checked += 1
                    if cut.rhs(w) > u + TOL:
                        bad.append(("valid", cut.kind, wp, w))
    rng = np.random.default_rng(6)
    n_frac = 0
    for _ in range(1000):
        n = int(rng.integers(2, 10))
        wp = rng.integers(0, 2, n)
        w = rng.random(n)
        if information_distance(wp, w) > hamming_distance(wp, w) + 1e-12:
            bad.append(("dominance", wp.tolist(), w.tolist()))
        n_frac += 1
    refused = False
    try:
        information_cut((1, 0), -0.5, -1.0, deterministic=False)
    except InvalidCutError:
        refused = True
    report(6, not bad and refused,
           f"{n_checked} cut/point checks, {n_frac} fractional points, refusal={refused}, failures={bad[:5]}")


# -- 7 -----------------------------------------------------------------------

def test_criterion_7_monotonicity(heavy_engine):
    bad = []
    # Phi along chains of growing observation sets
    problems = [example1(3)] + [orienteering_to_ddid(i, i.T_list[1], delta=1.0)
                                for i in (random_instance(7, seed=4000 + s) for s in range(4))]
    rng = np.random.default_rng(7)
    n_chain = 0
    for p in problems:
        for _ in range(3):
            order = rng.permutation(p.n_w)
            w = np.zeros(p.n_w, dtype=int)
            prev = evaluate_phi(p, w, engine=heavy_engine)[0]
            for i in order:
                w[i] = 1
                cur = evaluate_phi(p, w, engine=heavy_engine)[0]
                n_chain += 1
                if cur > prev + TOL:
                    bad.append(("chain", p.name, w.tolist(), prev, cur))
                prev = cur
    # K-adaptability objective non-increasing in K
    for s in range(3):
        inst = random_instance(7, seed=4100 + s)
        p = orienteering_to_ddid(inst, inst.T_list[1], delta=0.5)
        vals = [solve_kadapt(p, KadaptOptions(K=K), engine=heavy_engine).objective for K in (1, 2, 3)]
        if any(b > a + TOL for a, b in zip(vals, vals[1:])):
            bad.append(("K", p.name, vals))
    # exact objective non-decreasing in delta (max convention)
    cfg = BenchConfig(instances=["example1", "random:7:4200", "random:7:4201"], methods=["exact"],
                      delta=[0.0, 0.25, 0.5, 0.75, 1.0], engine=heavy_engine.name)
    recs = run_experiment(cfg)
    assert all(r.status == "optimal" for r in recs)
    for key, pts in delta_series(recs).items():
        ys = [y for _, y in pts]
        if any(b < a - TOL for a, b in zip(ys, ys[1:])):
            bad.append(("delta", key, pts))
    report(7, not bad, f"{n_chain} chain steps, failures={bad}")


# -- 8 -----------------------------------------------------------------------

def test_criterion_8_shortest_path_smoke(heavy_engine):
    inst = generate_shortest_path_instance(20, 0, B=3.0)
    p = sp_to_kadapt(inst)
    t0 = time.perf_counter()
    sol = solve_kadapt(p, KadaptOptions(K=2, fix_w=full_observation(p)), engine=heavy_engine)
    dt = time.perf_counter() - t0
    audit = evaluate_policies(p, full_observation(p), sol.policies, heavy_engine)
    ok = sol.status == "optimal" and dt < 120 and abs(audit - sol.objective) <= TOL
    report(8, ok, f"status={sol.status}, objective={sol.objective:.6f}, audit={audit:.6f}, {dt:.1f}s")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
