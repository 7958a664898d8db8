import json

import pytest

from ddid.core import Row, brute_force_phi, recourse_points
from ddid.kadapt import (KadaptOptions, alpha_bounds, auto_big_m, big_m_audit,
                         build_strengthened, compute_optimistic_vectors, evaluate_policies,
                         lp_relaxation_bound, rlt_rows, solve_kadapt, symmetry_rows)
from ddid.problems.orienteering import example1, orienteering_to_ddid, random_instance


def test_options_flags():
    assert KadaptOptions.from_flags(2, "none") == KadaptOptions.plain(2)
    o = KadaptOptions.from_flags(3, "symmetry,rlt")
    assert (o.symmetry, o.bounds, o.optimistic, o.rlt) == (True, False, False, True)
    with pytest.raises(ValueError):
        KadaptOptions.from_flags(2, "bogus")
    with pytest.raises(ValueError):
        KadaptOptions(K=0)
    with pytest.raises(ValueError):
        KadaptOptions(K=2, big_M=-1.0)


def test_alpha_bounds():
    lo, hi = alpha_bounds(4)
    assert lo == pytest.approx([0.25, 0, 0, 0])
    assert hi == pytest.approx([1, 1 / 2, 1 / 3, 1 / 4])


def test_symmetry_rows_order_alpha():
    rows = symmetry_rows(3)
    assert len(rows) == 2
    assert rows[0].satisfied([0.5, 0.3, 0.2]) and not rows[1].satisfied([0.5, 0.2, 0.3])


def test_optimistic_vectors_example1():
    p = example1(1)
    zw, zy = compute_optimistic_vectors(p.xi_set, p.C, p.P)
    assert zw == pytest.approx([0, 0, 0])
    assert zy == pytest.approx([-1, -1, -1])


def test_rlt_row_moves_rhs():
    coeffs, sense, rhs = rlt_rows(Row({0: 1.0, 1: 2.0}, "<=", 3.0), 0, ["a", "b"], "al")
    assert coeffs == {"a": 1.0, "b": 2.0, "al": -3.0} and sense == "<=" and rhs == 0.0


def test_auto_big_m_scales_with_k():
    p = example1(1)
    assert auto_big_m(p, 3) == pytest.approx(3 * auto_big_m(p, 1))


@pytest.mark.parametrize("K,expected", [(1, 0.0), (2, 0.5), (3, 0.5)])
def test_example1_goldens(engine, K, expected):
    p = example1(1)
    sol = solve_kadapt(p, KadaptOptions(K=K), engine=engine)
    assert sol.status == "optimal"
    assert p.report(sol.objective) == pytest.approx(expected, abs=1e-6)
    assert sol.linearization_error() <= 1e-6
    assert evaluate_policies(p, sol.w, sol.policies, engine) == pytest.approx(sol.objective, abs=1e-6)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_plain_matches_strengthened(highs, K):
    p = example1(1)
    a = solve_kadapt(p, KadaptOptions(K=K), engine=highs)
    b = solve_kadapt(p, KadaptOptions.plain(K), engine=highs)
    assert a.objective == pytest.approx(b.objective, abs=1e-6)


@pytest.mark.parametrize("block", ["symmetry", "bounds", "optimistic", "rlt"])
def test_single_blocks_preserve_the_optimum(highs, block):
    p = example1(1)
    sol = solve_kadapt(p, KadaptOptions.from_flags(2, block), engine=highs)
    assert p.report(sol.objective) == pytest.approx(0.5, abs=1e-6)


def test_strengthened_root_bound_dominates(highs):
    p = example1(1)
    strong = lp_relaxation_bound(p, KadaptOptions(K=2), highs)
    plain = lp_relaxation_bound(p, KadaptOptions.plain(2), highs)
    assert strong >= plain - 1e-9


def test_fixed_observation(highs):
    p = example1(3)
    sol = solve_kadapt(p, KadaptOptions(K=6, fix_w=(1, 1, 1)), engine=highs)
    assert list(sol.w) == [1, 1, 1]
    assert sol.objective == pytest.approx(brute_force_phi(p, (1, 1, 1))[0], abs=1e-6)
    with pytest.raises(ValueError):
        build_strengthened(p, KadaptOptions(K=2, fix_w=(1, 1)))


def test_policies_are_feasible_paths(highs):
    inst = random_instance(7, 1)
    p = orienteering_to_ddid(inst, inst.T_list[1], delta=0.5)
    sol = solve_kadapt(p, KadaptOptions(K=2), engine=highs)
    for pt in sol.points:
        assert p.recourse.is_feasible(pt)
    assert p.w_feasible(sol.w)


def test_k_equal_to_y_is_exact(highs):
    p = example1(1)
    n_y = len(recourse_points(p))
    sol = solve_kadapt(p, KadaptOptions(K=n_y), engine=highs)
    best = min(brute_force_phi(p, w)[0] for w in p.enumerate_w())
    assert sol.objective == pytest.approx(best, abs=1e-6)


def test_big_m_audit(highs):
    base, big = big_m_audit(example1(1), KadaptOptions(K=2), engine=highs)
    assert big.big_M == pytest.approx(10 * base.big_M)
    assert abs(base.objective - big.objective) < 1e-6


def test_too_small_big_m_is_visible(highs):
    # a tiny M restricts the dual minimisation, so the value can only get worse
    p = example1(1)
    sol = solve_kadapt(p, KadaptOptions(K=2, big_M=1e-3), engine=highs)
    ref = solve_kadapt(p, KadaptOptions(K=2), engine=highs)
    assert sol.objective > ref.objective + 1e-3


def test_solution_json(highs):
    sol = solve_kadapt(example1(1), KadaptOptions(K=2), engine=highs)
    d = json.loads(json.dumps(sol.to_json()))
    assert {"alpha", "beta", "beta_k", "gamma_k", "y_tilde", "w_tilde", "policies"} <= set(d)
    assert sum(d["alpha"]) == pytest.approx(1.0)


def test_monotone_in_k(highs):
    inst = random_instance(6, 4)
    p = orienteering_to_ddid(inst, inst.T_list[1], delta=0.5)
    vals = [solve_kadapt(p, KadaptOptions(K=K), engine=highs).objective for K in (1, 2, 3)]
    assert vals[0] >= vals[1] - 1e-6 >= vals[2] - 2e-6
