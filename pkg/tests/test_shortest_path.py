import json

import numpy as np
import pytest
from scipy.sparse.csgraph import dijkstra

from ddid.core import RecourseSpec
from ddid.kadapt import KadaptOptions, evaluate_policies, solve_kadapt
from ddid.problems.shortest_path import (ShortestPathInstance, contains_st_path,
                                         full_observation, generate_shortest_path_instance,
                                         simple_paths, sp_to_kadapt, worst_case_cost)


def test_arc_counts_n30():
    assert generate_shortest_path_instance(30, 0).n_arcs == 870 - 609
    assert generate_shortest_path_instance(30, 0, self_arcs=True).n_arcs == 900 - 630


def test_generator_is_deterministic():
    a = generate_shortest_path_instance(12, 5)
    b = generate_shortest_path_instance(12, 5)
    assert a.dumps() == b.dumps()


def test_two_nodes_single_arc():
    inst = generate_shortest_path_instance(2, 0)
    assert inst.arcs == [(inst.s, inst.t)]


def test_terminals_are_farthest_pair():
    inst = generate_shortest_path_instance(9, 4)
    d = np.hypot(*(inst.coords[:, None, :] - inst.coords[None, :, :]).transpose(2, 0, 1))
    assert d[inst.s, inst.t] == pytest.approx(d.max())
    assert inst.s < inst.t


def test_kept_arcs_are_the_shortest():
    inst = generate_shortest_path_instance(10, 1)
    cut = inst.costs.max()
    all_d = [np.hypot(*(inst.coords[i] - inst.coords[j])) for i in range(10) for j in range(10) if i != j]
    assert sum(d <= cut for d in all_d) >= inst.n_arcs


def test_regeneration_logs_new_seed(caplog):
    caplog.set_level("INFO")
    for seed in range(40):
        inst = generate_shortest_path_instance(4, seed)
        if inst.seed != seed:
            assert "used seed" in caplog.text
            return
    pytest.skip("no disconnected draw among the probed seeds")


def test_json_roundtrip():
    inst = generate_shortest_path_instance(8, 3)
    back = ShortestPathInstance.from_json(json.loads(inst.dumps()))
    assert back.dumps() == inst.dumps()


def test_rejects_equal_terminals():
    with pytest.raises(ValueError):
        ShortestPathInstance(np.zeros((2, 2)), [(0, 1)], np.ones(1), 0, 0)


def _nominal_shortest(inst):
    g = np.zeros((inst.n_nodes, inst.n_nodes))
    for (u, v), c in zip(inst.arcs, inst.costs):
        g[u, v] = c
    return dijkstra(g, indices=inst.s)[inst.t]


def test_zero_inflation_gives_nominal_shortest_path(highs):
    inst = generate_shortest_path_instance(8, 2, B=0.0)
    p = sp_to_kadapt(inst)
    sol = solve_kadapt(p, KadaptOptions(K=1, fix_w=full_observation(p)), engine=highs)
    assert sol.objective == pytest.approx(_nominal_shortest(inst), abs=1e-6)


def test_full_budget_inflates_everything(highs):
    inst = generate_shortest_path_instance(8, 2)
    p = sp_to_kadapt(inst, B=float(inst.n_arcs))
    sol = solve_kadapt(p, KadaptOptions(K=1, fix_w=full_observation(p)), engine=highs)
    assert sol.objective == pytest.approx(1.5 * _nominal_shortest(inst), abs=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_single_policy_matches_path_enumeration(seed, highs):
    inst = generate_shortest_path_instance(6, seed)
    p = sp_to_kadapt(inst)
    sol = solve_kadapt(p, KadaptOptions(K=1, fix_w=full_observation(p)), engine=highs)
    best = min(worst_case_cost(inst, path) for path in simple_paths(inst))
    assert sol.objective == pytest.approx(best, abs=1e-6)
    assert contains_st_path(inst, sol.policies[0])


def test_worst_case_cost_fractional_budget():
    inst = ShortestPathInstance(np.zeros((3, 2)), [(0, 1), (1, 2)], np.array([2.0, 4.0]), 0, 2, B=1.5)
    assert worst_case_cost(inst, [0, 1]) == pytest.approx(6 + 2 + 0.5)


def test_frozen_coordinate_and_flow_rows():
    inst = generate_shortest_path_instance(6, 0)
    p = sp_to_kadapt(inst)
    lo, hi = p.xi_set.coordinate_bounds()
    assert lo[0] == pytest.approx(1.0) and hi[0] == pytest.approx(1.0)
    assert [tuple(w) for w in p.enumerate_w()] == [full_observation(p)]
    assert isinstance(p.recourse, RecourseSpec) and p.deterministic_discovery_cost


def test_two_policies_audit(highs):
    inst = generate_shortest_path_instance(10, 1)
    p = sp_to_kadapt(inst)
    sol = solve_kadapt(p, KadaptOptions(K=2, fix_w=full_observation(p)), engine=highs)
    assert evaluate_policies(p, sol.w, sol.policies, highs) == pytest.approx(sol.objective, abs=1e-6)
    assert all(contains_st_path(inst, y) for y in sol.policies)
