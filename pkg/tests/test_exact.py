import io
import itertools
import json

import numpy as np
import pytest

from ddid.core import DdidProblem, Polyhedron, RecourseSpec, Row, brute_force_phi
from ddid.exact import (EmptyObservationSetError, ExactParams, InvalidCutError, hamming_distance,
                        information_cut, information_distance, integer_optimality_cut,
                        lower_bound_phi, master_optimistic_bound, solve_exact)
from ddid.problems.orienteering import example1


def all_phi(p):
    return {tuple(w): brute_force_phi(p, w)[0] for w in itertools.product((0, 1), repeat=p.n_w)}


def test_distances():
    assert hamming_distance([1, 0, 1], [1, 1, 0]) == 2
    assert hamming_distance([1, 0], [0.5, 0.25]) == pytest.approx(0.75)
    assert information_distance([1, 0, 0], [1, 1, 1]) == 2
    assert information_distance([1, 1, 0], [0, 0, 0.5]) == pytest.approx(0.5)


def test_integer_cut_tight_and_valid():
    p = example1(3)
    phi = all_phi(p)
    low = lower_bound_phi(p)
    for wp, v in phi.items():
        cut = integer_optimality_cut(wp, v, low)
        assert cut.rhs(wp) == pytest.approx(v)
        for w, u in phi.items():
            assert cut.rhs(w) <= u + 1e-9


def test_information_cut_tight_and_valid():
    p = example1(3)
    phi = all_phi(p)
    low = lower_bound_phi(p)
    for wp, v in phi.items():
        cut = information_cut(wp, v, low, problem=p)
        assert cut.rhs(wp) == pytest.approx(v)
        for w, u in phi.items():
            assert cut.rhs(w) <= u + 1e-9


def test_information_cut_dominates_integer_cut():
    wp, v, low = (1, 0, 0), -0.5, -1.0
    a, b = information_cut(wp, v, low, deterministic=True), integer_optimality_cut(wp, v, low)
    for w in itertools.product((0, 1), repeat=3):
        assert a.rhs(w) >= b.rhs(w) - 1e-12


def test_information_cut_refused_for_stochastic_cost():
    with pytest.raises(InvalidCutError):
        information_cut((1, 0), -0.5, -1.0, deterministic=False)


def test_cut_rejects_inconsistent_lower_bound():
    with pytest.raises(ValueError):
        integer_optimality_cut((1, 0), -0.5, 0.5)


def test_lower_bound_is_below_every_value():
    p = example1(3)
    assert lower_bound_phi(p) <= min(all_phi(p).values()) + 1e-9


def test_optimistic_bound_row():
    cut = master_optimistic_bound([0.5, -1.0], offset=-2.0)
    assert cut.rhs([1, 1]) == pytest.approx(-2.5)


@pytest.mark.parametrize("B,expected", [(0, 0.0), (1, 0.5), (2, 0.5), (3, 0.5)])
def test_example1_goldens(engine, B, expected):
    p = example1(B)
    res = solve_exact(p, engine=engine)
    assert res.status == "optimal"
    assert p.report(res.value) == pytest.approx(expected, abs=1e-6)
    assert res.state.iterations <= len(p.enumerate_w())


@pytest.mark.parametrize("flags", [(False, False), (True, False), (False, True)])
def test_cut_families_reach_the_same_optimum(highs, flags):
    p = example1(2)
    res = solve_exact(p, ExactParams(use_information_cuts=flags[0], use_optimistic_bound=flags[1]),
                      engine=highs)
    assert p.report(res.value) == pytest.approx(0.5, abs=1e-6)


def test_trace_records(highs):
    buf = io.StringIO()
    solve_exact(example1(1), engine=highs, trace=buf)
    recs = [json.loads(l) for l in buf.getvalue().splitlines()]
    assert all(r["lb"] <= r["ub"] + 1e-9 for r in recs)
    assert recs[-1]["cut"] == "information"


def test_result_unpacks():
    w, value, state = solve_exact(example1(0))
    assert list(w) == [0, 0, 0] and value == pytest.approx(0.0, abs=1e-9)


def test_empty_observation_set(highs):
    p = example1(1)
    bad = DdidProblem(p.xi_set, p.C, p.P, (Row({0: 1.0}, ">=", 2.0),), p.recourse,
                      deterministic_discovery_cost=True)
    with pytest.raises(EmptyObservationSetError):
        solve_exact(bad, engine=highs)


def test_stochastic_cost_falls_back_to_integer_cuts(highs, caplog):
    xi = Polyhedron(np.array([[1.0, 1.0], [-1.0, -1.0]]), np.array([1.0, -1.0]),
                    np.zeros(2), np.ones(2))
    C = np.array([[0.3, 0.0], [0.0, 0.2]])
    spec = RecourseSpec(2, explicit_constraints=(Row({0: 1, 1: 1}, "=", 1),))
    p = DdidProblem(xi, C, -np.eye(2), (), spec)
    buf = io.StringIO()
    res = solve_exact(p, engine=highs, trace=buf)
    assert "falling back" in caplog.text
    assert res.value == pytest.approx(min(all_phi(p).values()), abs=1e-6)
    assert all(json.loads(l)["cut"] == "integer" for l in buf.getvalue().splitlines())


def test_weak_lower_bound_override_still_converges(highs):
    p = example1(3)
    res = solve_exact(p, engine=highs, phi_lower=-5.0)
    assert p.report(res.value) == pytest.approx(0.5, abs=1e-6)
    assert res.state.iterations <= len(p.enumerate_w())
