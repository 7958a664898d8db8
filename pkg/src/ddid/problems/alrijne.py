"""Hospital inspection case study: 14 ward areas over six floors, a depot and
one elevator.

Travel times are not published, so the caller supplies them, either as a
full matrix over ``("D",) + AREAS`` or as walking times on the topology
edges below (closed under shortest paths; the elevator is a pass-through
node and never a visit target).
"""
from __future__ import annotations

from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from ..core import DdidProblem
from .orienteering import OrienteeringInstance, make_xi1, make_xi2, orienteering_to_ddid

DEPOT = "D"
ELEVATOR = "E"
AREAS = ("0B", "0C", "1A", "1B", "1C", "2A", "2B", "2C", "3A", "3B", "4A", "4B", "5A", "5B")

# expected share of inspection findings per area, in percent
U_HAT_PERCENT = {"0B": 5, "0C": 10, "1A": 10, "1B": 7, "1C": 5, "2A": 10, "2B": 5,
                 "2C": 6, "3A": 7, "3B": 5, "4A": 7, "4B": 8, "5A": 10, "5B": 5}

TOPOLOGY = (
    ("D", "0C"), ("0C", "0B"), ("D", "0B"), ("E", "0B"), ("E", "0C"), ("E", "D"),
    ("1B", "1A"), ("1B", "1C"), ("1C", "1A"), ("E", "1A"), ("E", "1C"), ("E", "1B"),
    ("2B", "2A"), ("2B", "2C"), ("2A", "2C"), ("E", "2A"), ("E", "2C"), ("E", "2B"),
    ("3B", "3A"), ("E", "3A"), ("E", "3B"),
    ("4B", "4A"), ("E", "4A"), ("E", "4B"),
    ("5B", "5A"), ("E", "5A"), ("E", "5B"),
)

U_CAP = 0.2
DURATION_H = 2.0
THETA = 0.75


def u_hat() -> np.ndarray:
    return np.array([U_HAT_PERCENT[a] for a in AREAS], dtype=float) / 100.0


def labels() -> tuple:
    return (DEPOT,) + AREAS


def travel_times_from_edges(edge_times: Mapping[tuple, float]) -> np.ndarray:
    """All-pairs shortest travel times over the topology, restricted to depot and areas.

    ``edge_times`` maps every topology edge ``(a, b)`` (either orientation) to
    a non-negative time; routes may pass through the elevator.
    """
    nodes = labels() + (ELEVATOR,)
    idx = {n: i for i, n in enumerate(nodes)}
    g = np.full((len(nodes), len(nodes)), np.inf)
    np.fill_diagonal(g, 0.0)
    for a, b in TOPOLOGY:
        t = edge_times.get((a, b), edge_times.get((b, a)))
        if t is None:
            raise KeyError(f"missing travel time for edge {a}-{b}")
        if t < 0:
            raise ValueError(f"negative travel time on edge {a}-{b}")
        g[idx[a], idx[b]] = g[idx[b], idx[a]] = float(t)
    dist = shortest_path(np.where(np.isinf(g), 0.0, g), method="D", directed=False)
    n = len(labels())
    return dist[:n, :n]


def alrijne_instance(times: np.ndarray, T_list: Sequence[float] = (DURATION_H,),
                     U: float = U_CAP) -> OrienteeringInstance:
    """Depot at index 0 (start and end), areas in :data:`AREAS` order."""
    t = np.asarray(times, dtype=float)
    if t.shape != (len(AREAS) + 1,) * 2:
        raise ValueError(f"expected a {len(AREAS) + 1}x{len(AREAS) + 1} travel-time matrix")
    return OrienteeringInstance(times=t, s=0, d=0, U=U, T_list=list(T_list), name="alrijne")


def alrijne_problem(times: np.ndarray, delta: float, xi_choice: str = "xi1",
                    T: float = DURATION_H, theta: float = THETA) -> DdidProblem:
    inst = alrijne_instance(times, [T])
    return orienteering_to_ddid(inst, T, delta=delta, xi_choice=xi_choice,
                                theta=theta, u_hat=u_hat())


def uncertainty_set(choice: str = "xi1", theta: float = THETA):
    if choice == "xi1":
        return make_xi1(len(AREAS), U_CAP)
    if choice == "xi2":
        return make_xi2(u_hat(), theta)
    raise ValueError(f"unknown uncertainty set {choice!r}")
