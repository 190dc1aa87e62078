"""Distributed waypoint plans and crowding metrics.

Plans are built column by column: at each path index the set of markers
handed to the agents is the one with the largest minimum pairwise distance
(ties broken by the lexicographically smallest sorted id tuple), then the set
is matched to agents so nobody repeats a marker and total walking distance is
small.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .anchor import AnchorMarker

# Above this many candidate subsets per column, fall back to farthest-point insertion.
MAX_ENUMERATED_SUBSETS = 20000
_REPEAT_COST = 1e6


class InfeasiblePlanError(ValueError):
    pass


@dataclass
class WaypointPlan:
    paths: list[list[str]]

    def column(self, index: int) -> list[str]:
        return [p[index] for p in self.paths]

    def validate(self, markers: Sequence[AnchorMarker]) -> None:
        ids = {m.id for m in markers}
        for a, path in enumerate(self.paths):
            for i, mid in enumerate(path):
                if mid not in ids:
                    raise ValueError(f"agent {a}: unknown marker {mid!r}")
                if i and path[i - 1] == mid:
                    raise ValueError(f"agent {a}: marker {mid!r} repeated at index {i}")


@dataclass
class CrowdingReport:
    max_concurrent_per_anchor: int
    pushes_proxy: int
    occupancy: dict[str, list[int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "max_concurrent_per_anchor": self.max_concurrent_per_anchor,
            "pushes_proxy": self.pushes_proxy,
            "occupancy": self.occupancy,
        }


def min_pairwise_distance(points: Sequence[tuple[float, float]]) -> float:
    best = math.inf
    for (ax, ay), (bx, by) in itertools.combinations(points, 2):
        best = min(best, math.hypot(ax - bx, ay - by))
    return best


def _spread_key(points: Sequence[tuple[float, float]]) -> tuple[float, ...]:
    """Leximin order: largest minimum distance first, then the next smallest, and so on."""
    dists = sorted(math.hypot(ax - bx, ay - by) for (ax, ay), (bx, by) in itertools.combinations(points, 2))
    return tuple(-d for d in dists)


def _feasible(subset: Sequence[AnchorMarker], previous: Sequence[str] | None) -> bool:
    # With two or more agents a repeat-free matching always exists.
    if previous is None or len(subset) > 1:
        return True
    return subset[0].id != previous[0]


def _best_subset(markers: list[AnchorMarker], n: int, previous: Sequence[str] | None) -> list[AnchorMarker]:
    if math.comb(len(markers), n) <= MAX_ENUMERATED_SUBSETS:
        best, best_key = None, None
        for subset in itertools.combinations(markers, n):
            if not _feasible(subset, previous):
                continue
            key = (_spread_key([m.position for m in subset]), tuple(m.id for m in subset))
            if best_key is None or key < best_key:
                best, best_key = subset, key
        return list(best)
    # farthest-point insertion starting from the widest pair
    chosen = list(min(itertools.combinations(markers, 2),
                      key=lambda p: (-math.dist(p[0].position, p[1].position), p[0].id, p[1].id)))
    while len(chosen) < n:
        rest = [m for m in markers if m not in chosen]
        chosen.append(min(rest, key=lambda m: (-min(math.dist(m.position, c.position) for c in chosen), m.id)))
    return sorted(chosen, key=lambda m: m.id)


def _match(subset: list[AnchorMarker], previous: Sequence[str] | None,
           by_id: dict[str, AnchorMarker], rng: np.random.Generator) -> list[str]:
    n = len(subset)
    if previous is None:
        order = rng.permutation(n)
        return [subset[i].id for i in order]
    cost = np.empty((n, n))
    for a, prev in enumerate(previous):
        px, py = by_id[prev].position
        for j, m in enumerate(subset):
            cost[a, j] = _REPEAT_COST if m.id == prev else math.hypot(m.position[0] - px, m.position[1] - py)
    cost += rng.random((n, n)) * 1e-9
    rows, cols = linear_sum_assignment(cost)
    out = [""] * n
    for a, j in zip(rows, cols):
        out[a] = subset[j].id
    return out


def assign_paths(n_agents: int, markers: Sequence[AnchorMarker], path_length: int,
                 seed: int) -> WaypointPlan:
    if n_agents < 1 or path_length < 1:
        raise ValueError("n_agents and path_length must be >= 1")
    if n_agents > len(markers):
        raise InfeasiblePlanError(
            f"n_agents ({n_agents}) exceeds number of markers ({len(markers)})")
    if len(markers) == 1 and path_length > 1:
        raise InfeasiblePlanError("a single marker cannot form a repeat-free path")
    ordered = sorted(markers, key=lambda m: m.id)
    by_id = {m.id: m for m in ordered}
    rng = np.random.default_rng(seed)
    paths: list[list[str]] = [[] for _ in range(n_agents)]
    previous = None
    for _ in range(path_length):
        subset = _best_subset(ordered, n_agents, previous)
        column = _match(subset, previous, by_id, rng)
        for a, mid in enumerate(column):
            paths[a].append(mid)
        previous = column
    return WaypointPlan(paths)


def naive_plan(n_agents: int, markers: Sequence[AnchorMarker], path_length: int,
               seed: int) -> WaypointPlan:
    """Everyone gets the same random repeat-free sequence (the crowding baseline)."""
    ids = sorted(m.id for m in markers)
    rng = np.random.default_rng(seed)
    seq: list[str] = []
    for _ in range(path_length):
        options = [i for i in ids if not seq or i != seq[-1]]
        if not options:
            raise InfeasiblePlanError("a single marker cannot form a repeat-free path")
        seq.append(options[int(rng.integers(len(options)))])
    return WaypointPlan([list(seq) for _ in range(n_agents)])


def extend_path(last: str | None, busy: Sequence[str], markers: Sequence[AnchorMarker],
                path_length: int) -> list[str]:
    """Re-plan hook: a fresh path for one agent that keeps away from markers
    other agents are currently heading to."""
    by_id = {m.id: m for m in markers}
    busy_pos = [by_id[b].position for b in busy if b in by_id]
    out: list[str] = []
    prev = last
    for _ in range(path_length):
        options = [m for m in sorted(markers, key=lambda m: m.id) if m.id != prev]
        free = [m for m in options if m.id not in busy] or options
        if not free:
            raise InfeasiblePlanError("a single marker cannot form a repeat-free path")
        pick = min(free, key=lambda m: (-min((math.dist(m.position, p) for p in busy_pos), default=0.0),
                                        m.id))
        out.append(pick.id)
        prev = pick.id
    return out


def crowding_metrics(position_trace, markers: Sequence[AnchorMarker], crowd_radius: float = 1.0,
                     contact_radius: float = 0.4) -> CrowdingReport:
    """Crowding over a (ticks, agents, 2) position trace."""
    pos = np.asarray(position_trace, dtype=float)
    if pos.ndim != 3 or pos.shape[0] == 0 or pos.shape[2] != 2:
        raise ValueError("position_trace must be a non-empty (ticks, agents, 2) array")
    if not (crowd_radius > 0 and contact_radius > 0):
        raise ValueError("radii must be > 0")
    n_agents = pos.shape[1]
    occupancy: dict[str, list[int]] = {}
    max_conc = 0
    if markers:
        mpos = np.array([m.position for m in markers], dtype=float)
        d2 = ((pos[:, :, None, :] - mpos[None, None, :, :]) ** 2).sum(axis=-1)
        counts = (d2 <= crowd_radius ** 2).sum(axis=1)
        max_conc = int(counts.max())
        for j, m in enumerate(markers):
            occupancy[m.id] = np.bincount(counts[:, j], minlength=n_agents + 1).tolist()
    pushes = 0
    for i, j in itertools.combinations(range(n_agents), 2):
        d2 = ((pos[:, i, :] - pos[:, j, :]) ** 2).sum(axis=-1)
        pushes += int((d2 <= contact_radius ** 2).sum())
    return CrowdingReport(max_conc, pushes, occupancy)
