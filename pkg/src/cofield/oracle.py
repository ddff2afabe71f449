"""Per-node stochastic reference simulator.

Runs the unaggregated process the mean-field model approximates: every
agent carries an explicit state, interactions are truly bilateral (one
event updates both participants), and partner matching is without
replacement inside a week by default.  On small instances the
seed-averaged empirical occupancy must converge to the mean-field
trajectory as the population grows; that comparison is the acceptance
oracle for the operator construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimation import SmoothedModel
from .meanfield import (
    Occupancy,
    StateSpace,
    Trajectory,
    compile_kappa,
    contact_array,
    selection_matrix,
    trajectory_to_csv,
    weekly_gates,
)

_REJECTION_TRIES = 16


@dataclass
class AgentPopulation:
    """Explicit agents: one state index each, plus the simulation seed."""

    space: StateSpace
    states: np.ndarray
    seed: int = 0

    @classmethod
    def from_occupancy(
        cls, space: StateSpace, values: np.ndarray, n_agents: int, seed: int = 0
    ) -> "AgentPopulation":
        """Allocate agents to states by largest-remainder rounding of ``values``."""
        if n_agents < 2:
            raise ValueError("population needs at least two agents")
        raw = np.asarray(values, dtype=float) * n_agents
        counts = np.floor(raw).astype(int)
        remainder = n_agents - int(counts.sum())
        if remainder > 0:
            fractional = raw - counts
            top = np.argsort(-fractional, kind="stable")[:remainder]
            counts[top] += 1
        states = np.repeat(np.arange(space.size), counts)
        return cls(space, states, seed)

    @property
    def n_agents(self) -> int:
        return int(self.states.size)

    def class_of_agents(self) -> np.ndarray:
        return self.states // self.space.states_per_class


@dataclass
class OracleRun:
    seed: int
    n_agents: int
    space: StateSpace
    snapshots: list[Occupancy] = field(default_factory=list)

    def by_key(self) -> dict[tuple[int, int], np.ndarray]:
        return {(s.year, s.week): s.values for s in self.snapshots}

    def to_csv(self, path) -> None:
        trajectory = Trajectory(self.space, self.snapshots)
        trajectory_to_csv(trajectory, path, extra={"seed": self.seed, "n_agents": self.n_agents})


def _draw_partner(members, taken, self_idx, rng, matched):
    """Uniform partner from a class; -1 when nobody is eligible."""
    if members.size == 0:
        return -1
    for _ in range(_REJECTION_TRIES):
        candidate = int(members[rng.integers(members.size)])
        if candidate == self_idx:
            continue
        if matched and taken[candidate]:
            continue
        return candidate
    eligible = members[members != self_idx]
    if matched:
        eligible = eligible[~taken[eligible]]
    if eligible.size == 0:
        return -1
    return int(eligible[rng.integers(eligible.size)])


def simulate_agents(
    pop: AgentPopulation,
    model: SmoothedModel,
    years: int,
    *,
    weeks_per_year: int = 52,
    weekly_rule: str = "geometric",
    gate_scale: float = 1.0,
    matched: bool = True,
) -> OracleRun:
    """Simulate every agent explicitly over whole years.

    Per week each agent independently passes the weekly gate of its
    class; initiators (in seeded random order) select a partner class by
    the normalized contact row and a partner uniformly inside it, and
    both sides move per the paired transition table, identity when the
    state pair is unobserved.  ``matched=True`` (default) consumes both
    participants, so nobody interacts twice a week; with
    ``matched=False`` partners are drawn with replacement and only an
    agent's first transition of the week sticks.
    """
    if years < 1:
        raise ValueError("years must be >= 1")
    space = pop.space
    n = pop.n_agents
    rng = np.random.default_rng(pop.seed)

    contact = contact_array(model, space.n_classes)
    gate = weekly_gates(
        contact, weekly_rule=weekly_rule, weeks_per_year=weeks_per_year, gate_scale=gate_scale
    )
    class_of = pop.class_of_agents()
    class_counts = np.bincount(class_of, minlength=space.n_classes)
    sel = selection_matrix(contact, class_counts.astype(float))
    sel_cum = np.cumsum(sel, axis=1)
    has_partner_row = sel.sum(axis=1) > 0.0
    members_by_class = [np.flatnonzero(class_of == u) for u in range(space.n_classes)]

    kappa = {}
    for a_idx, b_idx, _, _, probs, succ_a, succ_b in compile_kappa(model, space):
        kappa[(a_idx, b_idx)] = (np.cumsum(probs), succ_a, succ_b)

    gate_per_agent = gate[class_of]
    block = space.bins.n_c * space.bins.n_p  # (c, p) block size under (u, h, c, p) order
    states = pop.states.copy()
    run = OracleRun(pop.seed, n, space)

    def snapshot(year, week):
        values = np.bincount(states, minlength=space.size) / n
        run.snapshots.append(Occupancy(year, week, values))

    for year in range(1, years + 1):
        states = (states // block) * block  # yearly reset to (p=0, c=0)
        snapshot(year, 0)
        for week in range(1, weeks_per_year + 1):
            initiators = np.flatnonzero(rng.random(n) < gate_per_agent)
            order = rng.permutation(initiators)
            taken = np.zeros(n, dtype=bool)
            moved = np.zeros(n, dtype=bool)
            for agent in order:
                if taken[agent] or (not matched and moved[agent]):
                    continue
                u_a = class_of[agent]
                if not has_partner_row[u_a]:
                    continue
                u_b = int(np.searchsorted(sel_cum[u_a], rng.random(), side="right"))
                u_b = min(u_b, space.n_classes - 1)  # cumulative row can undershoot 1 by an ulp
                partner = _draw_partner(members_by_class[u_b], taken, agent, rng, matched)
                if partner < 0:
                    continue
                if matched:
                    taken[agent] = True
                    taken[partner] = True
                entry = kappa.get((int(states[agent]), int(states[partner])))
                if entry is None:
                    continue
                cum, succ_a, succ_b = entry
                draw = int(np.searchsorted(cum, rng.random(), side="right"))
                draw = min(draw, succ_a.size - 1)
                if matched or not moved[agent]:
                    states[agent] = succ_a[draw]
                    moved[agent] = True
                if matched or not moved[partner]:
                    states[partner] = succ_b[draw]
                    moved[partner] = True
            snapshot(year, week)
    return run


def average_runs(runs: list[OracleRun]) -> OracleRun:
    """Seed-averaged occupancy across runs with identical shape."""
    if not runs:
        raise ValueError("no runs to average")
    keys = [(s.year, s.week) for s in runs[0].snapshots]
    for run in runs[1:]:
        if [(s.year, s.week) for s in run.snapshots] != keys:
            raise ValueError("runs cover different horizons")
    averaged = OracleRun(-1, sum(r.n_agents for r in runs), runs[0].space)
    for i, (year, week) in enumerate(keys):
        stacked = np.stack([run.snapshots[i].values for run in runs])
        averaged.snapshots.append(Occupancy(year, week, stacked.mean(axis=0)))
    return averaged


@dataclass
class ComparisonResult:
    weeks: list[tuple[int, int]]
    l1: np.ndarray

    @property
    def max_l1(self) -> float:
        return float(self.l1.max())


def compare_to_meanfield(run: OracleRun, trajectory: Trajectory) -> ComparisonResult:
    """Per-week L1 distance between an oracle run and a mean-field trajectory."""
    if run.space.size != trajectory.space.size:
        raise ValueError("state spaces differ between oracle run and trajectory")
    mf = trajectory.by_key()
    oc = run.by_key()
    if set(mf) != set(oc):
        raise ValueError("oracle run and trajectory cover different horizons")
    keys = sorted(mf)
    l1 = np.array([float(np.abs(oc[k] - mf[k]).sum()) for k in keys])
    return ComparisonResult(keys, l1)
