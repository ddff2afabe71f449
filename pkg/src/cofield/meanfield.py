"""Master-equation evolution of the aggregated state occupancy.

The population is summarized by an occupancy vector ``delta`` holding
the fraction of scientists in every state ``(p, c, h, u)``.  One week of
dynamics multiplies ``delta`` by a column-stochastic operator built from
the current occupancy:

    delta(t+1) = M(delta(t)) @ delta(t)

Each column of ``M`` is the one-week law of a single node and mixes
three branches:

* initiate, with the weekly gate derived from the node's class contact
  row (annual row sum clamped to a probability, then converted to the
  weekly timescale): a partner class is selected proportional to the
  row-normalized contact weights over classes with positive mass, a
  partner state proportional to the occupancy inside that class, and the
  node moves per the initiator side of the paired transition table;
* respond, with the per-node probability of being selected by an
  initiator (class inflow divided by class mass, clamped): the node
  moves per the responder side of the table;
* idle, the complementary identity branch.

State pairs absent from the transition table leave the node in place,
so sparse training data degrades to idling instead of failing.  Both
partner-state selection and the responder's initiator mixture read the
current occupancy, which is what makes the operator density dependent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .abstraction import ClassMap, NodeState, ParameterBins
from .estimation import SmoothedModel, annual_to_weekly

DEFAULT_DENSE_THRESHOLD = 400


class StateSpace:
    """Bijective enumeration of all node states, ordered by (u, h, c, p)."""

    def __init__(self, n_classes: int, bins: ParameterBins | None = None):
        if n_classes < 1:
            raise ValueError("state space needs at least one class")
        self.bins = bins or ParameterBins()
        self.n_classes = n_classes
        self.states_per_class = self.bins.n_h * self.bins.n_c * self.bins.n_p
        self.size = n_classes * self.states_per_class
        self._decade_index = {h: i for i, h in enumerate(self.bins.decades)}

    def index(self, state: NodeState) -> int:
        b = self.bins
        if not (0 <= state.p < b.n_p and 0 <= state.c < b.n_c):
            raise ValueError(f"state {state} outside bin ranges")
        if not (0 <= state.u < self.n_classes):
            raise ValueError(f"state {state} references unknown class")
        h_idx = self._decade_index[state.h]
        return ((state.u * b.n_h + h_idx) * b.n_c + state.c) * b.n_p + state.p

    def state(self, index: int) -> NodeState:
        b = self.bins
        if not (0 <= index < self.size):
            raise IndexError(index)
        index, p = divmod(index, b.n_p)
        index, c = divmod(index, b.n_c)
        u, h_idx = divmod(index, b.n_h)
        return NodeState(p=p, c=c, h=b.decades[h_idx], u=u)

    def class_slice(self, u: int) -> slice:
        return slice(u * self.states_per_class, (u + 1) * self.states_per_class)

    def class_masses(self, values: np.ndarray) -> np.ndarray:
        return values.reshape(self.n_classes, self.states_per_class).sum(axis=1)

    def class_of_index(self, index: int) -> int:
        return index // self.states_per_class

    def coordinate_arrays(self):
        """(p, c, h, u) integer arrays aligned with the enumeration."""
        b = self.bins
        idx = np.arange(self.size)
        p = idx % b.n_p
        c = (idx // b.n_p) % b.n_c
        h = np.asarray(b.decades)[(idx // (b.n_p * b.n_c)) % b.n_h]
        u = idx // self.states_per_class
        return p, c, h, u


def enumerate_states(classes: ClassMap, bins: ParameterBins | None = None) -> StateSpace:
    """State space over the classes of a class map."""
    if classes.n_classes < 1:
        raise ValueError("empty class map")
    return StateSpace(classes.n_classes, bins)


def check_occupancy(values: np.ndarray, space: StateSpace, tol: float = 1e-9) -> None:
    if values.shape != (space.size,):
        raise ValueError(f"occupancy has shape {values.shape}, expected ({space.size},)")
    if np.any(values < -tol):
        raise ValueError("negative occupancy fraction")
    if abs(values.sum() - 1.0) > tol:
        raise ValueError(f"occupancy sums to {values.sum()}, not 1")


def initialize_year(values: np.ndarray, space: StateSpace) -> np.ndarray:
    """Collapse each (h, u) block's mass into its (p=0, c=0) state."""
    b = space.bins
    grid = values.reshape(space.n_classes, b.n_h, b.n_c, b.n_p)
    mass = grid.sum(axis=(2, 3))
    fresh = np.zeros_like(grid)
    fresh[:, :, 0, 0] = mass
    return fresh.reshape(space.size)


@dataclass
class TransitionOperator:
    """Column-stochastic weekly operator, dense or sparse."""

    matrix: np.ndarray | sparse.csc_matrix

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(self.matrix @ values).ravel()

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def step(values: np.ndarray, operator: TransitionOperator) -> np.ndarray:
    """Advance the occupancy one week: a matrix-vector product."""
    if operator.matrix.shape[1] != values.shape[0]:
        raise ValueError(
            f"operator of size {operator.matrix.shape} cannot step a vector of "
            f"length {values.shape[0]}"
        )
    return operator.apply(values)


def contact_array(model: SmoothedModel, n_classes: int) -> np.ndarray:
    """Dense class-by-class contact weights of a smoothed model."""
    contact = np.zeros((n_classes, n_classes))
    for (u_a, u_b), w in model.contact.weights.items():
        contact[u_a, u_b] = w
    return contact


def weekly_gates(
    contact: np.ndarray,
    *,
    weekly_rule: str = "geometric",
    weeks_per_year: int = 52,
    gate_scale: float = 1.0,
) -> np.ndarray:
    """Per-class weekly interaction probability from the contact row sums.

    Row sums are annual interaction rates; values above 1 saturate the
    annual probability before the weekly conversion.
    """
    annual = np.clip(contact.sum(axis=1) * gate_scale, 0.0, 1.0)
    return np.array(
        [annual_to_weekly(p, weeks_per_year=weeks_per_year, rule=weekly_rule) for p in annual]
    )


def selection_matrix(contact: np.ndarray, class_mass: np.ndarray) -> np.ndarray:
    """Row-normalized contact restricted to classes with positive mass."""
    sel = contact * (class_mass > 0.0)[None, :]
    rows = sel.sum(axis=1)
    positive = rows > 0.0
    sel[positive] /= rows[positive, None]
    sel[~positive] = 0.0
    return sel


def compile_kappa(model: SmoothedModel, space: StateSpace) -> list:
    """Transition-table entries converted to state indices.

    Each entry is ``(a_idx, b_idx, u_a, u_b, probs, succ_a, succ_b)``
    with the successor probabilities renormalized to kill float drift.
    """
    entries = []
    for (state_a, state_b), successors in sorted(model.kappa.entries.items()):
        a_idx = space.index(state_a)
        b_idx = space.index(state_b)
        probs = np.array([p for p, _ in successors], dtype=float)
        probs = probs / probs.sum()
        succ_a = np.array([space.index(sa) for _, (sa, _) in successors], dtype=int)
        succ_b = np.array([space.index(sb) for _, (_, sb) in successors], dtype=int)
        entries.append((a_idx, b_idx, state_a.u, state_b.u, probs, succ_a, succ_b))
    return entries


class OperatorFactory:
    """Compiles a model against a state space and builds weekly operators.

    Compilation converts the transition table to state indices and
    precomputes the class-level gates; :meth:`build` then assembles the
    density-dependent operator for one occupancy vector.
    """

    def __init__(
        self,
        space: StateSpace,
        model: SmoothedModel,
        classes: ClassMap,
        *,
        weekly_rule: str = "geometric",
        weeks_per_year: int = 52,
        gate_scale: float = 1.0,
        dense_threshold: int = DEFAULT_DENSE_THRESHOLD,
    ):
        self.space = space
        self.classes = classes
        self.dense_threshold = dense_threshold
        self.contact = contact_array(model, space.n_classes)
        self.gate = weekly_gates(
            self.contact,
            weekly_rule=weekly_rule,
            weeks_per_year=weeks_per_year,
            gate_scale=gate_scale,
        )
        self._entries = compile_kappa(model, space)

    def build(self, values: np.ndarray) -> TransitionOperator:
        space = self.space
        class_mass = space.class_masses(values)
        sel = selection_matrix(self.contact, class_mass)
        inflow = (class_mass * self.gate) @ sel
        lam = np.zeros_like(inflow)
        positive = class_mass > 0.0
        lam[positive] = np.minimum(inflow[positive] / class_mass[positive], 1.0)
        respond_weight = (1.0 - self.gate) * lam

        diagonal = np.ones(space.size)
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        data: list[np.ndarray] = []

        def move(column: int, weight: float, targets: np.ndarray, probs: np.ndarray):
            diagonal[column] -= weight
            rows.append(targets)
            cols.append(np.full(targets.shape, column, dtype=int))
            data.append(weight * probs)

        for a_idx, b_idx, u_a, u_b, probs, succ_a, succ_b in self._entries:
            # initiate branch of column a: partner state b weighted by occupancy
            if values[b_idx] > 0.0 and sel[u_a, u_b] > 0.0:
                weight = self.gate[u_a] * sel[u_a, u_b] * values[b_idx] / class_mass[u_b]
                if weight > 0.0:
                    move(a_idx, weight, succ_a, probs)
            # respond branch of column b: initiator state a weighted by its flow
            if values[a_idx] > 0.0 and respond_weight[u_b] > 0.0:
                flow = values[a_idx] * self.gate[u_a] * sel[u_a, u_b]
                if flow > 0.0:
                    weight = respond_weight[u_b] * flow / inflow[u_b]
                    move(b_idx, weight, succ_b, probs)

        if rows:
            row_idx = np.concatenate(rows)
            col_idx = np.concatenate(cols)
            values_coo = np.concatenate(data)
        else:
            row_idx = col_idx = np.zeros(0, dtype=int)
            values_coo = np.zeros(0)

        if space.size <= self.dense_threshold:
            matrix = np.zeros((space.size, space.size))
            matrix[np.arange(space.size), np.arange(space.size)] = diagonal
            np.add.at(matrix, (row_idx, col_idx), values_coo)
        else:
            diag_idx = np.arange(space.size)
            matrix = sparse.coo_matrix(
                (
                    np.concatenate([diagonal, values_coo]),
                    (np.concatenate([diag_idx, row_idx]), np.concatenate([diag_idx, col_idx])),
                ),
                shape=(space.size, space.size),
            ).tocsc()
        return TransitionOperator(matrix)


def build_operator(
    values: np.ndarray,
    model: SmoothedModel,
    classes: ClassMap,
    *,
    space: StateSpace | None = None,
    weekly_rule: str = "geometric",
    weeks_per_year: int = 52,
    gate_scale: float = 1.0,
    dense_threshold: int = DEFAULT_DENSE_THRESHOLD,
) -> TransitionOperator:
    """One-shot operator construction; see :class:`OperatorFactory`."""
    space = space or enumerate_states(classes)
    factory = OperatorFactory(
        space,
        model,
        classes,
        weekly_rule=weekly_rule,
        weeks_per_year=weeks_per_year,
        gate_scale=gate_scale,
        dense_threshold=dense_threshold,
    )
    return factory.build(values)


@dataclass
class Occupancy:
    """Occupancy snapshot; week 0 is the state right after yearly reset."""

    year: int
    week: int
    values: np.ndarray


@dataclass
class Trajectory:
    space: StateSpace
    snapshots: list[Occupancy] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def final(self) -> Occupancy:
        return self.snapshots[-1]

    def by_key(self) -> dict[tuple[int, int], np.ndarray]:
        return {(s.year, s.week): s.values for s in self.snapshots}


def run_trajectory(
    initial: np.ndarray,
    model: SmoothedModel,
    classes: ClassMap,
    years: int,
    *,
    space: StateSpace | None = None,
    weeks_per_year: int = 52,
    snapshot_cadence: str = "weekly",
    weekly_rule: str = "geometric",
    gate_scale: float = 1.0,
    dense_threshold: int = DEFAULT_DENSE_THRESHOLD,
    validate: bool = False,
) -> Trajectory:
    """Iterate the master equation with yearly re-initialization.

    Every simulated year starts by collapsing each (h, u) block to its
    zero-activity state, then applies ``weeks_per_year`` operator steps.
    Snapshots are recorded after the reset (week 0) and after every step
    (or only at year boundaries with ``snapshot_cadence="yearly"``).
    With ``validate=True`` the run also tracks worst-case column-sum and
    mass-conservation errors in ``Trajectory.diagnostics``.
    """
    if years < 1:
        raise ValueError("years must be >= 1")
    if snapshot_cadence not in ("weekly", "yearly"):
        raise ValueError(f"unknown snapshot cadence {snapshot_cadence!r}")
    space = space or enumerate_states(classes)
    check_occupancy(initial, space)
    factory = OperatorFactory(
        space,
        model,
        classes,
        weekly_rule=weekly_rule,
        weeks_per_year=weeks_per_year,
        gate_scale=gate_scale,
        dense_threshold=dense_threshold,
    )

    values = np.array(initial, dtype=float)
    trajectory = Trajectory(space)
    column_error = 0.0
    total_error = 0.0
    class_error = 0.0
    reference_class_mass = space.class_masses(values)

    for year in range(1, years + 1):
        values = initialize_year(values, space)
        # the post-reset state is a year boundary, recorded at either cadence
        trajectory.snapshots.append(Occupancy(year, 0, values.copy()))
        for week in range(1, weeks_per_year + 1):
            operator = factory.build(values)
            if validate:
                column_error = max(
                    column_error, float(np.abs(operator.column_sums() - 1.0).max())
                )
            values = step(values, operator)
            if validate:
                total_error = max(total_error, abs(float(values.sum()) - 1.0))
                class_error = max(
                    class_error,
                    float(np.abs(space.class_masses(values) - reference_class_mass).max()),
                )
            if snapshot_cadence == "weekly" or week == weeks_per_year:
                trajectory.snapshots.append(Occupancy(year, week, values.copy()))

    if validate:
        trajectory.diagnostics = {
            "max_column_sum_error": column_error,
            "max_total_mass_error": total_error,
            "max_class_mass_error": class_error,
        }
    return trajectory


# --- CSV export ---------------------------------------------------------

TRAJECTORY_HEADER = ("year", "week", "p", "c", "h", "class_id", "fraction")


def trajectory_to_csv(trajectory: Trajectory, path, extra: dict | None = None) -> None:
    """Write non-zero occupancy rows; ``extra`` adds constant columns."""
    space = trajectory.space
    p_arr, c_arr, h_arr, u_arr = space.coordinate_arrays()
    extra = extra or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(TRAJECTORY_HEADER) + list(extra))
        for snap in trajectory.snapshots:
            (nonzero,) = np.nonzero(snap.values)
            for idx in nonzero:
                writer.writerow(
                    [
                        snap.year,
                        snap.week,
                        p_arr[idx],
                        c_arr[idx],
                        h_arr[idx],
                        u_arr[idx],
                        repr(float(snap.values[idx])),
                    ]
                    + list(extra.values())
                )


def trajectory_from_csv(path, space: StateSpace) -> Trajectory:
    """Rebuild snapshots from a trajectory CSV written for ``space``."""
    snapshots: dict[tuple[int, int], np.ndarray] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["year"]), int(row["week"]))
            values = snapshots.setdefault(key, np.zeros(space.size))
            state = NodeState(
                p=int(row["p"]), c=int(row["c"]), h=int(row["h"]), u=int(row["class_id"])
            )
            try:
                idx = space.index(state)
            except (ValueError, KeyError) as exc:
                raise ValueError(
                    f"trajectory row {state} does not match the class map / state space: {exc}"
                )
            values[idx] = float(row["fraction"])
    trajectory = Trajectory(space)
    for year, week in sorted(snapshots):
        trajectory.snapshots.append(Occupancy(year, week, snapshots[(year, week)]))
    return trajectory
