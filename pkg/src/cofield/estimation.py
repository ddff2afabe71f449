"""Estimation of the model input distributions from the event log.

Three distribution families drive the simulation:

* ``contact`` - per ordered class pair, the interaction-selection
  weight accumulated from coauthored papers.  Each paper with ``c_i``
  authors contributes ``1 / (m(u_a) * c_i)`` for every ordered pair of
  distinct authors drawn from classes ``u_a`` and ``u_b``.  The summed
  weight is not a probability (prolific pairs can exceed 1); it is
  row-normalized into a selection distribution when the transition
  operator is built.
* ``kappa`` - per ordered pair of node states, the empirical
  distribution of paired successor states observed when two scientists
  coauthor a paper, with running year-to-date states on both sides.
* idle / collision decay - identity in this application.

Multi-year estimates are smoothed into a single year-independent model
with a small hidden-state mixture fit (see :mod:`cofield.hmm`); the
degenerate paths (single year, non-convergence) fall back to the
arithmetic mean with additive smoothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .abstraction import (
    ClassMap,
    NodeState,
    ParameterBins,
    cap_annual_publications,
    relative_coauthor_count,
    scientific_age_bin,
)
from .corpus import EventLog
from .hmm import HmmConfig, smooth_series

WEEKS_PER_YEAR = 52


@dataclass
class ContactMatrix:
    """Interaction-selection weights per ordered class pair; absent pair is 0."""

    year: int | None
    weights: dict[tuple[int, int], float] = field(default_factory=dict)

    def weight(self, u_a: int, u_b: int) -> float:
        return self.weights.get((u_a, u_b), 0.0)

    def total(self) -> float:
        return sum(self.weights.values())

    def row_sum(self, u_a: int) -> float:
        return sum(w for (a, _), w in self.weights.items() if a == u_a)

    def validate(self) -> None:
        for pair, w in self.weights.items():
            if w < 0:
                raise ValueError(f"negative contact weight at {pair}")


@dataclass
class KappaTable:
    """Paired state-transition distributions keyed by ordered state pair."""

    year: int | None
    entries: dict[tuple[NodeState, NodeState], tuple[tuple[float, tuple[NodeState, NodeState]], ...]] = field(
        default_factory=dict
    )

    def validate(self, tol: float = 1e-12) -> None:
        for pair, successors in self.entries.items():
            total = sum(p for p, _ in successors)
            if abs(total - 1.0) > tol:
                raise ValueError(f"kappa distribution for {pair} sums to {total}")
            if any(p < 0 for p, _ in successors):
                raise ValueError(f"negative kappa probability for {pair}")


@dataclass
class DecayModel:
    """Idle and collision distributions; both identity in this application."""

    def idle(self, state: NodeState):
        return ((1.0, state),)

    def collision(self, state: NodeState):
        return ((1.0, state),)


@dataclass
class SmoothedModel:
    """Year-independent contact and kappa tables plus the fit configuration."""

    contact: ContactMatrix
    kappa: KappaTable
    hmm_config: HmmConfig
    converged: bool = True


def pair_probability(c_i: int, m_ua: int) -> float:
    """Share of one author pair in a paper: ``1 / (m(u_a) * c_i)``."""
    if c_i <= 0 or m_ua <= 0:
        raise ZeroDivisionError(
            f"pair_probability needs positive author count and class size, "
            f"got c_i={c_i}, m={m_ua}"
        )
    return 1.0 / (m_ua * c_i)


def _class_of(classes: ClassMap, institution: str) -> int:
    try:
        return classes.class_of[institution]
    except KeyError:
        raise ValueError(
            f"institution {institution!r} is not covered by the class map; "
            "re-run the abstract stage on this corpus"
        ) from None


def compute_contact(log: EventLog, classes: ClassMap, year: int) -> ContactMatrix:
    """Accumulate contact weights from one year of coauthored papers.

    Ordered pairs of distinct authors contribute; a paper never pairs an
    author with itself, so solo papers add no contact weight.
    """
    weights: dict[tuple[int, int], float] = {}
    for pub in log.publications_in(year):
        c_i = len(pub.author_ids)
        author_classes = [_class_of(classes, log.institution_of(a)) for a in pub.author_ids]
        for i, u_a in enumerate(author_classes):
            share = pair_probability(c_i, classes.m[u_a])
            for j, u_b in enumerate(author_classes):
                if i == j:
                    continue
                key = (u_a, u_b)
                weights[key] = weights.get(key, 0.0) + share
    matrix = ContactMatrix(year, weights)
    matrix.validate()
    return matrix


class _RunningTally:
    __slots__ = ("publications", "coauthors")

    def __init__(self):
        self.publications = 0
        self.coauthors: set[str] = set()


def compute_kappa(
    log: EventLog,
    classes: ClassMap,
    bins: ParameterBins,
    year: int,
) -> KappaTable:
    """Observe paired state transitions across one year of papers.

    Papers are processed in ascending ``paper_id`` order.  Each author
    carries a running year-to-date state: capped publications published
    so far this year and the coauthor category of the running coauthor
    count relative to the raw publication count.  For every ordered pair
    of distinct authors on a paper, the (before, after) state pair is
    recorded; per observed state pair the successor probabilities are
    the empirical frequencies.
    """
    tallies: dict[str, _RunningTally] = {}
    age_cache: dict[str, int] = {}
    observations: dict[tuple[NodeState, NodeState], dict[tuple[NodeState, NodeState], int]] = {}

    def state_of(author_id: str) -> NodeState:
        tally = tallies.setdefault(author_id, _RunningTally())
        h = age_cache.get(author_id)
        if h is None:
            h = scientific_age_bin(log.first_publication_year(author_id))
            age_cache[author_id] = h
        u = _class_of(classes, log.institution_of(author_id))
        return NodeState(
            p=cap_annual_publications(tally.publications),
            c=relative_coauthor_count(len(tally.coauthors), tally.publications),
            h=h,
            u=u,
        )

    for pub in sorted(log.publications_in(year), key=lambda p: p.paper_id):
        before = {a: state_of(a) for a in pub.author_ids}
        for a in pub.author_ids:
            tally = tallies[a]
            tally.publications += 1
            tally.coauthors.update(b for b in pub.author_ids if b != a)
        after = {a: state_of(a) for a in pub.author_ids}
        for a in pub.author_ids:
            for b in pub.author_ids:
                if a == b:
                    continue
                key = (before[a], before[b])
                succ = (after[a], after[b])
                observations.setdefault(key, {}).setdefault(succ, 0)
                observations[key][succ] += 1

    entries = {}
    for key in sorted(observations):
        succ_counts = observations[key]
        total = sum(succ_counts.values())
        entries[key] = tuple(
            (count / total, succ) for succ, count in sorted(succ_counts.items())
        )
    table = KappaTable(year, entries)
    table.validate()
    return table


def annual_to_weekly(
    p_year: float,
    *,
    weeks_per_year: int = WEEKS_PER_YEAR,
    rule: str = "geometric",
) -> float:
    """Convert an annual probability to its per-week equivalent.

    The default geometric rule solves ``1 - (1 - p_week)^weeks = p_year``
    so the annual aggregate of independent weekly draws reproduces the
    annual estimate; ``rule="linear"`` divides by the week count instead.
    """
    if not (0.0 <= p_year <= 1.0):
        raise ValueError(f"annual probability {p_year} outside [0, 1]")
    if rule == "geometric":
        return 1.0 - (1.0 - p_year) ** (1.0 / weeks_per_year)
    if rule == "linear":
        return p_year / weeks_per_year
    raise ValueError(f"unknown weekly conversion rule {rule!r}")


def _mean_contact(yearly: list[ContactMatrix], epsilon: float) -> dict[tuple[int, int], float]:
    keys = sorted({k for m in yearly for k in m.weights})
    n = len(yearly)
    return {k: sum(m.weight(*k) for m in yearly) / n + epsilon for k in keys}


def _mean_kappa_row(rows: list[dict], epsilon: float) -> tuple:
    succs = sorted({s for row in rows for s in row})
    raw = {s: sum(row.get(s, 0.0) for row in rows) / len(rows) + epsilon for s in succs}
    total = sum(raw.values())
    return tuple((v / total, s) for s, v in sorted(raw.items()))


def estimate_smoothed(
    yearly: list[tuple[ContactMatrix, KappaTable]],
    config: HmmConfig | None = None,
) -> SmoothedModel:
    """Fuse per-year tables into one year-independent model.

    With two or more training years, each table is flattened into a
    per-year observation matrix and smoothed by the hidden-state mixture
    fit; since the smoothed vector is a convex combination of the yearly
    vectors, kappa rows stay proper distributions and contact weights
    stay non-negative.  A single training year, a zero-iteration
    configuration or a failed fit falls back to the arithmetic mean of
    the yearly tables with additive smoothing ``epsilon``.
    """
    if not yearly:
        raise ValueError("estimate_smoothed needs at least one training year")
    config = config or HmmConfig()
    contacts = [c for c, _ in yearly]
    kappas = [k for _, k in yearly]
    converged = True

    # contact: one series over the union of class pairs, absent pair = 0
    contact_keys = sorted({k for m in contacts for k in m.weights})
    if len(yearly) < 2 or not contact_keys:
        contact_weights = _mean_contact(contacts, config.epsilon)
        converged = False if len(yearly) < 2 else converged
    else:
        series = np.array(
            [[m.weight(*k) for k in contact_keys] for m in contacts], dtype=float
        )
        smoothed, ok = smooth_series(series, config)
        if ok:
            contact_weights = dict(zip(contact_keys, smoothed.tolist()))
        else:
            converged = False
            contact_weights = _mean_contact(contacts, config.epsilon)

    # kappa: per state pair, a series over the union of observed successors
    kappa_entries = {}
    kappa_keys = sorted({k for t in kappas for k in t.entries})
    for key in kappa_keys:
        rows = [dict((s, p) for p, s in t.entries[key]) for t in kappas if key in t.entries]
        if len(rows) < 2:
            kappa_entries[key] = _mean_kappa_row(rows, config.epsilon)
            continue
        succs = sorted({s for row in rows for s in row})
        series = np.array([[row.get(s, 0.0) for s in succs] for row in rows], dtype=float)
        smoothed, ok = smooth_series(series, config)
        if not ok:
            converged = False
            kappa_entries[key] = _mean_kappa_row(rows, config.epsilon)
            continue
        total = float(smoothed.sum())
        kappa_entries[key] = tuple(
            (float(v) / total, s) for s, v in zip(succs, smoothed)
        )

    contact = ContactMatrix(None, contact_weights)
    kappa = KappaTable(None, kappa_entries)
    contact.validate()
    kappa.validate(tol=1e-9)
    return SmoothedModel(contact, kappa, config, converged)


def initial_occupancy(log: EventLog, classes: ClassMap, space) -> np.ndarray:
    """Population composition as an occupancy vector.

    Every author with at least one proceedings publication lands in the
    zero-activity state of their (scientific-age decade, class) block;
    authors without publications carry no defined age and are left out.
    """
    values = np.zeros(space.size)
    counted = 0
    for author_id in log.authors:
        try:
            first = log.first_publication_year(author_id)
        except ValueError:
            continue
        state = NodeState(
            p=0,
            c=0,
            h=scientific_age_bin(first),
            u=_class_of(classes, log.institution_of(author_id)),
        )
        values[space.index(state)] += 1.0
        counted += 1
    if counted == 0:
        raise ValueError("no author in the log has a defined scientific age")
    return values / counted


def uniform_baseline(classes: ClassMap, total_weight: float | None = None) -> ContactMatrix:
    """Contact matrix giving every scientist pair the same weight.

    Weights are ``m(u_a) * m(u_b) / N**2``, which sums to 1 over all
    ordered class pairs; ``total_weight`` rescales the matrix (pass the
    estimated matrix total so both models share one interaction volume).
    """
    population = classes.population()
    if population <= 0:
        raise ValueError("uniform_baseline needs a populated class map")
    scale = 1.0 if total_weight is None else float(total_weight)
    weights = {}
    for u_a in classes.class_ids():
        for u_b in classes.class_ids():
            weights[(u_a, u_b)] = scale * classes.m[u_a] * classes.m[u_b] / population**2
    return ContactMatrix(None, weights)


# --- JSON serialization -------------------------------------------------

def _state_to_list(state: NodeState) -> list:
    return [state.p, state.c, state.h, state.u]


def _state_from_list(raw) -> NodeState:
    return NodeState(int(raw[0]), int(raw[1]), int(raw[2]), int(raw[3]))


def contact_to_dict(matrix: ContactMatrix) -> dict:
    return {
        "year": matrix.year,
        "weights": [[a, b, w] for (a, b), w in sorted(matrix.weights.items())],
    }


def contact_from_dict(raw: dict) -> ContactMatrix:
    return ContactMatrix(
        raw.get("year"),
        {(int(a), int(b)): float(w) for a, b, w in raw["weights"]},
    )


def kappa_to_dict(table: KappaTable) -> dict:
    return {
        "year": table.year,
        "entries": [
            {
                "a": _state_to_list(key[0]),
                "b": _state_to_list(key[1]),
                "succ": [[p, _state_to_list(sa), _state_to_list(sb)] for p, (sa, sb) in succs],
            }
            for key, succs in sorted(table.entries.items())
        ],
    }


def kappa_from_dict(raw: dict) -> KappaTable:
    entries = {}
    for item in raw["entries"]:
        key = (_state_from_list(item["a"]), _state_from_list(item["b"]))
        entries[key] = tuple(
            (float(p), (_state_from_list(sa), _state_from_list(sb)))
            for p, sa, sb in item["succ"]
        )
    return KappaTable(raw.get("year"), entries)


def save_model(model: SmoothedModel, path) -> None:
    payload = {
        "kind": "cofield-smoothed-model",
        "contact": contact_to_dict(model.contact),
        "kappa": kappa_to_dict(model.kappa),
        "hmm": {
            "hidden_states": model.hmm_config.hidden_states,
            "max_iterations": model.hmm_config.max_iterations,
            "seed": model.hmm_config.seed,
            "tolerance": model.hmm_config.tolerance,
            "epsilon": model.hmm_config.epsilon,
        },
        "converged": model.converged,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_model(path) -> SmoothedModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "cofield-smoothed-model":
        raise ValueError(f"{path} is not a smoothed-model file")
    hmm = payload.get("hmm", {})
    config = HmmConfig(
        hidden_states=int(hmm.get("hidden_states", 2)),
        max_iterations=int(hmm.get("max_iterations", 200)),
        seed=int(hmm.get("seed", 0)),
        tolerance=float(hmm.get("tolerance", 1e-8)),
        epsilon=float(hmm.get("epsilon", 1e-6)),
    )
    return SmoothedModel(
        contact_from_dict(payload["contact"]),
        kappa_from_dict(payload["kappa"]),
        config,
        bool(payload.get("converged", True)),
    )
