"""Seeded synthetic corpora and model instances.

Everything here is deterministic in the seed.  The corpus generator
produces the three input files of the pipeline with realistic texture
(skewed institution sizes, debut papers spreading scientific age over
the decades, within-institution collaboration bias, a sprinkle of
non-proceedings rows and unresolved affiliations).  The model-instance
generators build class maps, contact matrices and transition tables
directly, for unit tests and the acceptance suite.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .abstraction import ClassMap, NodeState, ParameterBins
from .countries import continent_of
from .estimation import ContactMatrix, KappaTable, SmoothedModel
from .hmm import HmmConfig
from .meanfield import StateSpace

DEFAULT_COUNTRIES = ("NL", "NL", "NL", "US", "DE", "GB", "FR", "BE", "JP", "BR", "AU", "IT")


# --- corpus generation ----------------------------------------------------

def generate_corpus(
    seed: int = 0,
    *,
    n_authors: int = 120,
    n_institutions: int = 18,
    years: tuple[int, int] = (2006, 2010),
    papers_per_year: int = 60,
    countries: tuple[str, ...] = DEFAULT_COUNTRIES,
    unknown_share: float = 0.03,
    other_venue_share: float = 0.1,
):
    """Return (publications, authors, affiliations) row dicts."""
    rng = np.random.default_rng(seed)

    affiliations = []
    inst_ids = [f"I{i:04d}" for i in range(n_institutions)]
    for i, inst in enumerate(inst_ids):
        country = countries[int(rng.integers(len(countries)))]
        affiliations.append(
            {
                "institution_id": inst,
                "label": f"institute-{i:02d}",
                "country_code": country,
                "continent_code": continent_of(country),
                "latitude": round(float(rng.uniform(-60, 70)), 4),
                "longitude": round(float(rng.uniform(-180, 180)), 4),
            }
        )

    # skewed institution sizes: preferential weights over the id ranks
    weights = 1.0 / (np.arange(n_institutions) + 1.0) ** 1.2
    weights /= weights.sum()
    authors = []
    author_ids = [f"A{i:04d}" for i in range(n_authors)]
    for i, author in enumerate(author_ids):
        if rng.random() < unknown_share:
            affiliation = ""
        else:
            affiliation = inst_ids[int(rng.choice(n_institutions, p=weights))]
        authors.append(
            {
                "author_id": author,
                "affiliation_id": affiliation,
                "display_name": f"author {i:04d}",
            }
        )
    home = {a["author_id"]: a["affiliation_id"] for a in authors}

    publications = []
    counter = 0

    def add_paper(year, members, venue="proceedings"):
        nonlocal counter
        publications.append(
            {
                "paper_id": f"P{counter:05d}",
                "year": year,
                "venue_kind": venue,
                "author_ids": ";".join(members),
            }
        )
        counter += 1

    # debut papers set the first publication year, hence the age decade
    for author in author_ids:
        debut = int(rng.integers(1972, years[0] + 1))
        add_paper(debut, [author])

    colleagues = {}
    for author in author_ids:
        colleagues.setdefault(home[author], []).append(author)

    for year in range(years[0], years[1] + 1):
        for _ in range(papers_per_year):
            size = int(rng.choice([1, 2, 3, 4, 5, 6], p=[0.1, 0.35, 0.25, 0.15, 0.1, 0.05]))
            first = author_ids[int(rng.integers(n_authors))]
            members = [first]
            pool = colleagues.get(home[first], [])
            while len(members) < size:
                if pool and rng.random() < 0.6:
                    candidate = pool[int(rng.integers(len(pool)))]
                else:
                    candidate = author_ids[int(rng.integers(n_authors))]
                if candidate not in members:
                    members.append(candidate)
            venue = "other" if rng.random() < other_venue_share else "proceedings"
            add_paper(year, members, venue)

    return publications, authors, affiliations


def write_corpus(directory, publications, authors, affiliations) -> dict[str, Path]:
    """Write the three corpus CSVs; returns the file paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "publications": directory / "publications.csv",
        "authors": directory / "authors.csv",
        "affiliations": directory / "affiliations.csv",
    }
    specs = [
        (paths["publications"], publications, ["paper_id", "year", "venue_kind", "author_ids"]),
        (paths["authors"], authors, ["author_id", "affiliation_id", "display_name"]),
        (
            paths["affiliations"],
            affiliations,
            ["institution_id", "label", "country_code", "continent_code", "latitude", "longitude"],
        ),
    ]
    for path, rows, header in specs:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            writer.writerows(rows)
    return paths


# --- model instances -------------------------------------------------------

def synthetic_class_map(labels: list[str], sizes: list[int]) -> ClassMap:
    """Class map built directly from labels like ``"NL:tu-delft"``."""
    ordered = sorted(range(len(labels)), key=lambda i: labels[i])
    class_of = {}
    members = {}
    label_map = {}
    m = {}
    country_of = {}
    for u, i in enumerate(ordered):
        label = labels[i]
        label_map[u] = label
        members[u] = (label,)
        class_of[label] = u
        m[u] = sizes[i]
        country_of[u] = label.split(":", 1)[0] if ":" in label else None
    return ClassMap(class_of, members, label_map, m, country_of)


def bump_kappa(
    space: StateSpace,
    *,
    decades_by_class: dict[int, tuple[int, ...]],
    increment_by_decade: dict[int, int],
    branch_probs: tuple[float, float] = (0.75, 0.25),
    c_values: tuple[int, ...] = (0, 1),
) -> KappaTable:
    """Transition table where every collaboration bumps both sides' output.

    Covers every ordered pair of states drawn from the listed decades
    and coauthor categories, so the reachable set is closed.  The first
    branch bumps each side's publications by its decade increment, the
    second by twice that; both set the coauthor category to 1.
    """
    bins = space.bins
    singles = [
        NodeState(p, c, h, u)
        for u in range(space.n_classes)
        for h in decades_by_class[u]
        for c in c_values
        for p in range(bins.n_p)
    ]

    def bumped(state: NodeState, factor: int) -> NodeState:
        inc = increment_by_decade[state.h] * factor
        return NodeState(min(state.p + inc, bins.publication_cap), 1, state.h, state.u)

    entries = {}
    for a in singles:
        for b in singles:
            entries[(a, b)] = (
                (branch_probs[0], (bumped(a, 1), bumped(b, 1))),
                (branch_probs[1], (bumped(a, 2), bumped(b, 2))),
            )
    table = KappaTable(None, entries)
    table.validate()
    return table


def reference_two_class_instance():
    """Fixed two-class instance used for the oracle-versus-mean-field check.

    Two classes of equal population, one decade each, contact rows
    summing to 0.40 and 0.30 annually, and a two-branch bump table.
    Returns (classes, space, model, initial_occupancy).
    """
    classes = synthetic_class_map(["NL:inst-a", "US:inst-b"], [50, 50])
    space = StateSpace(classes.n_classes)
    contact = ContactMatrix(
        None,
        {(0, 0): 0.22, (0, 1): 0.18, (1, 0): 0.18, (1, 1): 0.12},
    )
    kappa = bump_kappa(
        space,
        decades_by_class={0: (90,), 1: (2000,)},
        increment_by_decade={90: 1, 2000: 1},
    )
    model = SmoothedModel(contact, kappa, HmmConfig())
    initial = np.zeros(space.size)
    initial[space.index(NodeState(0, 0, 90, 0))] = 0.5
    initial[space.index(NodeState(0, 0, 2000, 1))] = 0.5
    return classes, space, model, initial


def random_small_instance(seed: int, max_classes: int = 5):
    """Randomized small instance: classes, space, model, initial occupancy.

    Exercises the awkward corners on purpose: contact rows above 1
    (gate saturation), missing rows, zero-mass classes, and sparse
    transition tables.
    """
    rng = np.random.default_rng(seed)
    bins = ParameterBins()
    n_classes = int(rng.integers(1, max_classes + 1))
    labels = [f"C{seed % 97}:inst-{i}" for i in range(n_classes)]
    sizes = [int(rng.integers(1, 40)) for _ in range(n_classes)]
    classes = synthetic_class_map(labels, sizes)
    space = StateSpace(n_classes, bins)

    contact_weights = {}
    for u_a in range(n_classes):
        if rng.random() < 0.15:
            continue  # class without any contact row
        for u_b in range(n_classes):
            if rng.random() < 0.4:
                contact_weights[(u_a, u_b)] = float(rng.uniform(0.0, 0.6))
    contact = ContactMatrix(None, contact_weights)

    def random_state() -> NodeState:
        return NodeState(
            p=int(rng.integers(0, bins.n_p)),
            c=int(rng.integers(0, bins.n_c)),
            h=int(bins.decades[rng.integers(0, bins.n_h)]),
            u=int(rng.integers(0, n_classes)),
        )

    def successor(state: NodeState) -> NodeState:
        return NodeState(
            p=int(rng.integers(state.p, bins.n_p)),
            c=int(rng.integers(0, bins.n_c)),
            h=state.h,
            u=state.u,
        )

    entries = {}
    for _ in range(int(rng.integers(10, 80))):
        a, b = random_state(), random_state()
        n_succ = int(rng.integers(1, 4))
        raw = rng.uniform(0.1, 1.0, size=n_succ)
        probs = raw / raw.sum()
        entries[(a, b)] = tuple(
            (float(p), (successor(a), successor(b))) for p in probs
        )
    kappa = KappaTable(None, entries)
    kappa.validate(tol=1e-9)

    weights = rng.uniform(0.0, 1.0, size=space.size) * (rng.random(space.size) < 0.05)
    if rng.random() < 0.3 and n_classes > 1:
        weights[space.class_slice(0)] = 0.0  # leave one class empty
    if weights.sum() == 0.0:
        weights[space.index(NodeState(0, 0, 90, n_classes - 1))] = 1.0
    initial = weights / weights.sum()

    model = SmoothedModel(contact, kappa, HmmConfig())
    return classes, space, model, initial


def transitive_contact(n_groups: int = 3, seed: int = 7) -> ContactMatrix:
    """Contact matrix with planted triadic closure over 3-class groups.

    Weights are hierarchical: exactly 1.0 inside the first (tight)
    group, slightly weaker inside the other groups, medium between
    adjacent groups and weak otherwise, with a small jitter that never
    crosses the level gaps.  Strong legs therefore only occur inside
    groups, where the third leg is strong too, so the triad profile is
    non-decreasing in the threshold and defined up to threshold 1.
    """
    if n_groups < 2:
        raise ValueError("need at least two groups")
    rng = np.random.default_rng(seed)
    n_classes = 3 * n_groups
    group = [i // 3 for i in range(n_classes)]
    weights = {}
    for a in range(n_classes):
        for b in range(n_classes):
            if a == b:
                continue
            if group[a] == group[b]:
                base = 1.0 if group[a] == 0 else 0.93
                jitter = 0.0 if group[a] == 0 else float(rng.uniform(-0.02, 0.02))
            elif abs(group[a] - group[b]) == 1:
                base, jitter = 0.45, float(rng.uniform(-0.02, 0.02))
            else:
                base, jitter = 0.30, float(rng.uniform(-0.02, 0.02))
            weights[(a, b)] = base + jitter
    return ContactMatrix(None, weights)


def dutch_heavy_setup():
    """Two Dutch and two foreign classes with collaboration concentrated in NL.

    Returns (classes, space, model) where the contact matrix keeps most
    of the interaction volume between the Dutch classes.
    """
    classes = synthetic_class_map(
        ["NL:inst-a", "NL:inst-b", "US:inst-c", "DE:inst-d"], [30, 30, 30, 30]
    )
    space = StateSpace(classes.n_classes)
    nl = [u for u, cc in classes.country_of.items() if cc == "NL"]
    foreign = [u for u in classes.class_ids() if u not in nl]
    weights = {}
    for a in nl:
        for b in nl:
            weights[(a, b)] = 0.30
    for a in foreign:
        for b in foreign:
            weights[(a, b)] = 0.02
    for a in nl:
        for b in foreign:
            weights[(a, b)] = 0.02
            weights[(b, a)] = 0.02
    contact = ContactMatrix(None, weights)
    decades = {u: (90,) for u in classes.class_ids()}
    kappa = bump_kappa(
        space, decades_by_class=decades, increment_by_decade={90: 1}
    )
    return classes, space, SmoothedModel(contact, kappa, HmmConfig())


def age_advantaged_setup():
    """Single class, all decades, with older decades collaborating harder.

    The per-decade publication increment grows with seniority, so the
    final-year average output must increase from the 2000s group to the
    1970s group.
    """
    classes = synthetic_class_map(["NL:inst-solo"], [60])
    space = StateSpace(1)
    contact = ContactMatrix(None, {(0, 0): 0.8})
    kappa = bump_kappa(
        space,
        decades_by_class={0: space.bins.decades},
        increment_by_decade={70: 4, 80: 3, 90: 2, 2000: 1, 2010: 2},
    )
    model = SmoothedModel(contact, kappa, HmmConfig())
    initial = np.zeros(space.size)
    for decade in space.bins.decades:
        initial[space.index(NodeState(0, 0, decade, 0))] = 1.0 / space.bins.n_h
    return classes, space, model, initial
