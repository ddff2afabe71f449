import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cofield.abstraction import ClassMap, NodeState, ParameterBins
from cofield.corpus import AffiliationRecord, AuthorRecord, EventLog, PublicationRecord
from cofield.estimation import (
    ContactMatrix,
    DecayModel,
    KappaTable,
    annual_to_weekly,
    compute_contact,
    compute_kappa,
    contact_from_dict,
    contact_to_dict,
    estimate_smoothed,
    initial_occupancy,
    kappa_from_dict,
    kappa_to_dict,
    load_model,
    pair_probability,
    save_model,
    uniform_baseline,
)
from cofield.hmm import HmmConfig
from cofield.meanfield import StateSpace
from cofield.synth import synthetic_class_map

BINS = ParameterBins()


def brute_force_contact(papers, class_of, m):
    """Independent oracle: enumerate ordered author pairs paper by paper."""
    weights = {}
    for author_ids in papers:
        c_i = len(author_ids)
        for a, b in itertools.permutations(author_ids, 2):
            key = (class_of[a], class_of[b])
            weights[key] = weights.get(key, 0.0) + 1.0 / (m[class_of[a]] * c_i)
    return weights


def log_of(papers, author_class, classes):
    """EventLog whose authors sit in one institution per class."""
    affiliations = {
        f"inst{u}": AffiliationRecord(f"inst{u}", f"inst{u}", "US", "north-america", 0, 0)
        for u in set(author_class.values())
    }
    authors = {a: AuthorRecord(a, f"inst{u}") for a, u in author_class.items()}
    publications = [
        PublicationRecord(f"p{k:03d}", year, "proceedings", tuple(members))
        for k, (year, members) in enumerate(papers)
    ]
    return EventLog(publications, authors, affiliations)


def class_map_for(author_class, m_values):
    n = len(m_values)
    return ClassMap(
        class_of={f"inst{u}": u for u in range(n)},
        members={u: (f"inst{u}",) for u in range(n)},
        labels={u: f"U{u}" for u in range(n)},
        m={u: m_values[u] for u in range(n)},
        country_of={u: "US" for u in range(n)},
    )


# --- pair probability --------------------------------------------------------

def test_pair_probability_values():
    assert pair_probability(2, 1) == pytest.approx(0.5, abs=1e-10)
    assert pair_probability(4, 10) == pytest.approx(0.025, abs=1e-10)


def test_pair_probability_rejects_zero():
    with pytest.raises(ZeroDivisionError):
        pair_probability(0, 5)
    with pytest.raises(ZeroDivisionError):
        pair_probability(3, 0)


# --- contact -----------------------------------------------------------------

def test_contact_single_paper_hand_enumeration():
    """2 authors in class 0, 1 in class 1, m(0)=2, c_i=3 -> weight 1/3."""
    author_class = {"a": 0, "b": 0, "c": 1}
    classes = class_map_for(author_class, [2, 1])
    log = log_of([(2007, ["a", "b", "c"])], author_class, classes)
    contact = compute_contact(log, classes, 2007)
    assert contact.weight(0, 1) == pytest.approx(1.0 / 3.0, abs=1e-12)
    expected = brute_force_contact([["a", "b", "c"]], author_class, {0: 2, 1: 1})
    for key, value in expected.items():
        assert contact.weight(*key) == pytest.approx(value, abs=1e-12)


def test_contact_empty_year():
    author_class = {"a": 0}
    classes = class_map_for(author_class, [1])
    log = log_of([(2007, ["a"])], author_class, classes)
    assert compute_contact(log, classes, 2009).weights == {}


def test_contact_solo_papers_add_nothing():
    author_class = {"a": 0}
    classes = class_map_for(author_class, [1])
    log = log_of([(2007, ["a"])], author_class, classes)
    assert compute_contact(log, classes, 2007).weights == {}


def test_contact_symmetric_setup():
    """Equal class sizes and author counts give a symmetric matrix."""
    author_class = {"a": 0, "b": 0, "x": 1, "y": 1}
    classes = class_map_for(author_class, [2, 2])
    papers = [(2007, ["a", "x"]), (2007, ["b", "y", "a"])]
    log = log_of(papers, author_class, classes)
    contact = compute_contact(log, classes, 2007)
    oracle = brute_force_contact(
        [m for _, m in papers], author_class, {0: 2, 1: 2}
    )
    assert contact.weight(0, 1) == pytest.approx(contact.weight(1, 0), abs=1e-12)
    for key, value in oracle.items():
        assert contact.weight(*key) == pytest.approx(value, abs=1e-12)


def test_contact_additive_over_disjoint_papers():
    author_class = {"a": 0, "b": 1, "c": 1}
    classes = class_map_for(author_class, [1, 2])
    paper1 = (2007, ["a", "b"])
    paper2 = (2007, ["a", "c", "b"])
    both = compute_contact(log_of([paper1, paper2], author_class, classes), classes, 2007)
    only1 = compute_contact(log_of([paper1], author_class, classes), classes, 2007)
    only2 = compute_contact(log_of([paper2], author_class, classes), classes, 2007)
    keys = set(both.weights) | set(only1.weights) | set(only2.weights)
    for key in keys:
        assert both.weight(*key) == pytest.approx(
            only1.weight(*key) + only2.weight(*key), abs=1e-12
        )


def test_contact_invariant_under_relabeling():
    author_class = {"a": 0, "b": 1, "c": 1}
    classes = class_map_for(author_class, [1, 2])
    papers = [(2007, ["a", "b"]), (2007, ["c", "a"])]
    renamed = [(2007, ["b", "a"]), (2007, ["a", "c"])]
    c1 = compute_contact(log_of(papers, author_class, classes), classes, 2007)
    c2 = compute_contact(log_of(renamed, author_class, classes), classes, 2007)
    assert c1.weights.keys() == c2.weights.keys()
    for key in c1.weights:
        assert c1.weight(*key) == pytest.approx(c2.weight(*key), abs=1e-12)


# --- kappa -------------------------------------------------------------------

def kappa_toy_log():
    """Debuts in the 90s / 2000s, one joint 2007 paper."""
    author_class = {"x": 0, "y": 1}
    classes = class_map_for(author_class, [1, 1])
    papers = [
        (1995, ["x"]),
        (2005, ["y"]),
        (2007, ["x", "y"]),
    ]
    return log_of(papers, author_class, classes), classes


def test_kappa_single_observation():
    log, classes = kappa_toy_log()
    table = compute_kappa(log, classes, BINS, 2007)
    key = (NodeState(0, 0, 90, 0), NodeState(0, 0, 2000, 1))
    assert key in table.entries
    successors = table.entries[key]
    assert len(successors) == 1
    prob, (succ_a, succ_b) = successors[0]
    assert prob == 1.0
    assert succ_a == NodeState(1, 1, 90, 0)
    assert succ_b == NodeState(1, 1, 2000, 1)
    # the mirrored ordered pair is recorded symmetrically
    mirror = table.entries[(key[1], key[0])]
    assert mirror[0][1] == (succ_b, succ_a)


def test_kappa_empty_year():
    log, classes = kappa_toy_log()
    assert compute_kappa(log, classes, BINS, 2009).entries == {}


def test_kappa_two_observations_split_evenly():
    """Same before-pair, two distinct successor pairs -> 0.5 / 0.5."""
    author_class = {"x": 0, "y": 1, "w": 0, "v": 1, "f1": 0, "f2": 1, "f3": 0}
    classes = class_map_for(author_class, [4, 3])
    papers = [
        (1995, ["x"]), (1995, ["w"]),
        (2005, ["y"]), (2005, ["v"]),
        # fillers sit in other age decades so only (w, v) shares the key
        (1975, ["f1"]), (1975, ["f3"]), (1985, ["f2"]),
        # first pair moves to coauthor category 1 on both sides
        (2007, ["x", "y"]),
        # second pair sits on a 5-author paper: 4 coauthors -> category 2
        (2007, ["w", "v", "f1", "f2", "f3"]),
    ]
    log = log_of(papers, author_class, classes)
    table = compute_kappa(log, classes, BINS, 2007)
    key = (NodeState(0, 0, 90, 0), NodeState(0, 0, 2000, 1))
    successors = table.entries[key]
    assert len(successors) == 2
    assert sorted(p for p, _ in successors) == [0.5, 0.5]
    succ_states = {succ for _, succ in successors}
    assert (NodeState(1, 1, 90, 0), NodeState(1, 1, 2000, 1)) in succ_states
    assert (NodeState(1, 2, 90, 0), NodeState(1, 2, 2000, 1)) in succ_states


def test_kappa_distributions_normalized_and_monotone():
    from cofield.synth import generate_corpus, write_corpus
    from cofield.corpus import load_corpus
    from cofield.abstraction import ScientistDistribution, abstract_classes

    publications, authors, affiliations = generate_corpus(seed=11, n_authors=40, papers_per_year=25)
    import tempfile, pathlib

    with tempfile.TemporaryDirectory() as tmp:
        paths = write_corpus(pathlib.Path(tmp), publications, authors, affiliations)
        log = load_corpus(
            paths["publications"], paths["authors"], paths["affiliations"],
            allow_unlisted_authors=True,
        )
    classes = abstract_classes(
        ScientistDistribution.from_log(log), log.affiliations
    )
    table = compute_kappa(log, classes, BINS, 2007)
    table.validate(tol=1e-12)
    for (a, b), successors in table.entries.items():
        for _, (sa, sb) in successors:
            assert sa.p >= a.p and sb.p >= b.p
            assert sa.c >= a.c and sb.c >= b.c
            assert (sa.h, sa.u) == (a.h, a.u)
            assert (sb.h, sb.u) == (b.h, b.u)


# --- weekly conversion ---------------------------------------------------------

def test_annual_to_weekly_endpoints():
    assert annual_to_weekly(0.0) == 0.0
    assert annual_to_weekly(1.0) == 1.0


def test_annual_to_weekly_half():
    value = annual_to_weekly(0.5)
    assert value == pytest.approx(0.013241305740134823, abs=1e-12)
    assert 1.0 - (1.0 - value) ** 52 == pytest.approx(0.5, abs=1e-10)


@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_annual_to_weekly_round_trip(p):
    weekly = annual_to_weekly(p)
    assert 0.0 <= weekly <= 1.0
    assert 1.0 - (1.0 - weekly) ** 52 == pytest.approx(p, abs=1e-10)


@given(st.floats(min_value=0.0, max_value=0.999), st.floats(min_value=0.0001, max_value=0.001))
def test_annual_to_weekly_monotone(p, bump):
    assert annual_to_weekly(min(p + bump, 1.0)) >= annual_to_weekly(p)


def test_annual_to_weekly_linear_rule_and_errors():
    assert annual_to_weekly(0.52, rule="linear") == pytest.approx(0.01, abs=1e-12)
    with pytest.raises(ValueError):
        annual_to_weekly(1.5)
    with pytest.raises(ValueError):
        annual_to_weekly(-0.1)
    with pytest.raises(ValueError):
        annual_to_weekly(0.5, rule="daily")


# --- decay ---------------------------------------------------------------------

def test_decay_model_is_identity():
    decay = DecayModel()
    state = NodeState(3, 2, 90, 0)
    assert decay.idle(state) == ((1.0, state),)
    assert decay.collision(state) == ((1.0, state),)


# --- smoothing -------------------------------------------------------------------

def constant_year_tables(value=0.4):
    contact = ContactMatrix(2006, {(0, 0): value, (0, 1): value / 2})
    key = (NodeState(0, 0, 90, 0), NodeState(0, 0, 90, 0))
    succ = (NodeState(1, 1, 90, 0), NodeState(1, 1, 90, 0))
    kappa = KappaTable(2006, {key: ((1.0, succ),)})
    return contact, kappa


def test_smoothed_constant_sequence_is_identity():
    contact, kappa = constant_year_tables()
    model = estimate_smoothed([(contact, kappa)] * 3)
    assert model.contact.weight(0, 0) == pytest.approx(0.4, abs=1e-6)
    assert model.contact.weight(0, 1) == pytest.approx(0.2, abs=1e-6)
    key = next(iter(kappa.entries))
    assert model.kappa.entries[key][0][0] == pytest.approx(1.0, abs=1e-6)


def test_smoothed_fallback_is_arithmetic_mean():
    c1 = ContactMatrix(2006, {(0, 0): 0.2})
    c2 = ContactMatrix(2007, {(0, 0): 0.4})
    _, kappa = constant_year_tables()
    config = HmmConfig(max_iterations=0)  # force the fallback path
    model = estimate_smoothed([(c1, kappa), (c2, kappa)], config)
    assert not model.converged
    assert model.contact.weight(0, 0) == pytest.approx(0.3, abs=2e-6)


def test_smoothed_single_year_falls_back():
    contact, kappa = constant_year_tables()
    model = estimate_smoothed([(contact, kappa)])
    assert not model.converged
    assert model.contact.weight(0, 0) == pytest.approx(0.4, abs=2e-6)


def test_smoothed_deterministic():
    rng = np.random.default_rng(0)
    yearly = []
    for year in (2006, 2007, 2008):
        contact = ContactMatrix(year, {(0, 0): float(rng.uniform(0.1, 0.5))})
        _, kappa = constant_year_tables()
        yearly.append((contact, kappa))
    a = estimate_smoothed(yearly, HmmConfig(seed=42))
    b = estimate_smoothed(yearly, HmmConfig(seed=42))
    assert a.contact.weights == b.contact.weights
    assert a.kappa.entries == b.kappa.entries


def test_smoothed_requires_training_data():
    with pytest.raises(ValueError):
        estimate_smoothed([])


# --- uniform baseline -------------------------------------------------------------

def test_uniform_baseline_symmetric_two_classes():
    classes = synthetic_class_map(["A:a", "B:b"], [1, 1])
    contact = uniform_baseline(classes)
    values = set(contact.weights.values())
    assert len(values) == 1
    assert contact.total() == pytest.approx(1.0, abs=1e-12)


def test_uniform_baseline_pair_counting_oracle():
    """m=(2,1): weights follow the ordered pair counts m_a*m_b / N^2."""
    classes = synthetic_class_map(["A:a", "B:b"], [2, 1])
    contact = uniform_baseline(classes)
    assert contact.weight(0, 1) == pytest.approx(contact.weight(1, 0), abs=1e-15)
    assert contact.weight(0, 0) == pytest.approx(4.0 / 9.0, abs=1e-12)
    assert contact.weight(1, 1) == pytest.approx(1.0 / 9.0, abs=1e-12)
    assert contact.total() == pytest.approx(1.0, abs=1e-12)


def test_uniform_baseline_single_class_and_scaling():
    classes = synthetic_class_map(["A:a"], [7])
    contact = uniform_baseline(classes)
    assert contact.weights == {(0, 0): 1.0}
    scaled = uniform_baseline(classes, total_weight=0.25)
    assert scaled.weight(0, 0) == pytest.approx(0.25, abs=1e-12)


def test_uniform_baseline_empty_errors():
    empty = ClassMap({}, {}, {}, {}, {})
    with pytest.raises(ValueError):
        uniform_baseline(empty)


# --- initial occupancy --------------------------------------------------------------

def test_initial_occupancy_places_population():
    log, classes = kappa_toy_log()
    space = StateSpace(classes.n_classes)
    values = initial_occupancy(log, classes, space)
    assert values.sum() == pytest.approx(1.0, abs=1e-12)
    assert values[space.index(NodeState(0, 0, 90, 0))] == pytest.approx(0.5)
    assert values[space.index(NodeState(0, 0, 2000, 1))] == pytest.approx(0.5)


# --- serialization ------------------------------------------------------------------

def test_model_json_round_trip(tmp_path):
    contact = ContactMatrix(None, {(0, 1): 0.12345678901234567, (1, 0): 1e-9})
    key = (NodeState(0, 0, 90, 0), NodeState(2, 1, 2000, 1))
    succ = (NodeState(1, 1, 90, 0), NodeState(3, 1, 2000, 1))
    kappa = KappaTable(None, {key: ((0.25, succ), (0.75, (key[0], key[1])))})
    from cofield.estimation import SmoothedModel

    model = SmoothedModel(contact, kappa, HmmConfig(), converged=False)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.contact.weights == contact.weights
    assert loaded.kappa.entries == kappa.entries
    assert loaded.converged is False
    assert contact_from_dict(contact_to_dict(contact)).weights == contact.weights
    assert kappa_from_dict(kappa_to_dict(kappa)).entries == kappa.entries
