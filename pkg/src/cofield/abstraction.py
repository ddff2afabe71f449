"""State-space abstraction: parameter bins and institution classes.

The aggregated node state is the 4-tuple ``(p, c, h, u)``:

* ``p``   annual conference publications, capped at 12,
* ``c``   coauthor category 0..4 (relative annual coauthor count),
* ``h``   scientific-age decade (70, 80, 90, 2000, 2010),
* ``u``   institutional class produced by :func:`abstract_classes`.

Institutions are merged into classes with a two-step dispersion test
(continent level, then country level); only institutions whose
population does not exceed the mean of the whole distribution are
pooled, and institutions in protected countries (the Netherlands by
default) never merge across their national boundary.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .corpus import EventLog, UNKNOWN_COUNTRY, UNKNOWN_INSTITUTION

DECADES = (70, 80, 90, 2000, 2010)
PUBLICATION_CAP = 12
COAUTHOR_CATEGORIES = 5
EARLIEST_FIRST_YEAR = 1971


class NodeState(NamedTuple):
    """Aggregated description of one scientist."""

    p: int
    c: int
    h: int
    u: int


@dataclass(frozen=True)
class ParameterBins:
    """Sizes and labels of the binned parameter ranges."""

    publication_cap: int = PUBLICATION_CAP
    coauthor_categories: int = COAUTHOR_CATEGORIES
    decades: tuple[int, ...] = DECADES

    @property
    def n_p(self) -> int:
        return self.publication_cap + 1

    @property
    def n_c(self) -> int:
        return self.coauthor_categories

    @property
    def n_h(self) -> int:
        return len(self.decades)

    def decade_index(self, decade: int) -> int:
        return self.decades.index(decade)


def bin_coauthor_category(count: int) -> int:
    """Map a coauthor count to the five categories 0..4.

    0 = non cooperative (no coauthors), 1 = regular (up to 3),
    2 = high (up to 6), 3 = team (up to 10), 4 = large project (more
    than 10).
    """
    if count < 0:
        raise ValueError(f"negative coauthor count {count}")
    if count == 0:
        return 0
    if count <= 3:
        return 1
    if count <= 6:
        return 2
    if count <= 10:
        return 3
    return 4


def cap_annual_publications(count: int) -> int:
    """Cap the annual publication count at 12 (fast publishers)."""
    if count < 0:
        raise ValueError(f"negative publication count {count}")
    return min(count, PUBLICATION_CAP)


def scientific_age_bin(first_year: int) -> int:
    """Decade group of an author's first publication year."""
    if first_year < EARLIEST_FIRST_YEAR:
        raise ValueError(
            f"first publication year {first_year} precedes {EARLIEST_FIRST_YEAR}"
        )
    if first_year < 1980:
        return 70
    if first_year < 1990:
        return 80
    if first_year < 2000:
        return 90
    if first_year < 2010:
        return 2000
    return 2010


def relative_coauthor_count(unique_coauthors: int, publications: int) -> int:
    """Coauthor category of the annual coauthor count per publication.

    Rounds half up before binning; a year without publications is
    non cooperative by definition.
    """
    if publications < 0 or unique_coauthors < 0:
        raise ValueError("counts must be non-negative")
    if publications == 0:
        return 0
    ratio = unique_coauthors / publications
    return bin_coauthor_category(int(math.floor(ratio + 0.5)))


def dispersion_test(values: Iterable[int | float], metric: str = "variance") -> bool:
    """True when the values are highly dispersed (dispersion > mean).

    ``metric`` selects the dispersion measure: ``variance`` (sample
    variance, n-1 denominator) or ``mad`` (mean absolute deviation).
    A tie counts as not dispersed.
    """
    data = list(values)
    if not data:
        raise ValueError("dispersion_test needs at least one value")
    mean = statistics.fmean(data)
    if len(data) == 1:
        dispersion = 0.0
    elif metric == "variance":
        dispersion = statistics.variance(data)
    elif metric == "mad":
        dispersion = statistics.fmean(abs(x - mean) for x in data)
    else:
        raise ValueError(f"unknown dispersion metric {metric!r}")
    return dispersion > mean


@dataclass
class ScientistDistribution:
    """Number of affiliated scientists per institution (UNKNOWN excluded)."""

    counts: dict[str, int]
    unknown_count: int = 0

    @classmethod
    def from_log(cls, log: EventLog) -> "ScientistDistribution":
        counts: dict[str, int] = {}
        unknown = 0
        for author in log.authors.values():
            if author.affiliation_id == UNKNOWN_INSTITUTION:
                unknown += 1
            else:
                counts[author.affiliation_id] = counts.get(author.affiliation_id, 0) + 1
        return cls(counts, unknown)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass
class ClassMap:
    """Partition of institutions into labeled, lexicographically indexed classes."""

    class_of: dict[str, int]
    members: dict[int, tuple[str, ...]]
    labels: dict[int, str]
    m: dict[int, int]
    country_of: dict[int, str | None] = field(default_factory=dict)
    # group key -> outcome of the dispersion test, for inspection only
    dispersion_audit: dict[str, bool] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def class_ids(self) -> list[int]:
        return sorted(self.labels)

    def population(self) -> int:
        return sum(self.m.values())

    def classes_in_country(self, country_code: str) -> list[int]:
        return [u for u, cc in self.country_of.items() if cc == country_code]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class_id", "label", "country", "m", "members"])
            for u in self.class_ids():
                writer.writerow(
                    [
                        u,
                        self.labels[u],
                        self.country_of.get(u) or "",
                        self.m[u],
                        ";".join(self.members[u]),
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "ClassMap":
        class_of: dict[str, int] = {}
        members: dict[int, tuple[str, ...]] = {}
        labels: dict[int, str] = {}
        m: dict[int, int] = {}
        country_of: dict[int, str | None] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                u = int(row["class_id"])
                labels[u] = row["label"]
                country_of[u] = row["country"] or None
                m[u] = int(row["m"])
                insts = tuple(i for i in row["members"].split(";") if i)
                members[u] = insts
                for inst in insts:
                    class_of[inst] = u
        return cls(class_of, members, labels, m, country_of)


def _build_class_map(groups, audit) -> ClassMap:
    """Assemble a ClassMap from (label, country, institutions, population) groups."""
    ordered = sorted(groups, key=lambda g: g[0])
    class_of: dict[str, int] = {}
    members: dict[int, tuple[str, ...]] = {}
    labels: dict[int, str] = {}
    m: dict[int, int] = {}
    country_of: dict[int, str | None] = {}
    for u, (label, country, insts, population) in enumerate(ordered):
        labels[u] = label
        country_of[u] = country
        members[u] = tuple(sorted(insts))
        m[u] = population
        for inst in insts:
            class_of[inst] = u
    return ClassMap(class_of, members, labels, m, country_of, dict(audit))


def abstract_classes(
    dist: ScientistDistribution,
    affiliations: Mapping[str, object],
    *,
    protected_countries: frozenset[str] | set[str] = frozenset({"NL"}),
    metric: str = "variance",
) -> ClassMap:
    """Merge institutions into classes with the two-step dispersion test.

    Step 1 tests each continent's institution sizes; a continent that is
    not highly dispersed pools its at-or-below-mean institutions into a
    single continental class.  Step 2 repeats the test per country
    inside dispersed continents and pools at-or-below-mean institutions
    per country.  The merge threshold is always the mean of the entire
    distribution.  Institutions above the mean stay singleton classes,
    and protected countries are treated as their own group so their
    institutions never pool across the national boundary.  Authors with
    unresolved affiliation form one terminal class.
    """
    if not dist.counts and dist.unknown_count == 0:
        raise ValueError("empty scientist distribution")

    counts = dist.counts
    for inst in counts:
        if inst not in affiliations:
            raise ValueError(f"institution {inst!r} lacks affiliation (geo) data")

    protected = {c.upper() for c in protected_countries}
    mean_d = statistics.fmean(counts.values()) if counts else 0.0

    # group institutions: protected countries stand alone, the rest by continent
    country_groups: dict[str, list[str]] = {}
    continent_groups: dict[str, list[str]] = {}
    for inst in sorted(counts):
        aff = affiliations[inst]
        if aff.country_code in protected:
            country_groups.setdefault(aff.country_code, []).append(inst)
        else:
            continent_groups.setdefault(aff.continent_code, []).append(inst)

    groups: list[tuple[str, str | None, list[str], int]] = []
    audit: dict[str, bool] = {}

    def pool_or_single(insts: list[str], pool_label: str):
        pooled = [i for i in insts if counts[i] <= mean_d]
        for inst in insts:
            if counts[inst] > mean_d:
                aff = affiliations[inst]
                groups.append(
                    (f"{aff.country_code}:{inst}", aff.country_code, [inst], counts[inst])
                )
        if pooled:
            pool_countries = {affiliations[i].country_code for i in pooled}
            country = pool_countries.pop() if len(pool_countries) == 1 else None
            groups.append((pool_label, country, pooled, sum(counts[i] for i in pooled)))

    for continent in sorted(continent_groups):
        insts = continent_groups[continent]
        dispersed = dispersion_test([counts[i] for i in insts], metric)
        audit[f"continent:{continent}"] = dispersed
        if dispersed:
            # dispersed continent: drill down to per-country pools
            by_country: dict[str, list[str]] = {}
            for inst in insts:
                by_country.setdefault(affiliations[inst].country_code, []).append(inst)
            for cc in sorted(by_country):
                audit[f"country:{cc}"] = dispersion_test(
                    [counts[i] for i in by_country[cc]], metric
                )
                pool_or_single(by_country[cc], f"{cc}:pooled")
        else:
            pool_or_single(insts, f"{continent}:pooled")

    for cc in sorted(country_groups):
        insts = country_groups[cc]
        audit[f"country:{cc}"] = dispersion_test([counts[i] for i in insts], metric)
        pool_or_single(insts, f"{cc}:pooled")

    if dist.unknown_count > 0:
        groups.append(
            (f"{UNKNOWN_COUNTRY}:unknown", UNKNOWN_COUNTRY, [UNKNOWN_INSTITUTION], dist.unknown_count)
        )

    return _build_class_map(groups, audit)
