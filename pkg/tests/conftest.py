import pytest

from cofield.abstraction import ClassMap
from cofield.corpus import AffiliationRecord, AuthorRecord, EventLog, PublicationRecord


def make_log(publications, authors, affiliations):
    return EventLog(publications, authors, affiliations)


@pytest.fixture
def toy_affiliations():
    return {
        "inst-nl": AffiliationRecord("inst-nl", "tu-somewhere", "NL", "europe", 52.0, 4.4),
        "inst-us": AffiliationRecord("inst-us", "u-elsewhere", "US", "north-america", 40.7, -74.0),
    }


@pytest.fixture
def toy_log(toy_affiliations):
    """Two authors in different classes: debut papers in the 90s / 2000s,
    one joint 2007 paper."""
    authors = {
        "ax": AuthorRecord("ax", "inst-nl"),
        "ay": AuthorRecord("ay", "inst-us"),
    }
    publications = [
        PublicationRecord("p-debut-x", 1995, "proceedings", ("ax",)),
        PublicationRecord("p-debut-y", 2005, "proceedings", ("ay",)),
        PublicationRecord("p-joint", 2007, "proceedings", ("ax", "ay")),
    ]
    return make_log(publications, authors, toy_affiliations)


@pytest.fixture
def two_class_map():
    """Hand-built map: class 0 (Dutch, m=2) and class 1 (foreign, m=1)."""
    return ClassMap(
        class_of={"inst-nl": 0, "inst-us": 1},
        members={0: ("inst-nl",), 1: ("inst-us",)},
        labels={0: "NL:inst-nl", 1: "US:inst-us"},
        m={0: 2, 1: 1},
        country_of={0: "NL", 1: "US"},
    )
