"""Loading and indexing of the bibliographic corpus.

The corpus arrives as three offline flat files: a publication table
(CSV or JSON lines), an author table (CSV) and a geocoded affiliation
table (CSV).  Loading validates every cross reference and produces an
immutable :class:`EventLog`.  The default view of the log keeps
conference proceedings only; rows with other venue kinds are retained
but excluded from every derived statistic.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .countries import CONTINENTS, continent_of, is_known_country

VENUE_KINDS = ("proceedings", "other")

UNKNOWN_INSTITUTION = "UNKNOWN"
UNKNOWN_COUNTRY = "ZZ"
UNKNOWN_CONTINENT = "unknown"


class CorpusError(ValueError):
    """Malformed or inconsistent corpus input."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where = f" [{where}]"
        super().__init__(f"{message}{where}")
        self.path = path
        self.line = line


class UndefinedAgeError(ValueError):
    """Scientific age is requested for an author without publications."""


@dataclass(frozen=True)
class PublicationRecord:
    paper_id: str
    year: int
    venue_kind: str
    author_ids: tuple[str, ...]


@dataclass(frozen=True)
class AuthorRecord:
    author_id: str
    affiliation_id: str
    display_name: str = ""


@dataclass(frozen=True)
class AffiliationRecord:
    institution_id: str
    label: str
    country_code: str
    continent_code: str
    latitude: float
    longitude: float


UNKNOWN_AFFILIATION = AffiliationRecord(
    institution_id=UNKNOWN_INSTITUTION,
    label="unresolved affiliation",
    country_code=UNKNOWN_COUNTRY,
    continent_code=UNKNOWN_CONTINENT,
    latitude=0.0,
    longitude=0.0,
)


class EventLog:
    """Validated, immutable index over publications, authors and affiliations.

    ``publications`` exposes the proceedings-only view used by all
    statistics; the unfiltered rows stay available as
    ``all_publications``.
    """

    def __init__(self, publications, authors, affiliations):
        self.all_publications: tuple[PublicationRecord, ...] = tuple(publications)
        self.authors: dict[str, AuthorRecord] = dict(authors)
        self.affiliations: dict[str, AffiliationRecord] = dict(affiliations)
        self.publications: tuple[PublicationRecord, ...] = tuple(
            p for p in self.all_publications if p.venue_kind == "proceedings"
        )

        for pub in self.all_publications:
            for author_id in pub.author_ids:
                if author_id not in self.authors:
                    raise CorpusError(
                        f"publication {pub.paper_id!r} references unknown author "
                        f"{author_id!r}"
                    )
        for author in self.authors.values():
            if author.affiliation_id not in self.affiliations:
                raise CorpusError(
                    f"author {author.author_id!r} references unknown affiliation "
                    f"{author.affiliation_id!r}"
                )

        self._by_year: dict[int, list[PublicationRecord]] = {}
        self._by_author: dict[str, list[PublicationRecord]] = {a: [] for a in self.authors}
        for pub in self.publications:
            self._by_year.setdefault(pub.year, []).append(pub)
            for author_id in pub.author_ids:
                self._by_author[author_id].append(pub)

    def years(self) -> list[int]:
        return sorted(self._by_year)

    def publications_in(self, year: int) -> tuple[PublicationRecord, ...]:
        return tuple(self._by_year.get(year, ()))

    def proceedings_only(self) -> "EventLog":
        """Return a log restricted to the proceedings view (idempotent)."""
        return EventLog(self.publications, self.authors, self.affiliations)

    def first_publication_year(self, author_id: str) -> int:
        """Earliest proceedings year of the author; the basis of scientific age."""
        papers = self._by_author[author_id]
        if not papers:
            raise UndefinedAgeError(
                f"author {author_id!r} has no proceedings publications"
            )
        return min(p.year for p in papers)

    def annual_profile(self, author_id: str, year: int) -> tuple[int, int]:
        """Publication count and distinct-coauthor count for one author year."""
        papers = [p for p in self._by_author[author_id] if p.year == year]
        coauthors: set[str] = set()
        for p in papers:
            coauthors.update(p.author_ids)
        coauthors.discard(author_id)
        return len(papers), len(coauthors)

    def institution_of(self, author_id: str) -> str:
        return self.authors[author_id].affiliation_id


def _open_rows(path: Path):
    """Yield (line_number, dict) rows from a CSV or JSON-lines file."""
    if path.suffix.lower() in (".jsonl", ".json", ".ndjson"):
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    row = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"invalid JSON row: {exc}", path=path, line=lineno)
                yield lineno, row
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                yield reader.line_num, row


def _require(row: dict, key: str, path: Path, line: int) -> str:
    value = row.get(key)
    if value is None or (isinstance(value, str) and not value.strip()):
        raise CorpusError(f"missing field {key!r}", path=path, line=line)
    return value


def _parse_publications(path: Path, year_window) -> list[PublicationRecord]:
    records = []
    seen: set[str] = set()
    for line, row in _open_rows(path):
        paper_id = str(_require(row, "paper_id", path, line))
        if paper_id in seen:
            raise CorpusError(f"duplicate paper_id {paper_id!r}", path=path, line=line)
        seen.add(paper_id)
        try:
            year = int(_require(row, "year", path, line))
        except (TypeError, ValueError):
            raise CorpusError(f"non-integer year {row.get('year')!r}", path=path, line=line)
        if year_window is not None and not (year_window[0] <= year <= year_window[1]):
            raise CorpusError(
                f"year {year} outside data window {year_window}", path=path, line=line
            )
        venue_kind = str(_require(row, "venue_kind", path, line)).strip()
        if venue_kind not in VENUE_KINDS:
            raise CorpusError(f"unknown venue_kind {venue_kind!r}", path=path, line=line)
        raw_authors = _require(row, "author_ids", path, line)
        if isinstance(raw_authors, str):
            author_ids = [a.strip() for a in raw_authors.split(";") if a.strip()]
        else:
            author_ids = [str(a) for a in raw_authors]
        if not author_ids:
            raise CorpusError("empty author list", path=path, line=line)
        if len(set(author_ids)) != len(author_ids):
            raise CorpusError(
                f"duplicate author on paper {paper_id!r}", path=path, line=line
            )
        records.append(PublicationRecord(paper_id, year, venue_kind, tuple(author_ids)))
    return records


def _parse_authors(path: Path) -> dict[str, AuthorRecord]:
    authors: dict[str, AuthorRecord] = {}
    for line, row in _open_rows(path):
        author_id = str(_require(row, "author_id", path, line))
        if author_id in authors:
            raise CorpusError(f"duplicate author_id {author_id!r}", path=path, line=line)
        # Blank affiliation marks an author known only as a coauthor; those
        # fall into the reserved UNKNOWN institution.
        affiliation_id = str(row.get("affiliation_id") or "").strip() or UNKNOWN_INSTITUTION
        display_name = str(row.get("display_name") or "").strip()
        authors[author_id] = AuthorRecord(author_id, affiliation_id, display_name)
    return authors


def _parse_affiliations(path: Path) -> dict[str, AffiliationRecord]:
    affiliations: dict[str, AffiliationRecord] = {}
    for line, row in _open_rows(path):
        institution_id = str(_require(row, "institution_id", path, line))
        if institution_id in affiliations:
            raise CorpusError(
                f"duplicate institution_id {institution_id!r}", path=path, line=line
            )
        country = str(_require(row, "country_code", path, line)).strip().upper()
        continent = str(_require(row, "continent_code", path, line)).strip().lower()
        if continent not in CONTINENTS:
            raise CorpusError(f"unknown continent {continent!r}", path=path, line=line)
        if not is_known_country(country):
            raise CorpusError(f"unknown country code {country!r}", path=path, line=line)
        if continent_of(country) != continent:
            raise CorpusError(
                f"country {country!r} is not in continent {continent!r} per the UN table",
                path=path,
                line=line,
            )
        try:
            latitude = float(_require(row, "latitude", path, line))
            longitude = float(_require(row, "longitude", path, line))
        except (TypeError, ValueError):
            raise CorpusError("non-numeric coordinates", path=path, line=line)
        if not (-90.0 <= latitude <= 90.0) or not (-180.0 <= longitude <= 180.0):
            raise CorpusError(
                f"coordinates out of range ({latitude}, {longitude})", path=path, line=line
            )
        affiliations[institution_id] = AffiliationRecord(
            institution_id,
            str(row.get("label") or institution_id),
            country,
            continent,
            latitude,
            longitude,
        )
    return affiliations


def load_corpus(
    publications_path,
    authors_path,
    affiliations_path,
    *,
    year_window: tuple[int, int] | None = None,
    allow_unlisted_authors: bool = False,
) -> EventLog:
    """Parse and validate the three corpus files into an :class:`EventLog`.

    ``allow_unlisted_authors`` downgrades the dangling-author error: ids
    that appear on papers but not in the author table are synthesized
    with the reserved UNKNOWN affiliation instead of failing the load.
    """
    publications_path = Path(publications_path)
    authors_path = Path(authors_path)
    affiliations_path = Path(affiliations_path)
    for p in (publications_path, authors_path, affiliations_path):
        if not p.exists():
            raise CorpusError(f"input file not found: {p}")

    publications = _parse_publications(publications_path, year_window)
    authors = _parse_authors(authors_path)
    affiliations = _parse_affiliations(affiliations_path)

    needs_unknown = any(a.affiliation_id == UNKNOWN_INSTITUTION for a in authors.values())
    if allow_unlisted_authors:
        for pub in publications:
            for author_id in pub.author_ids:
                if author_id not in authors:
                    authors[author_id] = AuthorRecord(author_id, UNKNOWN_INSTITUTION)
                    needs_unknown = True
    if needs_unknown and UNKNOWN_INSTITUTION not in affiliations:
        affiliations[UNKNOWN_INSTITUTION] = UNKNOWN_AFFILIATION

    return EventLog(publications, authors, affiliations)
