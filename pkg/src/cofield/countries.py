"""Static UN country-to-continent table used to validate affiliation rows."""

from __future__ import annotations

CONTINENTS = (
    "africa",
    "antarctica",
    "asia",
    "europe",
    "north-america",
    "oceania",
    "south-america",
    "unknown",
)

# ISO-3166 alpha-2 codes grouped by UN continental region.
_BY_CONTINENT = {
    "africa": (
        "DZ AO BJ BW BF BI CV CM CF TD KM CG CD CI DJ EG GQ ER SZ ET GA GM "
        "GH GN GW KE LS LR LY MG MW ML MR MU YT MA MZ NA NE NG RE RW SH ST "
        "SN SC SL SO ZA SS SD TZ TG TN UG EH ZM ZW"
    ),
    "antarctica": "AQ BV GS HM TF",
    "asia": (
        "AF AM AZ BH BD BT BN KH CN CY GE HK IN ID IR IQ IL JP JO KZ KW KG "
        "LA LB MO MY MV MN MM NP KP OM PK PS PH QA SA SG KR LK SY TW TJ TH "
        "TL TR TM AE UZ VN YE IO"
    ),
    "europe": (
        "AX AL AD AT BY BE BA BG HR CZ DK EE FO FI FR DE GI GR GG HU IS IE "
        "IM IT JE XK LV LI LT LU MT MD MC ME NL MK NO PL PT RO RU SM RS SK "
        "SI ES SJ SE CH UA GB VA"
    ),
    "north-america": (
        "AI AG AW BS BB BZ BM BQ CA KY CR CU CW DM DO SV GL GD GP GT HT HN "
        "JM MQ MX MS NI PA PR BL KN LC MF PM VC SX TT TC US VG VI"
    ),
    "oceania": (
        "AS AU CK CX CC FJ PF GU KI MH FM NR NC NZ NU NF MP PW PG PN WS SB "
        "TK TO TV UM VU WF"
    ),
    "south-america": "AR BO BR CL CO EC FK GF GY PY PE SR UY VE",
    "unknown": "ZZ",
}

COUNTRY_TO_CONTINENT: dict[str, str] = {
    code: continent
    for continent, codes in _BY_CONTINENT.items()
    for code in codes.split()
}


def continent_of(country_code: str) -> str:
    """Return the UN continent for an ISO alpha-2 country code.

    Raises KeyError for codes absent from the bundled table.
    """
    return COUNTRY_TO_CONTINENT[country_code.upper()]


def is_known_country(country_code: str) -> bool:
    return country_code.upper() in COUNTRY_TO_CONTINENT
