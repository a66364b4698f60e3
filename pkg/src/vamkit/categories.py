"""Closed category sets for pupil and school characteristics.

Each enum value is the canonical spelling used in CSV files and reports.
Parsing is tolerant of case and surrounding/internal whitespace (including
spaces around "/"), but the universes themselves are closed: anything that
does not normalise onto a listed spelling is rejected.
"""

from __future__ import annotations

import enum


class Month(enum.Enum):
    """Month of birth in academic-year order; September is the reference/first."""

    SEPTEMBER = "September"
    OCTOBER = "October"
    NOVEMBER = "November"
    DECEMBER = "December"
    JANUARY = "January"
    FEBRUARY = "February"
    MARCH = "March"
    APRIL = "April"
    MAY = "May"
    JUNE = "June"
    JULY = "July"
    AUGUST = "August"


class Gender(enum.Enum):
    MALE = "Male"
    FEMALE = "Female"


class Ethnicity(enum.Enum):
    WHITE_BRITISH = "White British"
    WHITE_IRISH = "White Irish"
    TRAVELLER_OF_IRISH_HERITAGE = "Traveller of Irish Heritage"
    GYPSY_ROMA = "Gypsy / Roma"
    ANY_OTHER_WHITE_BACKGROUND = "Any Other White Background"
    BLACK_AFRICAN = "Black African"
    BLACK_CARIBBEAN = "Black Caribbean"
    ANY_OTHER_BLACK_BACKGROUND = "Any Other Black Background"
    INDIAN = "Indian"
    PAKISTANI = "Pakistani"
    BANGLADESHI = "Bangladeshi"
    ANY_OTHER_ASIAN_BACKGROUND = "Any Other Asian Background"
    CHINESE = "Chinese"
    WHITE_AND_BLACK_AFRICAN = "White and Black African"
    WHITE_AND_BLACK_CARIBBEAN = "White and Black Caribbean"
    WHITE_AND_ASIAN = "White and Asian"
    ANY_OTHER_MIXED_BACKGROUND = "Any Other Mixed Background"
    ANY_OTHER_ETHNIC_GROUP = "Any Other Ethnic Group"
    INFORMATION_NOT_YET_OBTAINED = "Information Not Yet Obtained"
    REFUSED = "Refused"


class FirstLanguage(enum.Enum):
    ENGLISH = "English"
    OTHER = "Other"


class Sen(enum.Enum):
    """Special educational needs status."""

    NONE = "None"
    SUPPORT = "SEN support"
    STATEMENT = "Statement"


class Region(enum.Enum):
    LONDON = "London"
    SOUTH_EAST = "South East"
    SOUTH_WEST = "South West"
    WEST_MIDLANDS = "West Midlands"
    NORTH_WEST = "North West"
    NORTH_EAST = "North East"
    YORKSHIRE_AND_HUMBER = "Yorkshire & Humber"
    EAST_MIDLANDS = "East Midlands"
    EAST_OF_ENGLAND = "East of England"


class SchoolType(enum.Enum):
    COMMUNITY = "Community"
    FOUNDATION = "Foundation"
    VOLUNTARY_AIDED = "Voluntary aided"
    VOLUNTARY_CONTROLLED = "Voluntary controlled"
    CITY_TECH_COLLEGE = "City tech. college"
    SPONSORED_ACADEMY = "Sponsored academy"
    CONVERTER_ACADEMY = "Converter academy"
    FREE = "Free"
    STUDIO = "Studio"
    UNI_TECH_COLLEGE = "Uni. tech. college"
    FURTHER_ED_COLLEGE = "Further ed. college"


class Admissions(enum.Enum):
    COMPREHENSIVE = "Comprehensive"
    GRAMMAR = "Grammar"
    SECONDARY_MODERN = "Secondary modern"


class AgeRange(enum.Enum):
    AGE_11_18 = "11-18"
    AGE_11_16 = "11-16"
    AGE_14_18 = "14-18"
    AGE_4_18 = "4-18"
    AGE_4_16 = "4-16"


class SchoolGender(enum.Enum):
    MIXED = "Mixed"
    BOYS = "Boys"
    GIRLS = "Girls"


class Religion(enum.Enum):
    NONE = "None"
    CHURCH_OF_ENGLAND = "Church of England"
    ROMAN_CATHOLIC = "Roman catholic"
    OTHER_CHRISTIAN_FAITH = "Other Christian faith"
    JEWISH = "Jewish"
    MUSLIM = "Muslim"
    SIKH = "Sikh"


KS2_GROUP_MIN = 1
KS2_GROUP_MAX = 34
IDACI_DECILE_MIN = 1
IDACI_DECILE_MAX = 10
ATTAINMENT8_MAX = 90.0


def _normalise(text: str) -> str:
    """Fold a category string to its matching key: trim, collapse whitespace,
    drop spaces around slashes, casefold."""
    parts = " ".join(text.split())
    parts = parts.replace(" / ", "/").replace(" /", "/").replace("/ ", "/")
    return parts.casefold()


def _lookup_table(enum_cls: type[enum.Enum]) -> dict[str, enum.Enum]:
    return {_normalise(member.value): member for member in enum_cls}


_TABLES: dict[type[enum.Enum], dict[str, enum.Enum]] = {
    cls: _lookup_table(cls)
    for cls in (
        Month,
        Gender,
        Ethnicity,
        FirstLanguage,
        Sen,
        Region,
        SchoolType,
        Admissions,
        AgeRange,
        SchoolGender,
        Religion,
    )
}


def parse_category(enum_cls: type[enum.Enum], text: str) -> enum.Enum:
    """Map a raw CSV string onto a category member.

    Raises ValueError naming the valid spellings when the string does not
    normalise onto any member.
    """
    member = _TABLES[enum_cls].get(_normalise(text))
    if member is None:
        valid = ", ".join(m.value for m in enum_cls)
        raise ValueError(f"unknown value {text!r}; valid values: {valid}")
    return member
