"""Pupil/school data model, CSV ingestion and validation.

CSV is the sole ingestion format. Both schemas are flat tables with a fixed,
ordered header (see ``PUPIL_COLUMNS`` / ``SCHOOL_COLUMNS``). Parsing never
raises on malformed rows: each bad row becomes a :class:`ParseIssue` naming
the row, column and reason, and the row is skipped. Structural problems
(undecodable bytes, wrong header) raise :class:`CohortError`.

The only field allowed to be missing is ``ks2_group`` (empty string). Models
that adjust for prior attainment reject cohorts containing such pupils; the
gap is representable here because real extracts have them.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

from .categories import (
    ATTAINMENT8_MAX,
    Admissions,
    AgeRange,
    Ethnicity,
    FirstLanguage,
    Gender,
    IDACI_DECILE_MAX,
    IDACI_DECILE_MIN,
    KS2_GROUP_MAX,
    KS2_GROUP_MIN,
    Month,
    Region,
    Religion,
    SchoolGender,
    SchoolType,
    Sen,
    parse_category,
)
from .errors import CohortError

PUPIL_COLUMNS = (
    "pupil_id",
    "school_id",
    "attainment8_total",
    "ks2_group",
    "month_of_birth",
    "gender",
    "ethnicity",
    "first_language",
    "sen",
    "fsm",
    "idaci_decile",
)

SCHOOL_COLUMNS = (
    "school_id",
    "region",
    "school_type",
    "admissions",
    "age_range",
    "school_gender",
    "religion",
    "school_idaci_decile",
)


@dataclass(frozen=True)
class PupilRecord:
    """One pupil's outcome, prior attainment group and background characteristics."""

    pupil_id: str
    school_id: str
    attainment8_total: float
    ks2_group: int | None
    month_of_birth: Month
    gender: Gender
    ethnicity: Ethnicity
    first_language: FirstLanguage
    sen: Sen
    fsm: bool
    idaci_decile: int


@dataclass(frozen=True)
class SchoolRecord:
    """One school's attributes, all drawn from closed category sets."""

    school_id: str
    region: Region
    school_type: SchoolType
    admissions: Admissions
    age_range: AgeRange
    school_gender: SchoolGender
    religion: Religion
    school_idaci_decile: int


@dataclass(frozen=True)
class ParseIssue:
    """A skipped CSV row: 1-based data row number, offending column, reason."""

    row: int
    column: str
    reason: str

    def __str__(self) -> str:
        return f"row {self.row}, column {self.column}: {self.reason}"


@dataclass(frozen=True)
class ValidatedCohort:
    """Cross-referenced pupil and school lists, immutable after construction.

    Every pupil's school_id resolves to a school; every school has at least
    one pupil; pupil ids are unique.
    """

    pupils: tuple[PupilRecord, ...]
    schools: tuple[SchoolRecord, ...]
    n_pupils: int
    n_schools: int

    def school_by_id(self) -> dict[str, SchoolRecord]:
        return {s.school_id: s for s in self.schools}


def _decode(source: BinaryIO | bytes) -> io.StringIO:
    raw = source if isinstance(source, bytes) else source.read()
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise CohortError(f"input is not valid UTF-8: {exc}") from exc
    return io.StringIO(text, newline="")

def _check_header(row: Sequence[str] | None, expected: Sequence[str], what: str) -> None:
    if row is None:
        raise CohortError(f"{what} file is empty: expected header {','.join(expected)}")
    got = [c.strip() for c in row]
    if got != list(expected):
        missing = [c for c in expected if c not in got]
        extra = [c for c in got if c not in expected]
        detail = []
        if missing:
            detail.append(f"missing columns: {', '.join(missing)}")
        if extra:
            detail.append(f"unexpected columns: {', '.join(extra)}")
        if not detail:
            detail.append("columns out of order")
        raise CohortError(
            f"{what} header mismatch ({'; '.join(detail)}); "
            f"expected exactly: {','.join(expected)}"
        )


def _parse_int(text: str, lo: int, hi: int) -> int:
    value = int(text)
    if not lo <= value <= hi:
        raise ValueError(f"must be an integer in {lo}..{hi}, got {text!r}")
    return value


def parse_pupils(source: BinaryIO | bytes) -> tuple[list[PupilRecord], list[ParseIssue]]:
    """Parse a pupil CSV byte stream into records plus row-level issues.

    Well-formed rows yield one record each; malformed rows are skipped with an
    issue. A missing or reordered header is fatal (:class:`CohortError`).
    """
    records: list[PupilRecord] = []
    issues: list[ParseIssue] = []
    reader = csv.reader(_decode(source))
    try:
        header = next(reader, None)
        _check_header(header, PUPIL_COLUMNS, "pupil CSV")
        for row_no, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(PUPIL_COLUMNS):
                issues.append(
                    ParseIssue(row_no, "(row)", f"expected {len(PUPIL_COLUMNS)} fields, got {len(row)}")
                )
                continue
            cells = dict(zip(PUPIL_COLUMNS, (c.strip() for c in row)))
            column = "(row)"
            try:
                column = "pupil_id"
                pupil_id = cells["pupil_id"]
                if not pupil_id:
                    raise ValueError("must not be empty")
                column = "school_id"
                school_id = cells["school_id"]
                if not school_id:
                    raise ValueError("must not be empty")
                column = "attainment8_total"
                a8 = float(cells["attainment8_total"])
                if not 0.0 <= a8 <= ATTAINMENT8_MAX:
                    raise ValueError(f"must be in [0, {ATTAINMENT8_MAX:g}], got {a8:g}")
                column = "ks2_group"
                ks2 = (
                    None
                    if cells["ks2_group"] == ""
                    else _parse_int(cells["ks2_group"], KS2_GROUP_MIN, KS2_GROUP_MAX)
                )
                column = "month_of_birth"
                month = parse_category(Month, cells["month_of_birth"])
                column = "gender"
                gender = parse_category(Gender, cells["gender"])
                column = "ethnicity"
                ethnicity = parse_category(Ethnicity, cells["ethnicity"])
                column = "first_language"
                language = parse_category(FirstLanguage, cells["first_language"])
                column = "sen"
                sen = parse_category(Sen, cells["sen"])
                column = "fsm"
                if cells["fsm"] not in ("0", "1"):
                    raise ValueError(f"must be 0 or 1, got {cells['fsm']!r}")
                fsm = cells["fsm"] == "1"
                column = "idaci_decile"
                idaci = _parse_int(cells["idaci_decile"], IDACI_DECILE_MIN, IDACI_DECILE_MAX)
            except ValueError as exc:
                issues.append(ParseIssue(row_no, column, str(exc)))
                continue
            records.append(
                PupilRecord(
                    pupil_id=pupil_id,
                    school_id=school_id,
                    attainment8_total=a8,
                    ks2_group=ks2,
                    month_of_birth=month,
                    gender=gender,
                    ethnicity=ethnicity,
                    first_language=language,
                    sen=sen,
                    fsm=fsm,
                    idaci_decile=idaci,
                )
            )
    except csv.Error as exc:
        raise CohortError(f"pupil CSV is malformed: {exc}") from exc
    return records, issues


def parse_schools(source: BinaryIO | bytes) -> tuple[list[SchoolRecord], list[ParseIssue]]:
    """Parse a school CSV byte stream; same contract as :func:`parse_pupils`."""
    records: list[SchoolRecord] = []
    issues: list[ParseIssue] = []
    reader = csv.reader(_decode(source))
    try:
        header = next(reader, None)
        _check_header(header, SCHOOL_COLUMNS, "school CSV")
        for row_no, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(SCHOOL_COLUMNS):
                issues.append(
                    ParseIssue(row_no, "(row)", f"expected {len(SCHOOL_COLUMNS)} fields, got {len(row)}")
                )
                continue
            cells = dict(zip(SCHOOL_COLUMNS, (c.strip() for c in row)))
            column = "(row)"
            try:
                column = "school_id"
                school_id = cells["school_id"]
                if not school_id:
                    raise ValueError("must not be empty")
                column = "region"
                region = parse_category(Region, cells["region"])
                column = "school_type"
                school_type = parse_category(SchoolType, cells["school_type"])
                column = "admissions"
                admissions = parse_category(Admissions, cells["admissions"])
                column = "age_range"
                age_range = parse_category(AgeRange, cells["age_range"])
                column = "school_gender"
                school_gender = parse_category(SchoolGender, cells["school_gender"])
                column = "religion"
                religion = parse_category(Religion, cells["religion"])
                column = "school_idaci_decile"
                decile = _parse_int(cells["school_idaci_decile"], IDACI_DECILE_MIN, IDACI_DECILE_MAX)
            except ValueError as exc:
                issues.append(ParseIssue(row_no, column, str(exc)))
                continue
            records.append(
                SchoolRecord(
                    school_id=school_id,
                    region=region,
                    school_type=school_type,
                    admissions=admissions,
                    age_range=age_range,
                    school_gender=school_gender,
                    religion=religion,
                    school_idaci_decile=decile,
                )
            )
    except csv.Error as exc:
        raise CohortError(f"school CSV is malformed: {exc}") from exc
    return records, issues


def validate_cohort(
    pupils: Iterable[PupilRecord], schools: Iterable[SchoolRecord]
) -> ValidatedCohort:
    """Cross-reference parsed pupils and schools into an immutable cohort.

    Schools with zero pupils are dropped with a warning. Unresolvable
    school_ids or duplicate ids are fatal.
    """
    pupils = tuple(pupils)
    schools = tuple(schools)
    if not pupils:
        raise CohortError("cohort has no pupils")

    seen_pupils: set[str] = set()
    dup_pupils: list[str] = []
    for p in pupils:
        if p.pupil_id in seen_pupils:
            dup_pupils.append(p.pupil_id)
        seen_pupils.add(p.pupil_id)
    if dup_pupils:
        raise CohortError(f"duplicate pupil_id values: {', '.join(sorted(set(dup_pupils)))}")

    seen_schools: set[str] = set()
    dup_schools: list[str] = []
    for s in schools:
        if s.school_id in seen_schools:
            dup_schools.append(s.school_id)
        seen_schools.add(s.school_id)
    if dup_schools:
        raise CohortError(f"duplicate school_id values: {', '.join(sorted(set(dup_schools)))}")

    unresolved = sorted({p.school_id for p in pupils} - seen_schools)
    if unresolved:
        raise CohortError(f"pupils reference unknown school_id values: {', '.join(unresolved)}")

    referenced = {p.school_id for p in pupils}
    kept = tuple(s for s in schools if s.school_id in referenced)
    empty = [s.school_id for s in schools if s.school_id not in referenced]
    if empty:
        warnings.warn(
            f"dropping {len(empty)} school(s) with no pupils: {', '.join(sorted(empty))}",
            stacklevel=2,
        )

    if not kept:
        raise CohortError("cohort has no schools")

    return ValidatedCohort(
        pupils=pupils, schools=kept, n_pupils=len(pupils), n_schools=len(kept)
    )


def _csv_bytes(header: Sequence[str], rows: Iterable[Sequence[str]]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _num(value: float) -> str:
    """Shortest exact decimal form; integers without trailing .0."""
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def serialize_pupils(records: Iterable[PupilRecord]) -> bytes:
    """Write pupil records as canonical CSV bytes (inverse of parse_pupils)."""
    rows = (
        (
            p.pupil_id,
            p.school_id,
            _num(p.attainment8_total),
            "" if p.ks2_group is None else str(p.ks2_group),
            p.month_of_birth.value,
            p.gender.value,
            p.ethnicity.value,
            p.first_language.value,
            p.sen.value,
            "1" if p.fsm else "0",
            str(p.idaci_decile),
        )
        for p in records
    )
    return _csv_bytes(PUPIL_COLUMNS, rows)


def serialize_schools(records: Iterable[SchoolRecord]) -> bytes:
    """Write school records as canonical CSV bytes (inverse of parse_schools)."""
    rows = (
        (
            s.school_id,
            s.region.value,
            s.school_type.value,
            s.admissions.value,
            s.age_range.value,
            s.school_gender.value,
            s.religion.value,
            str(s.school_idaci_decile),
        )
        for s in records
    )
    return _csv_bytes(SCHOOL_COLUMNS, rows)
