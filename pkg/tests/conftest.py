import numpy as np
import pytest

from vamkit.categories import (
    Admissions,
    AgeRange,
    Ethnicity,
    FirstLanguage,
    Gender,
    Month,
    Region,
    Religion,
    SchoolGender,
    SchoolType,
    Sen,
)
from vamkit.cohort import PupilRecord, SchoolRecord, validate_cohort
from vamkit.synthgen import GeneratorConfig, generate_population


def make_pupil(pupil_id, school_id, **overrides):
    fields = dict(
        pupil_id=pupil_id,
        school_id=school_id,
        attainment8_total=50.0,
        ks2_group=20,
        month_of_birth=Month.SEPTEMBER,
        gender=Gender.MALE,
        ethnicity=Ethnicity.WHITE_BRITISH,
        first_language=FirstLanguage.ENGLISH,
        sen=Sen.NONE,
        fsm=False,
        idaci_decile=5,
    )
    fields.update(overrides)
    return PupilRecord(**fields)


def make_school(school_id, **overrides):
    fields = dict(
        school_id=school_id,
        region=Region.LONDON,
        school_type=SchoolType.COMMUNITY,
        admissions=Admissions.COMPREHENSIVE,
        age_range=AgeRange.AGE_11_18,
        school_gender=SchoolGender.MIXED,
        religion=Religion.NONE,
        school_idaci_decile=5,
    )
    fields.update(overrides)
    return SchoolRecord(**fields)


def random_cohort(seed, n_schools=6, pupils_per_school=25):
    """Small hand-rolled random cohort, independent of the synthetic generator."""
    rng = np.random.default_rng(seed)
    schools = [make_school(f"S{i:03d}", school_idaci_decile=int(rng.integers(1, 11)))
               for i in range(n_schools)]
    pupils = []
    months = list(Month)
    ethnicities = list(Ethnicity)
    sens = list(Sen)
    pid = 0
    for school in schools:
        for _ in range(pupils_per_school):
            pid += 1
            pupils.append(
                make_pupil(
                    f"P{pid:05d}",
                    school.school_id,
                    attainment8_total=float(np.round(rng.uniform(5.0, 85.0), 4)),
                    ks2_group=int(rng.integers(1, 35)),
                    month_of_birth=months[rng.integers(0, 12)],
                    gender=Gender.FEMALE if rng.random() < 0.5 else Gender.MALE,
                    ethnicity=ethnicities[rng.integers(0, len(ethnicities))],
                    first_language=FirstLanguage.OTHER if rng.random() < 0.15 else FirstLanguage.ENGLISH,
                    sen=sens[rng.integers(0, 3)],
                    fsm=bool(rng.random() < 0.3),
                    idaci_decile=int(rng.integers(1, 11)),
                )
            )
    return validate_cohort(pupils, schools)


@pytest.fixture(scope="session")
def midsize_population():
    """Shared mid-size synthetic population (fast, all category levels likely present)."""
    return generate_population(GeneratorConfig(n_schools=80, school_size_range=(60, 120), seed=20160901))
