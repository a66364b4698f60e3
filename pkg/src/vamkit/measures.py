"""Pupil scores, school scores with confidence intervals, and summaries.

Pipeline per measure: build the design for the measure's spec, fit by least
squares, divide the pupil residuals by 10 so one unit is one GCSE grade per
subject, average within school, and attach a 95% confidence interval

    score +/- 1.959964 * national_sd / sqrt(n_pupils)

where national_sd is the measure's pupil-score standard deviation across the
whole cohort (the construction published alongside national performance
tables, and stable for small schools). A per-school standard deviation is
available behind the ``within_school_sd`` flag. A school is significantly
above (below) average when its interval lies entirely above (below) zero.

Raw attainment enters as the intercept-only model, so its pupil scores are
exactly the outcome centred on the national mean, and its adjusted
R-squared is exactly 0.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cohort import ValidatedCohort
from .design import DesignMatrix, MeasureKind, build_design_matrix
from .errors import AnalysisError
from .ols import FitResult, Z95, fit_ols

POINTS_PER_GRADE = 10.0


class SignificanceCategory(enum.Enum):
    SIGNIFICANTLY_ABOVE = "significantly_above"
    NOT_SIGNIFICANT = "not_significant"
    SIGNIFICANTLY_BELOW = "significantly_below"


@dataclass(frozen=True)
class PupilScore:
    """A pupil's measure score in grades per subject (residual / 10)."""

    pupil_id: str
    measure: MeasureKind
    score: float


@dataclass(frozen=True)
class SchoolScore:
    """A school's measure score (mean of its pupil scores) with 95% CI."""

    school_id: str
    measure: MeasureKind
    score: float
    n_pupils: int
    ci_low: float
    ci_high: float
    category: SignificanceCategory


@dataclass(frozen=True)
class MeasureSummary:
    """Cohort-level summary of one measure's fit and score dispersion."""

    measure: MeasureKind
    adjusted_r_squared: float
    sd_pupil_scores: float
    sd_school_scores: float
    n_pupils: int
    n_schools: int
    national_mean_grades: float


@dataclass(frozen=True)
class MeasureResult:
    """Everything one measure run produces, in cohort pupil order."""

    measure: MeasureKind
    fit: FitResult
    design: DesignMatrix
    pupil_scores: list[PupilScore]
    school_scores: list[SchoolScore]
    summary: MeasureSummary


def school_scores(
    pupil_scores: Sequence[PupilScore],
    school_ids: Mapping[str, str],
    national_sd: float,
    *,
    within_school_sd: bool = False,
) -> list[SchoolScore]:
    """Average pupil scores within school and attach 95% CIs.

    ``school_ids`` maps pupil_id to school_id. With ``within_school_sd`` the
    CI uses each school's own pupil-score SD instead of the national one
    (schools with a single pupil fall back to the national SD). Output is
    sorted by school_id.
    """
    if national_sd <= 0.0:
        raise AnalysisError(f"national_sd must be positive, got {national_sd!r}")
    by_school: dict[str, list[float]] = {}
    measure = None
    for ps in pupil_scores:
        measure = ps.measure
        by_school.setdefault(school_ids[ps.pupil_id], []).append(ps.score)

    out: list[SchoolScore] = []
    for school_id in sorted(by_school):
        values = np.asarray(by_school[school_id])
        n = values.size
        mean = float(values.mean())
        sd = national_sd
        if within_school_sd and n >= 2:
            sd = float(values.std(ddof=1))
        half = Z95 * sd / np.sqrt(n)
        low, high = mean - half, mean + half
        if low > 0.0:
            category = SignificanceCategory.SIGNIFICANTLY_ABOVE
        elif high < 0.0:
            category = SignificanceCategory.SIGNIFICANTLY_BELOW
        else:
            category = SignificanceCategory.NOT_SIGNIFICANT
        out.append(
            SchoolScore(
                school_id=school_id,
                measure=measure,
                score=mean,
                n_pupils=n,
                ci_low=low,
                ci_high=high,
                category=category,
            )
        )
    return out


def measure_summary(
    fit: FitResult,
    pupil_scores: Sequence[PupilScore],
    school_scores_: Sequence[SchoolScore],
    *,
    national_mean_grades: float = float("nan"),
) -> MeasureSummary:
    """Summary statistics for one measure run.

    SDs use the sample (N-1) convention; the school-score SD is unweighted,
    each school counting once. A single-school cohort reports 0 with a
    warning. ``national_mean_grades`` is the uncentred outcome mean / 10,
    reported alongside the centred scores.
    """
    pupil_values = np.asarray([p.score for p in pupil_scores])
    school_values = np.asarray([s.score for s in school_scores_])
    if school_values.size >= 2:
        sd_school = float(school_values.std(ddof=1))
    else:
        warnings.warn("single school: school-score SD reported as 0", stacklevel=2)
        sd_school = 0.0
    return MeasureSummary(
        measure=pupil_scores[0].measure,
        adjusted_r_squared=fit.adjusted_r_squared,
        sd_pupil_scores=float(pupil_values.std(ddof=1)) if pupil_values.size >= 2 else 0.0,
        sd_school_scores=sd_school,
        n_pupils=len(pupil_scores),
        n_schools=len(school_scores_),
        national_mean_grades=national_mean_grades,
    )


def compute_measure(
    cohort: ValidatedCohort,
    kind: MeasureKind,
    *,
    within_school_sd: bool = False,
) -> MeasureResult:
    """Run the full pipeline for one measure on a validated cohort."""
    design = build_design_matrix(cohort, kind.model_spec)
    outcome = np.array([p.attainment8_total for p in cohort.pupils])
    fit = fit_ols(design, outcome)

    scores = fit.residuals / POINTS_PER_GRADE
    pupil_scores = [
        PupilScore(pupil_id=p.pupil_id, measure=kind, score=float(s))
        for p, s in zip(cohort.pupils, scores)
    ]
    national_sd = float(scores.std(ddof=1))
    mapping = {p.pupil_id: p.school_id for p in cohort.pupils}
    schools = school_scores(
        pupil_scores, mapping, national_sd, within_school_sd=within_school_sd
    )
    summary = measure_summary(
        fit,
        pupil_scores,
        schools,
        national_mean_grades=float(outcome.mean()) / POINTS_PER_GRADE,
    )
    return MeasureResult(
        measure=kind,
        fit=fit,
        design=design,
        pupil_scores=pupil_scores,
        school_scores=schools,
        summary=summary,
    )


def compute_measures(
    cohort: ValidatedCohort,
    kinds: Iterable[MeasureKind],
    *,
    within_school_sd: bool = False,
) -> dict[MeasureKind, MeasureResult]:
    """Compute several measures on one cohort (independent runs)."""
    return {
        kind: compute_measure(cohort, kind, within_school_sd=within_school_sd)
        for kind in kinds
    }
