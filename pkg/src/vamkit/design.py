"""Dummy-coded design matrices for the four measure specifications.

Every design has a leading all-ones "constant" column. Each categorical
covariate contributes (levels - 1) indicator columns against a fixed
reference category; the references are carried as metadata. Category levels
absent from a cohort still get their (all-zero) column so that coefficient
labels are stable across cohorts; the least-squares rank guard prunes them.

Covariate block order: prior attainment group, month of birth, gender,
ethnicity, first language, SEN, FSM, neighbourhood deprivation decile.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .categories import (
    Ethnicity,
    FirstLanguage,
    Gender,
    IDACI_DECILE_MAX,
    KS2_GROUP_MAX,
    Month,
    Sen,
)
from .cohort import ValidatedCohort
from .errors import DesignError


@dataclass(frozen=True)
class ModelSpec:
    """Which covariate blocks a model adjusts for."""

    include_prior_attainment: bool
    include_background: bool


class MeasureKind(enum.Enum):
    """The four school performance measures; values are the CLI short codes."""

    ATTAINMENT8 = "a8"
    ADJUSTED_ATTAINMENT8 = "aa8"
    PROGRESS8 = "p8"
    ADJUSTED_PROGRESS8 = "ap8"

    @property
    def model_spec(self) -> ModelSpec:
        prior = self in (MeasureKind.PROGRESS8, MeasureKind.ADJUSTED_PROGRESS8)
        background = self in (MeasureKind.ADJUSTED_ATTAINMENT8, MeasureKind.ADJUSTED_PROGRESS8)
        return ModelSpec(include_prior_attainment=prior, include_background=background)

    @property
    def code(self) -> str:
        return self.value


@dataclass(frozen=True)
class DesignMatrix:
    """N x k dummy design with stable column labels and reference metadata."""

    values: np.ndarray
    column_labels: tuple[str, ...]
    reference_categories: dict[str, str]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


def _slug(category: str) -> str:
    out = category.replace("/", " ")
    return "_".join(out.split())


REFERENCE_CATEGORIES = {
    "ks2_group": "1",
    "month_of_birth": Month.SEPTEMBER.value,
    "gender": Gender.MALE.value,
    "ethnicity": Ethnicity.WHITE_BRITISH.value,
    "first_language": FirstLanguage.ENGLISH.value,
    "sen": Sen.NONE.value,
    "fsm": "0",
    "idaci_decile": "1",
}

KS2_LABELS = tuple(f"ks2_group_{g}" for g in range(2, KS2_GROUP_MAX + 1))
MONTH_LABELS = tuple(f"month_of_birth_{m.value}" for m in list(Month)[1:])
ETHNICITY_LABELS = tuple(f"ethnicity_{_slug(e.value)}" for e in list(Ethnicity)[1:])
SEN_LABELS = ("sen_SEN_support", "sen_Statement")
IDACI_LABELS = tuple(f"idaci_decile_{d}" for d in range(2, IDACI_DECILE_MAX + 1))
BACKGROUND_LABELS = (
    MONTH_LABELS + ("gender_Female",) + ETHNICITY_LABELS
    + ("first_language_Other",) + SEN_LABELS + ("fsm_eligible",) + IDACI_LABELS
)


def design_labels(spec: ModelSpec) -> tuple[str, ...]:
    """Deterministic column labels for a model spec (cohort-independent)."""
    labels: tuple[str, ...] = ("constant",)
    if spec.include_prior_attainment:
        labels += KS2_LABELS
    if spec.include_background:
        labels += BACKGROUND_LABELS
    return labels


def build_design_matrix(cohort: ValidatedCohort, spec: ModelSpec) -> DesignMatrix:
    """Build the dummy design for a cohort under a model spec.

    Fatal if the spec adjusts for prior attainment and any pupil lacks a
    ks2_group. Category levels with no pupils produce all-zero columns and a
    warning; they are pruned later by the estimation rank guard.
    """
    pupils = cohort.pupils
    n = len(pupils)
    columns: list[np.ndarray] = [np.ones(n)]

    if spec.include_prior_attainment:
        missing = [p.pupil_id for p in pupils if p.ks2_group is None]
        if missing:
            shown = ", ".join(missing[:20])
            more = "" if len(missing) <= 20 else f" (and {len(missing) - 20} more)"
            raise DesignError(
                "model adjusts for prior attainment but ks2_group is missing "
                f"for pupils: {shown}{more}"
            )
        ks2 = np.array([p.ks2_group for p in pupils], dtype=np.intp)
        for g in range(2, KS2_GROUP_MAX + 1):
            columns.append((ks2 == g).astype(float))

    if spec.include_background:
        month = np.array([list(Month).index(p.month_of_birth) for p in pupils], dtype=np.intp)
        for idx in range(1, len(Month)):
            columns.append((month == idx).astype(float))
        columns.append(
            np.array([1.0 if p.gender is Gender.FEMALE else 0.0 for p in pupils])
        )
        eth = np.array([list(Ethnicity).index(p.ethnicity) for p in pupils], dtype=np.intp)
        for idx in range(1, len(Ethnicity)):
            columns.append((eth == idx).astype(float))
        columns.append(
            np.array([1.0 if p.first_language is FirstLanguage.OTHER else 0.0 for p in pupils])
        )
        columns.append(np.array([1.0 if p.sen is Sen.SUPPORT else 0.0 for p in pupils]))
        columns.append(np.array([1.0 if p.sen is Sen.STATEMENT else 0.0 for p in pupils]))
        columns.append(np.array([1.0 if p.fsm else 0.0 for p in pupils]))
        idaci = np.array([p.idaci_decile for p in pupils], dtype=np.intp)
        for d in range(2, IDACI_DECILE_MAX + 1):
            columns.append((idaci == d).astype(float))

    labels = design_labels(spec)
    values = np.column_stack(columns)
    assert values.shape == (n, len(labels))

    empty = [labels[j] for j in range(1, values.shape[1]) if not values[:, j].any()]
    if empty:
        warnings.warn(
            f"category level(s) absent from cohort (all-zero columns): {', '.join(empty)}",
            stacklevel=2,
        )

    refs = {
        name: ref
        for name, ref in REFERENCE_CATEGORIES.items()
        if (name == "ks2_group" and spec.include_prior_attainment)
        or (name != "ks2_group" and spec.include_background)
    }
    return DesignMatrix(values=values, column_labels=labels, reference_categories=refs)


def band_ks2(fine_scores, n_groups: int = KS2_GROUP_MAX) -> list[int]:
    """Assign prior-attainment groups 1..n_groups by empirical quantile cut.

    Cut points are the j/n_groups empirical quantiles; a score lands in
    group 1 + (number of cut points it strictly exceeds). Equal scores get
    equal groups, and the assignment is monotone nondecreasing in score.
    Degenerate input (all scores identical) puts everyone in group 1 with a
    warning. Intended for synthetic or exploratory data; real extracts
    should arrive pre-banded.
    """
    scores = np.asarray(list(fine_scores), dtype=float)
    if scores.size == 0:
        raise DesignError("band_ks2 requires at least one score")
    if not np.all(np.isfinite(scores)):
        raise DesignError("band_ks2 requires finite scores")
    if n_groups < 2:
        raise DesignError("band_ks2 requires n_groups >= 2")

    if np.all(scores == scores[0]):
        warnings.warn("all scores identical; assigning every pupil to group 1", stacklevel=2)
        return [1] * scores.size

    cuts = np.quantile(scores, [j / n_groups for j in range(1, n_groups)])
    groups = 1 + np.sum(scores[:, None] > cuts[None, :], axis=1)
    return [int(g) for g in groups]
