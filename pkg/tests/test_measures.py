import dataclasses

import numpy as np
import pytest

from vamkit.cohort import validate_cohort
from vamkit.design import MeasureKind
from vamkit.errors import AnalysisError
from vamkit.measures import (
    PupilScore,
    SignificanceCategory,
    compute_measure,
    compute_measures,
    measure_summary,
    school_scores,
)

from conftest import make_pupil, make_school, random_cohort

A8 = MeasureKind.ATTAINMENT8
P8 = MeasureKind.PROGRESS8


def scores_for(school_id, values, measure=A8, start=0):
    return [
        PupilScore(pupil_id=f"{school_id}_{start + i}", measure=measure, score=v)
        for i, v in enumerate(values)
    ]


# ---------------------------------------------------------------------------
# school_scores
# ---------------------------------------------------------------------------


def test_all_zero_school_is_average():
    pupils = scores_for("S1", [0.0, 0.0, 0.0])
    mapping = {p.pupil_id: "S1" for p in pupils}
    (score,) = school_scores(pupils, mapping, national_sd=1.0)
    assert score.score == 0.0
    assert score.category is SignificanceCategory.NOT_SIGNIFICANT


def test_ci_hand_example_four_pupils():
    pupils = scores_for("S1", [0.2, 0.4, 0.6, 0.8])
    mapping = {p.pupil_id: "S1" for p in pupils}
    (score,) = school_scores(pupils, mapping, national_sd=1.0)
    assert score.score == pytest.approx(0.5, abs=1e-12)
    assert score.n_pupils == 4
    assert score.ci_low == pytest.approx(0.5 - 1.959964 / 2.0, abs=1e-12)   # -0.479982
    assert score.ci_high == pytest.approx(0.5 + 1.959964 / 2.0, abs=1e-12)  # 1.479982
    assert score.category is SignificanceCategory.NOT_SIGNIFICANT


def test_ci_hand_example_four_hundred_pupils():
    pupils = scores_for("S1", [0.5] * 400)
    mapping = {p.pupil_id: "S1" for p in pupils}
    (score,) = school_scores(pupils, mapping, national_sd=1.0)
    assert score.ci_low == pytest.approx(0.4020018, abs=1e-7)
    assert score.ci_high == pytest.approx(0.5979982, abs=1e-7)
    assert score.category is SignificanceCategory.SIGNIFICANTLY_ABOVE


def test_significantly_below():
    pupils = scores_for("S1", [-0.5] * 400)
    mapping = {p.pupil_id: "S1" for p in pupils}
    (score,) = school_scores(pupils, mapping, national_sd=1.0)
    assert score.category is SignificanceCategory.SIGNIFICANTLY_BELOW


def test_within_school_sd_flag():
    values = [0.2, 0.4, 0.6, 0.8]
    pupils = scores_for("S1", values) + scores_for("S2", [3.0])
    mapping = {p.pupil_id: p.pupil_id.split("_")[0] for p in pupils}
    national, within = (
        school_scores(pupils, mapping, 1.0, within_school_sd=flag)
        for flag in (False, True)
    )
    own_sd = float(np.std(values, ddof=1))
    assert within[0].ci_high - within[0].ci_low == pytest.approx(
        2 * 1.959964 * own_sd / 2.0, abs=1e-12
    )
    assert national[0].ci_high - national[0].ci_low == pytest.approx(2 * 1.959964 / 2.0)
    # single-pupil school falls back to the national SD
    assert within[1].ci_high - within[1].ci_low == pytest.approx(2 * 1.959964, abs=1e-12)


def test_national_sd_must_be_positive():
    pupils = scores_for("S1", [0.1])
    with pytest.raises(AnalysisError):
        school_scores(pupils, {pupils[0].pupil_id: "S1"}, 0.0)


# ---------------------------------------------------------------------------
# compute_measure
# ---------------------------------------------------------------------------


def build_two_school_cohort():
    pupils = []
    # S1: ks2 groups 1,1,2 with outcomes 10,20,60; S2: groups 2,2 outcomes 50,40
    data = [
        ("P1", "S1", 1, 10.0),
        ("P2", "S1", 1, 20.0),
        ("P3", "S1", 2, 60.0),
        ("P4", "S2", 2, 50.0),
        ("P5", "S2", 2, 40.0),
    ]
    for pid, sid, ks2, a8 in data:
        pupils.append(make_pupil(pid, sid, ks2_group=ks2, attainment8_total=a8))
    return validate_cohort(pupils, [make_school("S1"), make_school("S2")])


def test_attainment8_scores_are_centred_outcome():
    cohort = build_two_school_cohort()
    result = compute_measure(cohort, A8)
    y = np.array([p.attainment8_total for p in cohort.pupils])
    expected = (y - y.mean()) / 10.0
    got = np.array([s.score for s in result.pupil_scores])
    assert got == pytest.approx(expected, abs=1e-12)
    assert abs(got.mean()) <= 1e-9
    assert result.summary.national_mean_grades == pytest.approx(y.mean() / 10.0)
    assert result.summary.adjusted_r_squared == 0.0
    # school score = (school mean outcome - national mean) / 10, exactly
    for school in result.school_scores:
        members = y[[p.school_id == school.school_id for p in cohort.pupils]]
        assert school.score == pytest.approx((members.mean() - y.mean()) / 10.0, abs=1e-12)


def test_residual_to_grade_scaling():
    cohort = build_two_school_cohort()
    result = compute_measure(cohort, A8)
    assert np.array([s.score for s in result.pupil_scores]) * 10.0 == pytest.approx(
        result.fit.residuals, abs=1e-12
    )


def test_progress8_equals_group_mean_oracle():
    cohort = build_two_school_cohort()
    with pytest.warns(UserWarning):  # ks2 groups 3..34 absent
        result = compute_measure(cohort, P8)
    y = {p.pupil_id: p.attainment8_total for p in cohort.pupils}
    group = {p.pupil_id: p.ks2_group for p in cohort.pupils}
    group_means = {
        g: np.mean([y[pid] for pid in y if group[pid] == g]) for g in set(group.values())
    }
    for ps in result.pupil_scores:
        oracle = (y[ps.pupil_id] - group_means[group[ps.pupil_id]]) / 10.0
        assert ps.score == pytest.approx(oracle, abs=1e-10)


def test_progress8_group_mean_oracle_midsize(midsize_population):
    cohort = midsize_population.cohort
    result = compute_measure(cohort, P8)
    y = np.array([p.attainment8_total for p in cohort.pupils])
    groups = np.array([p.ks2_group for p in cohort.pupils])
    means = {g: y[groups == g].mean() for g in np.unique(groups)}
    oracle = np.array([(yi - means[g]) / 10.0 for yi, g in zip(y, groups)])
    got = np.array([s.score for s in result.pupil_scores])
    assert np.max(np.abs(got - oracle)) <= 1e-10


def test_zero_category_means_for_adjusted_covariates():
    cohort = random_cohort(314, n_schools=8, pupils_per_school=40)
    result = compute_measure(cohort, MeasureKind.ADJUSTED_ATTAINMENT8)
    scores = np.array([s.score for s in result.pupil_scores])
    fsm = np.array([p.fsm for p in cohort.pupils])
    assert abs(scores[fsm].mean()) <= 1e-9
    assert abs(scores[~fsm].mean()) <= 1e-9
    genders = np.array([p.gender.value for p in cohort.pupils])
    for g in ("Male", "Female"):
        assert abs(scores[genders == g].mean()) <= 1e-9


def test_nested_sd_orderings(midsize_population):
    results = compute_measures(midsize_population.cohort, list(MeasureKind))
    sd = {k: r.summary.sd_pupil_scores for k, r in results.items()}
    assert sd[MeasureKind.ATTAINMENT8] >= sd[MeasureKind.ADJUSTED_ATTAINMENT8]
    assert sd[MeasureKind.ADJUSTED_ATTAINMENT8] >= sd[MeasureKind.ADJUSTED_PROGRESS8]
    assert sd[MeasureKind.ATTAINMENT8] >= sd[MeasureKind.PROGRESS8]
    assert sd[MeasureKind.PROGRESS8] >= sd[MeasureKind.ADJUSTED_PROGRESS8]


def test_outcome_scaling_preserves_ranks_and_categories():
    cohort = build_two_school_cohort()
    base = compute_measure(cohort, A8)
    scaled_pupils = [
        dataclasses.replace(p, attainment8_total=p.attainment8_total / 10.0)
        for p in cohort.pupils
    ]
    scaled_cohort = validate_cohort(scaled_pupils, cohort.schools)
    scaled = compute_measure(scaled_cohort, A8)
    for s_base, s_scaled in zip(base.school_scores, scaled.school_scores):
        assert s_scaled.school_id == s_base.school_id
        assert s_scaled.score * 10.0 == pytest.approx(s_base.score, abs=1e-12)
        assert s_scaled.category is s_base.category
    rank_base = [s.school_id for s in sorted(base.school_scores, key=lambda s: -s.score)]
    rank_scaled = [s.school_id for s in sorted(scaled.school_scores, key=lambda s: -s.score)]
    assert rank_base == rank_scaled


def test_missing_ks2_rejected_for_progress_measures():
    pupils = [
        make_pupil("P1", "S1", ks2_group=None),
        make_pupil("P2", "S1", ks2_group=3, attainment8_total=30.0),
        make_pupil("P3", "S1", ks2_group=4, attainment8_total=60.0),
    ]
    cohort = validate_cohort(pupils, [make_school("S1")])
    from vamkit.errors import DesignError

    with pytest.raises(DesignError, match="P1"):
        compute_measure(cohort, P8)
    with pytest.warns(UserWarning, match="single school"):
        compute_measure(cohort, A8)  # fine without prior attainment


def test_single_school_summary_warns():
    pupils = [
        make_pupil("P1", "S1", attainment8_total=30.0),
        make_pupil("P2", "S1", attainment8_total=60.0),
    ]
    cohort = validate_cohort(pupils, [make_school("S1")])
    with pytest.warns(UserWarning, match="single school"):
        result = compute_measure(cohort, A8)
    assert result.summary.sd_school_scores == 0.0


def test_measure_summary_sample_convention():
    pupils = scores_for("S1", [0.0, 1.0]) + scores_for("S2", [2.0, 3.0])
    mapping = {p.pupil_id: p.pupil_id.split("_")[0] for p in pupils}
    sch = school_scores(pupils, mapping, national_sd=1.0)
    fit = compute_measure(build_two_school_cohort(), A8).fit  # any fit for the R^2 slot
    summary = measure_summary(fit, pupils, sch, national_mean_grades=5.0)
    assert summary.sd_pupil_scores == pytest.approx(np.std([0, 1, 2, 3], ddof=1))
    assert summary.sd_school_scores == pytest.approx(np.std([0.5, 2.5], ddof=1))
    assert summary.n_pupils == 4 and summary.n_schools == 2
