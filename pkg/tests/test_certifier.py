import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hammerstein_reflect.bounds import StripInterval, cone_constant
from hammerstein_reflect.certifier import (
    FLAG_NON_RIGOROUS,
    FLAG_NOT_SELF_CONTAINED,
    FLAG_SIGN_CHANGING_KERNEL,
    CertificationProblem,
    ConditionKind,
    ConeVariant,
    RadiusCondition,
    Thresholds,
    ThresholdSource,
    certify,
    check_condition,
    condition_box,
    cone_sanity_check,
    discrepancy_record,
    multiplicity_verdict,
    radii_from_lists,
    resolve_thresholds,
    threshold_M,
    threshold_m,
)
from hammerstein_reflect.errors import DomainError, EvaluationError, HypothesisViolation
from hammerstein_reflect.kernel import ProblemParams
from hammerstein_reflect.nonlinearity import Box3, parse, parse_weight, shift_to_f

I1, I0 = ConditionKind.INDEX1, ConditionKind.INDEX0
EXAMPLE_H = "1/(2+(t-1)^2)+u^2/5+2*u+1/(1+7*v^2)+7"
P = ProblemParams(1.0, 1.5)
STRIP = StripInterval(0.48)
# oracle-pinned thresholds at the worked example parameters
M_SMALL = 1.001684873139347
M_LARGE = 10783.752551308864


def cond(rho, kind, ok=True):
    box = Box3((0, 1), (0, 1), (0, 1))
    return RadiusCondition(rho, kind, 0.0, 1.0, ok, False, (0.0, 0.0, 0.0), box)


def test_threshold_examples():
    assert threshold_m(ProblemParams(1.0, 0.5)) == 0.5
    assert threshold_m(P) == pytest.approx(M_SMALL, rel=1e-12)
    assert threshold_m(P, source=ThresholdSource.ORACLE) == pytest.approx(M_SMALL, abs=1e-6)
    M = threshold_M(ProblemParams(1.0, 0.7), StripInterval(0.25))
    assert M == pytest.approx(1 / 0.18667966836588887, rel=1e-12)
    assert M == pytest.approx(5.357, abs=1e-3)
    assert threshold_M(P, STRIP) == pytest.approx(M_LARGE, rel=1e-10)
    assert threshold_M(P, STRIP, source=ThresholdSource.ORACLE) == pytest.approx(M_LARGE, rel=1e-6)


def test_threshold_constant_weight_scales():
    g = parse_weight("2")
    assert threshold_m(P, g) == pytest.approx(M_SMALL / 2, rel=1e-12)
    assert threshold_M(P, STRIP, g) == pytest.approx(M_LARGE / 2, rel=1e-10)


def test_threshold_general_weight_uses_oracle():
    g = parse_weight("1 + s^2")
    th = resolve_thresholds(ProblemParams(1.0, 0.5), StripInterval(0.3), ConeVariant.CHANGING_SIGN, g)
    assert th.source is ThresholdSource.ORACLE
    assert th.notes
    # for a positive kernel the weighted sup is the weighted integral's sup, at least the unweighted one
    assert th.m < 0.5


def test_negative_weight_rejected():
    with pytest.raises(HypothesisViolation):
        threshold_m(P, parse_weight("s"))
    with pytest.raises(HypothesisViolation):
        resolve_thresholds(P, STRIP, ConeVariant.NONNEGATIVE, parse_weight("cos(4*s)"),
                           ThresholdSource.MANUAL, 1.0, 1.0)


def test_manual_thresholds_validation():
    with pytest.raises(ValueError):
        resolve_thresholds(P, STRIP, ConeVariant.NONNEGATIVE, source=ThresholdSource.MANUAL, manual_m=1.0)
    with pytest.raises(ValueError):
        resolve_thresholds(P, STRIP, ConeVariant.NONNEGATIVE, source=ThresholdSource.MANUAL, manual_m=-1.0,
                           manual_M=1.0)


def test_threshold_source_parse():
    assert ThresholdSource.parse("oracle") is ThresholdSource.ORACLE
    assert ThresholdSource.parse("Manual") is ThresholdSource.MANUAL
    with pytest.raises(ValueError):
        ThresholdSource.parse("guess")


def test_condition_boxes():
    c = 0.25
    b = condition_box(P, ConeVariant.CHANGING_SIGN, STRIP, c, 2.0, I1)
    assert b.ranges == ((-1.0, 1.0), (-2.0, 2.0), (-2.0, 2.0))
    b = condition_box(P, ConeVariant.CHANGING_SIGN, STRIP, c, 2.0, I0)
    assert b.ranges == ((0.48, 0.52), (2.0, 8.0), (-8.0, 8.0))
    b = condition_box(P, ConeVariant.NONNEGATIVE, STRIP, c, 2.0, I1)
    assert b.ranges == ((-1.0, 1.0), (0.0, 2.0), (0.0, 2.0))
    b = condition_box(P, ConeVariant.NONNEGATIVE, STRIP, c, 2.0, I0)
    assert b.ranges == ((0.48, 0.52), (2.0, 8.0), (0.0, 8.0))
    b = condition_box(P, ConeVariant.STRICTLY_POSITIVE, STRIP, c, 2.0, I1)
    assert b.ranges == ((-1.0, 1.0), (0.5, 2.0), (0.5, 2.0))
    b = condition_box(P, ConeVariant.STRICTLY_POSITIVE, STRIP, c, 2.0, I0)
    assert b.ranges == ((-1.0, 1.0), (2.0, 8.0), (2.0, 8.0))
    with pytest.raises(ValueError):
        condition_box(P, ConeVariant.NONNEGATIVE, STRIP, c, 0.0, I1)


def _manual(c=None):
    return Thresholds(ThresholdSource.MANUAL, 11.5009, 6.58486, c if c is not None else cone_constant(P, STRIP))


def test_check_condition_examples():
    f = shift_to_f(parse(EXAMPLE_H), 1.5)
    th = _manual()
    r1 = check_condition(P, ConeVariant.CHANGING_SIGN, f, 1.0, I1, th, STRIP)
    assert r1.f_bound == 11.325 and r1.satisfied and r1.attaining_point == (1.0, 1.0, 1.0)
    r2 = check_condition(P, ConeVariant.NONNEGATIVE, f, 2.0, I0, th, STRIP)
    assert r2.f_bound == pytest.approx(6.6202, abs=1e-4) and r2.satisfied
    r3 = check_condition(P, ConeVariant.CHANGING_SIGN, f, 2.0, I0, th, STRIP)
    assert r3.f_bound < 0 and not r3.satisfied  # v = -rho/c drives the infimum down
    zero = check_condition(P, ConeVariant.CHANGING_SIGN, parse("0"), 3.0, I1, th, STRIP)
    assert zero.satisfied and zero.f_bound == 0.0


def test_marginal_flag():
    f = parse("u")
    th = Thresholds(ThresholdSource.MANUAL, 1.0 + 1e-9, 1.0, 0.5)
    r = check_condition(P, ConeVariant.NONNEGATIVE, f, 1.0, I1, th, STRIP, epsilon=1e-6)
    assert r.satisfied and r.marginal
    r = check_condition(P, ConeVariant.NONNEGATIVE, f, 1.0, I1, th, STRIP, epsilon=0.0)
    assert r.satisfied and not r.marginal


def test_evaluation_error_aborts():
    th = _manual()
    with pytest.raises(EvaluationError):
        check_condition(P, ConeVariant.CHANGING_SIGN, parse("1/u"), 1.0, I1, th, STRIP)


@pytest.mark.parametrize(
    "conds,c,ladder,count",
    [
        ([cond(1, I1), cond(2, I0)], 0.5, "S2", 1),
        ([cond(1, I0), cond(1.5, I1)], 0.5, None, 0),
        ([cond(1, I0), cond(3, I1)], 0.5, "S1", 1),
        ([cond(1, I0), cond(3, I1), cond(4, I0)], 0.5, "S3", 2),
        ([cond(1, I1), cond(2, I0), cond(5, I1)], 0.5, "S4", 2),
        ([cond(1, I1), cond(2, I0), cond(3, I1)], 0.5, "S2", 1),
        ([cond(1, I0), cond(3, I1), cond(4, I0), cond(9, I1)], 0.5, "S5", 3),
        ([cond(1, I1), cond(2, I0), cond(5, I1), cond(6, I0)], 0.5, "S6", 3),
        ([cond(1, I1), cond(2, I0, ok=False)], 0.5, None, 0),
        ([], 0.5, None, 0),
    ],
)
def test_ladders(conds, c, ladder, count):
    v = multiplicity_verdict(conds, c)
    assert v.ladder == ladder and v.solution_count == count


def test_ladder_uses_exact_c():
    # rho1/c == rho2 exactly: the strict gap fails
    c = 0.25
    assert multiplicity_verdict([cond(1, I0), cond(4, I1)], c).ladder is None
    assert multiplicity_verdict([cond(1, I0), cond(4 + 1e-12, I1)], c).ladder == "S1"


def test_ladder_unsorted_input():
    v = multiplicity_verdict([cond(6, I0), cond(2, I0), cond(5, I1), cond(1, I1)], 0.5)
    assert v.ladder == "S6"
    assert [x.rho for x in v.witnesses] == [1, 2, 5, 6]


_conditions = st.lists(
    st.tuples(st.floats(0.1, 100), st.sampled_from([I1, I0]), st.booleans()), min_size=0, max_size=7
)


@settings(max_examples=200, deadline=None)
@given(_conditions, st.floats(0.01, 1.0), st.data())
def test_count_monotone_under_deletion(entries, c, data):
    conds = [cond(r, k, ok) for r, k, ok in entries]
    full = multiplicity_verdict(conds, c).solution_count
    if conds:
        i = data.draw(st.integers(0, len(conds) - 1))
        reduced = conds[:i] + conds[i + 1:]
        assert multiplicity_verdict(reduced, c).solution_count <= full


def test_scaling_coherence():
    f = shift_to_f(parse(EXAMPLE_H), 1.5)
    g = parse(f"3 * ({f.to_source()})")
    th = _manual()
    for kind, cone in ((I1, ConeVariant.CHANGING_SIGN), (I0, ConeVariant.NONNEGATIVE)):
        a = check_condition(P, cone, f, 2.0, kind, th, STRIP)
        b = check_condition(P, cone, g, 2.0, kind, th, STRIP)
        assert b.f_bound == pytest.approx(3 * a.f_bound, rel=1e-9)
        crossing = (3 * a.f_bound < a.threshold) if kind is I1 else (3 * a.f_bound > a.threshold)
        assert b.satisfied == crossing


def test_symmetric_box_relabeling():
    th = _manual()
    f = parse("u^2 + v^2 + u*v + cos(t)")
    g = parse("v^2 + u^2 + v*u + cos(t)")
    a = check_condition(P, ConeVariant.CHANGING_SIGN, f, 1.5, I1, th, STRIP)
    b = check_condition(P, ConeVariant.CHANGING_SIGN, g, 1.5, I1, th, STRIP)
    assert a.f_bound == pytest.approx(b.f_bound, rel=1e-12)


def _example_problem(cone=ConeVariant.NONNEGATIVE):
    return CertificationProblem(P, STRIP, cone, parse(EXAMPLE_H), radii_from_lists([1], [2]))


def test_certify_manual_reproduces_published_verdict():
    cert = certify(_example_problem(), ThresholdSource.MANUAL, 11.5009, 6.58486)
    assert cert.ladder == "S2" and cert.solution_count == 1
    assert not cert.self_contained
    assert FLAG_NOT_SELF_CONTAINED in cert.flags
    assert FLAG_NON_RIGOROUS in cert.flags
    assert FLAG_SIGN_CHANGING_KERNEL in cert.flags


def test_certify_oracle_with_discrepancies():
    ref = {"m": 11.5009, "M": 6.58486, "c": 0.000353538, "f.index1.1": 11.325, "f.index0.2": 6.62418}
    cert = certify(_example_problem(), ThresholdSource.ORACLE, reference=ref)
    assert cert.solution_count == 0 and cert.ladder is None
    assert cert.reference_verdict.ladder == "S2"
    recs = {r["quantity"]: r for r in cert.discrepancies}
    assert not recs["m"]["agrees"] and not recs["M"]["agrees"]
    assert recs["c"]["agrees"] and recs["f.index1.1"]["agrees"]
    assert not recs["f.index0.2"]["agrees"]
    assert recs["m"]["computed"] == pytest.approx(M_SMALL, abs=1e-6)
    d = cert.to_dict()
    for key in ("problem", "cone", "thresholds", "conditions", "ladder", "solution_count", "flags",
                "discrepancies", "reference_verdict"):
        assert key in d
    assert set(d["thresholds"]) >= {"source", "m", "M"}
    assert set(d["conditions"][0]) >= {"rho", "kind", "f_bound", "threshold", "satisfied", "marginal",
                                       "attaining_point"}


def test_discrepancy_unknown_key():
    th = _manual()
    recs = discrepancy_record({"f.index1.7": 1.0}, th, [])
    assert recs[0]["computed"] is None and not recs[0]["agrees"]


def test_certify_strictly_positive():
    p = ProblemParams(1.0, 0.5)
    h = parse("0.01 + u^2 - 0.5*v")  # f = 0.01 + u^2: small near 0, large for large u
    prob = CertificationProblem(p, StripInterval(0.3), ConeVariant.STRICTLY_POSITIVE, h,
                                radii_from_lists([0.4], [40.0]))
    cert = certify(prob)
    assert cert.thresholds.m == pytest.approx(0.5)
    assert cert.thresholds.M == pytest.approx(0.5)
    assert cert.ladder == "S2"
    assert cert.conditions[0].f_bound == pytest.approx(0.17 / 0.4)
    with pytest.raises(HypothesisViolation):
        certify(CertificationProblem(P, STRIP, ConeVariant.STRICTLY_POSITIVE, h, ((1.0, I1),)))


def test_certify_rejects_bad_regime():
    h = parse("u")
    with pytest.raises(DomainError):
        certify(CertificationProblem(ProblemParams(1.0, 2.0), STRIP, ConeVariant.CHANGING_SIGN, h, ((1.0, I1),)))
    with pytest.raises(DomainError):
        certify(CertificationProblem(P, StripInterval(0.3), ConeVariant.CHANGING_SIGN, h, ((1.0, I1),)))


def test_radii_from_lists():
    assert radii_from_lists([1, 3], [2]) == ((1.0, I1), (3.0, I1), (2.0, I0))
    with pytest.raises(DomainError):
        radii_from_lists([0], [])
    with pytest.raises(DomainError):
        radii_from_lists([], [math.inf])


def test_cone_sanity_examples():
    f = shift_to_f(parse(EXAMPLE_H), 1.5)
    rep = cone_sanity_check(P, STRIP, None, f, samples=0, extra=[1.0, 0.0])
    assert rep.samples == 2 and rep.passed and rep.worst_margin > 0


def test_cone_sanity_random():
    f = shift_to_f(parse(EXAMPLE_H), 1.5)
    rep = cone_sanity_check(P, STRIP, None, f, samples=100)
    assert rep.samples == 100 and rep.violations == 0 and rep.worst_margin >= -1e-8


def test_cone_sanity_detects_negative_source():
    # f < 0 breaks invariance: the image has a negative strip minimum
    rep = cone_sanity_check(P, STRIP, None, parse("-1"), samples=5)
    assert not rep.passed
