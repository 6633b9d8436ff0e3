"""Fixed-point-index conditions, multiplicity ladders and certificates.

A radius condition compares a box extremum of f = h + omega*v, scaled by
1/rho, against a kernel threshold:

* Index1 (index 1 on K_rho):  sup f / rho < m
* Index0 (index 0 on V_rho):  inf f / rho > M

where 1/m = sup_t int |k| g and 1/M = inf over the strip of int_strip k g.
Satisfied conditions at suitably separated radii combine into ladders
S1..S6 that guarantee one, two or three nontrivial solutions.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import oracles
from .bounds import (
    StripInterval,
    check_strip,
    cone_constant,
    inf_strip_integral,
    sup_abs_integral,
    whole_interval_inf_integral,
    whole_square_cone_constant,
)
from .errors import DomainError, HypothesisViolation
from .kernel import QUARTER_PI, ProblemParams
from .nonlinearity import Box3, NonlinearityExpr, box_inf, box_sup, shift_to_f
from .solver import NystromOperator, SymmetricGrid, cone_margin, sample_cone_members

G_CHECK_POINTS = 2001

FLAG_NON_RIGOROUS = "NON-RIGOROUS: f-bounds come from grid search with local refinement"
FLAG_NOT_SELF_CONTAINED = "NOT SELF-CONTAINED: thresholds were supplied manually"
FLAG_SIGN_CHANGING_KERNEL = (
    "HYPOTHESIS NOT MET: the non-negative cone needs k >= 0, but k changes sign for zeta > pi/4"
)


class ConeVariant(enum.Enum):
    CHANGING_SIGN = "changing-sign"
    NONNEGATIVE = "nonnegative"
    STRICTLY_POSITIVE = "strictly-positive"


class ConditionKind(enum.Enum):
    INDEX1 = "index1"
    INDEX0 = "index0"


class ThresholdSource(enum.Enum):
    CLOSED_FORM = "closed-form"
    ORACLE = "quadrature-oracle"
    MANUAL = "manual-override"

    @classmethod
    def parse(cls, text: str) -> "ThresholdSource":
        aliases = {"closed-form": cls.CLOSED_FORM, "oracle": cls.ORACLE, "quadrature-oracle": cls.ORACLE,
                   "manual": cls.MANUAL, "manual-override": cls.MANUAL}
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown threshold source {text!r}; use closed-form, oracle or manual") from None


def condition_box(params: ProblemParams, cone: ConeVariant, strip: StripInterval, c: float,
                  rho: float, kind: ConditionKind) -> Box3:
    """Box of (t, u, v) over which f is maximized (Index1) or minimized (Index0)."""
    if not rho > 0:
        raise ValueError(f"radius must be > 0, got {rho}")
    T = params.T
    whole = (-T, T)
    if kind is ConditionKind.INDEX1:
        lo = {ConeVariant.CHANGING_SIGN: -rho, ConeVariant.NONNEGATIVE: 0.0,
              ConeVariant.STRICTLY_POSITIVE: c * rho}[cone]
        return Box3(whole, (lo, rho), (lo, rho))
    top = rho / c
    if cone is ConeVariant.STRICTLY_POSITIVE:
        return Box3(whole, (rho, top), (rho, top))
    v_lo = -top if cone is ConeVariant.CHANGING_SIGN else 0.0
    return Box3(strip.scaled(T), (rho, top), (v_lo, top))


# --- thresholds ----------------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    source: ThresholdSource
    m: float
    M: float
    c: float
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {"source": self.source.value, "m": self.m, "M": self.M, "c": self.c, "notes": list(self.notes)}


def check_weight(g: Optional[NonlinearityExpr], T: float, points: int = G_CHECK_POINTS) -> None:
    """Raise HypothesisViolation unless g >= 0 on a uniform grid of [-T, T]."""
    if g is None:
        return
    s = np.linspace(-T, T, points)
    vals = g.evaluate_array(s=s) * np.ones_like(s)
    if np.any(vals < 0):
        i = int(np.argmin(vals))
        raise HypothesisViolation(f"weight g must be non-negative; g({s[i]:.6g}) = {vals[i]:.6g}")


def _constant_weight(g: Optional[NonlinearityExpr]) -> Optional[float]:
    if g is None:
        return 1.0
    if g.is_constant():
        return float(g())
    return None


def _weight_fn(g: Optional[NonlinearityExpr]):
    if g is None:
        return None
    return lambda s: g.evaluate_array(s=s)


def sup_weighted_abs_integral(params: ProblemParams, g=None, source=ThresholdSource.CLOSED_FORM) -> float:
    kappa = _constant_weight(g)
    if source is ThresholdSource.CLOSED_FORM and kappa is not None:
        return kappa * sup_abs_integral(params)
    params.require_bounds_regime()
    return oracles.sup_abs_integral_oracle(params, _weight_fn(g)).value


def inf_weighted_strip_integral(params: ProblemParams, strip: StripInterval, g=None,
                                source=ThresholdSource.CLOSED_FORM, cone=ConeVariant.CHANGING_SIGN) -> float:
    kappa = _constant_weight(g)
    if cone is ConeVariant.STRICTLY_POSITIVE:
        if source is ThresholdSource.CLOSED_FORM and kappa is not None:
            return kappa * whole_interval_inf_integral(params)
        params.require_bounds_regime()
        return oracles.whole_interval_inf_oracle(params, _weight_fn(g)).value
    if source is ThresholdSource.CLOSED_FORM and kappa is not None:
        return kappa * inf_strip_integral(params, strip)
    check_strip(params, strip)
    return oracles.inf_strip_integral_oracle(params, strip, _weight_fn(g)).value


def threshold_m(params: ProblemParams, g=None, source=ThresholdSource.CLOSED_FORM) -> float:
    """m = 1 / sup_t int |k(t, s)| g(s) ds."""
    check_weight(g, params.T)
    return 1.0 / sup_weighted_abs_integral(params, g, source)


def threshold_M(params: ProblemParams, strip: StripInterval, g=None, source=ThresholdSource.CLOSED_FORM,
                cone: ConeVariant = ConeVariant.CHANGING_SIGN) -> float:
    """M = 1 / inf_t int_strip k(t, s) g(s) ds (the whole interval for the strictly positive cone)."""
    check_weight(g, params.T)
    value = inf_weighted_strip_integral(params, strip, g, source, cone)
    if not value > 0:
        raise HypothesisViolation(f"strip integral infimum must be positive, got {value:.6g}")
    return 1.0 / value


def cone_constant_for(params: ProblemParams, strip: StripInterval, cone: ConeVariant) -> float:
    if cone is ConeVariant.STRICTLY_POSITIVE:
        return whole_square_cone_constant(params)
    return cone_constant(params, strip)


def check_cone_hypotheses(params: ProblemParams, strip: StripInterval, cone: ConeVariant) -> list:
    """Validate the kernel regime for ``cone``; returns warning flags."""
    params.require_bounds_regime()
    if cone is ConeVariant.STRICTLY_POSITIVE:
        if params.zeta >= QUARTER_PI:
            raise HypothesisViolation(
                f"strictly positive cone needs k > 0 on the whole square (zeta < pi/4), got zeta={params.zeta:.6g}"
            )
        return []
    check_strip(params, strip)
    if cone is ConeVariant.NONNEGATIVE and params.zeta > QUARTER_PI:
        return [FLAG_SIGN_CHANGING_KERNEL]
    return []


def resolve_thresholds(params: ProblemParams, strip: StripInterval, cone: ConeVariant, g=None,
                       source=ThresholdSource.CLOSED_FORM, manual_m: Optional[float] = None,
                       manual_M: Optional[float] = None) -> Thresholds:
    c = cone_constant_for(params, strip, cone)
    notes = []
    if source is ThresholdSource.MANUAL:
        if manual_m is None or manual_M is None:
            raise ValueError("manual threshold source needs both m and M")
        if not (manual_m > 0 and manual_M > 0):
            raise ValueError("manual thresholds must be positive")
        check_weight(g, params.T)
        return Thresholds(source, float(manual_m), float(manual_M), c, ("supplied by the user",))
    if source is ThresholdSource.CLOSED_FORM and _constant_weight(g) is None:
        notes.append("closed forms need a constant weight g; the quadrature oracle was used instead")
        source = ThresholdSource.ORACLE
    m = threshold_m(params, g, source)
    M = threshold_M(params, strip, g, source, cone)
    return Thresholds(source, m, M, c, tuple(notes))


# --- conditions ----------------------------------------------------------------


@dataclass(frozen=True)
class RadiusCondition:
    rho: float
    kind: ConditionKind
    f_bound: float
    threshold: float
    satisfied: bool
    marginal: bool
    attaining_point: tuple
    box: Box3
    rigorous: bool = False

    @property
    def slack(self) -> float:
        """Amount by which the strict inequality holds (negative when it fails)."""
        if self.kind is ConditionKind.INDEX1:
            return self.threshold - self.f_bound
        return self.f_bound - self.threshold

    def with_threshold(self, threshold: float, epsilon: float = 0.0) -> "RadiusCondition":
        sat, marg = _judge(self.kind, self.f_bound, threshold, epsilon)
        return RadiusCondition(self.rho, self.kind, self.f_bound, threshold, sat, marg,
                               self.attaining_point, self.box, self.rigorous)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "kind": self.kind.value,
            "f_bound": self.f_bound,
            "threshold": self.threshold,
            "satisfied": self.satisfied,
            "marginal": self.marginal,
            "attaining_point": list(self.attaining_point),
            "box": self.box.as_dict(),
            "rigorous": self.rigorous,
        }


def _judge(kind: ConditionKind, f_bound: float, threshold: float, epsilon: float):
    satisfied = f_bound < threshold if kind is ConditionKind.INDEX1 else f_bound > threshold
    slack = threshold - f_bound if kind is ConditionKind.INDEX1 else f_bound - threshold
    return satisfied, bool(satisfied and slack < epsilon)


def check_condition(params: ProblemParams, cone: ConeVariant, f: NonlinearityExpr, rho: float,
                    kind: ConditionKind, thresholds: Thresholds, strip: StripInterval,
                    epsilon: float = 0.0, grid: int = 41) -> RadiusCondition:
    """Evaluate one radius condition for f on the cone-variant box."""
    box = condition_box(params, cone, strip, thresholds.c, rho, kind)
    if kind is ConditionKind.INDEX1:
        ext, threshold = box_sup(f, box, grid=grid), thresholds.m
    else:
        ext, threshold = box_inf(f, box, grid=grid), thresholds.M
    f_bound = ext.value / rho
    sat, marg = _judge(kind, f_bound, threshold, epsilon)
    return RadiusCondition(float(rho), kind, f_bound, threshold, sat, marg, ext.point, box)


# --- ladders -------------------------------------------------------------------

I1, I0 = ConditionKind.INDEX1, ConditionKind.INDEX0


def _s1(r, c): return r[0] / c < r[1]  # noqa: E704
def _s2(r, c): return r[0] < r[1]  # noqa: E704
def _s3(r, c): return r[0] / c < r[1] < r[2]  # noqa: E704
def _s4(r, c): return r[0] < r[1] and r[1] / c < r[2]  # noqa: E704
def _s5(r, c): return r[0] / c < r[1] < r[2] and r[2] / c < r[3]  # noqa: E704
def _s6(r, c): return r[0] < r[1] and r[1] / c < r[2] < r[3]  # noqa: E704


LADDERS = {
    "S1": ((I0, I1), _s1, 1),
    "S2": ((I1, I0), _s2, 1),
    "S3": ((I0, I1, I0), _s3, 2),
    "S4": ((I1, I0, I1), _s4, 2),
    "S5": ((I0, I1, I0, I1), _s5, 3),
    "S6": ((I1, I0, I1, I0), _s6, 3),
}
# strongest first
_SEARCH_ORDER = ("S5", "S6", "S3", "S4", "S1", "S2")


@dataclass(frozen=True)
class Verdict:
    ladder: Optional[str]
    solution_count: int
    witnesses: tuple = ()  # the conditions realizing the ladder, in ladder order


def _sort_key(cond: RadiusCondition):
    return (cond.rho, cond.kind.value)


def multiplicity_verdict(conditions: Sequence[RadiusCondition], c: float) -> Verdict:
    """Strongest ladder realized by a subsequence of the satisfied conditions."""
    ordered = sorted((x for x in conditions if x.satisfied), key=_sort_key)
    for name in _SEARCH_ORDER:
        pattern, ok, count = LADDERS[name]
        for combo in itertools.combinations(ordered, len(pattern)):
            if tuple(x.kind for x in combo) == pattern and ok([x.rho for x in combo], c):
                return Verdict(name, count, combo)
    return Verdict(None, 0)


# --- certificates ----------------------------------------------------------------


@dataclass
class Certificate:
    problem: dict
    cone: ConeVariant
    thresholds: Thresholds
    conditions: list
    verdict: Verdict
    flags: list
    discrepancies: list = field(default_factory=list)
    reference_verdict: Optional[Verdict] = None

    @property
    def ladder(self) -> Optional[str]:
        return self.verdict.ladder

    @property
    def solution_count(self) -> int:
        return self.verdict.solution_count

    @property
    def self_contained(self) -> bool:
        return self.thresholds.source is not ThresholdSource.MANUAL

    def to_dict(self) -> dict:
        out = {
            "problem": self.problem,
            "cone": self.cone.value,
            "thresholds": self.thresholds.to_dict(),
            "conditions": [x.to_dict() for x in sorted(self.conditions, key=_sort_key)],
            "ladder": self.verdict.ladder,
            "ladder_radii": [x.rho for x in self.verdict.witnesses],
            "solution_count": self.verdict.solution_count,
            "self_contained": self.self_contained,
            "flags": list(self.flags),
        }
        if self.reference_verdict is not None or self.discrepancies:
            out["discrepancies"] = list(self.discrepancies)
            rv = self.reference_verdict
            out["reference_verdict"] = None if rv is None else {
                "ladder": rv.ladder, "solution_count": rv.solution_count}
        return out


@dataclass(frozen=True)
class CertificationProblem:
    params: ProblemParams
    strip: StripInterval
    cone: ConeVariant
    h: NonlinearityExpr
    radii: tuple  # ((rho, ConditionKind), ...)
    g: Optional[NonlinearityExpr] = None
    epsilon: float = 0.0
    box_grid: int = 41

    @property
    def f(self) -> NonlinearityExpr:
        return shift_to_f(self.h, self.params.omega)

    def echo(self) -> dict:
        return {
            "T": self.params.T,
            "omega": self.params.omega,
            "zeta": self.params.zeta,
            "h": self.h.to_source(),
            "f": self.f.to_source(),
            "g": "1" if self.g is None else self.g.to_source(),
            "strip": [self.strip.a, self.strip.b],
            "radii": [[rho, kind.value] for rho, kind in self.radii],
            "epsilon": self.epsilon,
        }


def _rel_diff(reference: float, computed: float) -> float:
    if reference == 0:
        return math.inf if computed != 0 else 0.0
    return (computed - reference) / abs(reference)


def discrepancy_record(reference: dict, thresholds: Thresholds, conditions: Sequence[RadiusCondition],
                       rtol: float = 1e-5) -> list:
    """Compare published values against computed ones.

    ``reference`` may hold "m", "M", "c" and "f.index1.<rho>" /
    "f.index0.<rho>" keys.  One record per key, marked ``agrees`` when the
    relative difference is within ``rtol`` (published values are usually
    rounded to about six digits).
    """
    computed = {"m": thresholds.m, "M": thresholds.M, "c": thresholds.c}
    for cond in conditions:
        computed[f"f.{cond.kind.value}.{cond.rho:g}"] = cond.f_bound
    records = []
    for key in sorted(reference):
        ref = float(reference[key])
        if key not in computed:
            records.append({"quantity": key, "reference": ref, "computed": None, "relative_difference": None,
                            "agrees": False, "source": "not computed in this run"})
            continue
        value = computed[key]
        rel = _rel_diff(ref, value)
        source = {"m": thresholds.source.value, "M": thresholds.source.value, "c": "closed-form"}.get(key, "box search")
        records.append({"quantity": key, "reference": ref, "computed": value, "relative_difference": rel,
                        "agrees": abs(rel) <= rtol, "source": source})
    return records


def certify(problem: CertificationProblem, source=ThresholdSource.CLOSED_FORM, manual_m=None, manual_M=None,
            reference: Optional[dict] = None) -> Certificate:
    """Evaluate every configured radius condition and the strongest ladder.

    When ``reference`` carries published thresholds "m" and "M", the verdict
    those thresholds would give (same f-bounds) is reported next to the
    computed one together with a per-quantity discrepancy record.
    """
    params, strip, cone = problem.params, problem.strip, problem.cone
    flags = check_cone_hypotheses(params, strip, cone)
    thresholds = resolve_thresholds(params, strip, cone, problem.g, source, manual_m, manual_M)
    f = problem.f
    conditions = [
        check_condition(params, cone, f, rho, kind, thresholds, strip, problem.epsilon, problem.box_grid)
        for rho, kind in sorted(problem.radii, key=lambda rk: (rk[0], rk[1].value))
    ]
    verdict = multiplicity_verdict(conditions, thresholds.c)
    flags = [FLAG_NON_RIGOROUS, *flags]
    if thresholds.source is ThresholdSource.MANUAL:
        flags.append(FLAG_NOT_SELF_CONTAINED)
    if any(x.marginal for x in conditions):
        flags.append(f"MARGINAL: at least one condition holds by less than epsilon={problem.epsilon:g}")
    cert = Certificate(problem.echo(), cone, thresholds, conditions, verdict, flags)
    if reference:
        cert.discrepancies = discrepancy_record(reference, thresholds, conditions)
        if "m" in reference and "M" in reference:
            ref_conds = [
                x.with_threshold(float(reference["m"]) if x.kind is I1 else float(reference["M"]), problem.epsilon)
                for x in conditions
            ]
            cert.reference_verdict = multiplicity_verdict(ref_conds, thresholds.c)
    return cert


# --- cone preservation -------------------------------------------------------------


@dataclass(frozen=True)
class ConeSanityReport:
    samples: int
    violations: int
    worst_margin: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def cone_sanity_check(params: ProblemParams, strip: StripInterval, g, f: NonlinearityExpr, samples: int = 100,
                      nodes: int = 401, scale: float = 1.0, tol: float = 1e-8, c: Optional[float] = None,
                      nonnegative: bool = False, seed: int = 0, rule: str = "product",
                      extra: Sequence = ()) -> ConeSanityReport:
    """Apply the discrete operator to sampled cone members and check the image.

    Samples have sup norm <= ``scale``; ``extra`` adds caller-chosen nodal
    vectors (for instance u = 0 or u = 1).
    """
    if c is None:
        c = cone_constant(params, strip)
    grid = SymmetricGrid(params.T, nodes)
    op = NystromOperator(params, grid, g, rule)
    members = list(sample_cone_members(grid, strip, c, samples, scale, nonnegative, seed))
    members += [np.broadcast_to(np.asarray(u, dtype=float), (grid.N,)) for u in extra]
    margins = np.array([cone_margin(grid, op.apply(f, u), strip, c) for u in members])
    return ConeSanityReport(len(members), int(np.sum(margins < -tol)), float(np.min(margins)), tol)


def radii_from_lists(index1: Sequence[float], index0: Sequence[float]) -> tuple:
    """((rho, kind), ...) from separate radius lists; rejects non-positive radii."""
    out = []
    for kind, values in ((I1, index1), (I0, index0)):
        for rho in values:
            if not (math.isfinite(rho) and rho > 0):
                raise DomainError(f"radii must be finite and > 0, got {rho!r}")
            out.append((float(rho), kind))
    return tuple(out)
