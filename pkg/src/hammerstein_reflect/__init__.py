"""Periodic first-order problems with reflection of the argument.

Green's function of u'(t) + omega*u(-t) with u(-T) = u(T), kernel bounds
and cone constants, fixed-point-index existence certificates for the
associated Hammerstein equation, and a Nystrom/Picard solver.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundsProfile,
    StripInterval,
    beta_root,
    bounds_profile,
    cone_constant,
    inf_strip_integral,
    phi_upper,
    psi_lower,
    sup_abs_integral,
    whole_interval_inf_integral,
)
from .certifier import (
    Certificate,
    CertificationProblem,
    ConditionKind,
    ConeVariant,
    RadiusCondition,
    ThresholdSource,
    certify,
    check_condition,
    cone_sanity_check,
    multiplicity_verdict,
    threshold_M,
    threshold_m,
)
from .errors import (
    ConfigError,
    DomainError,
    EvaluationError,
    HypothesisViolation,
    ParseError,
    ReflectError,
    ResonanceError,
)
from .kernel import (
    KernelRegion,
    ProblemParams,
    Region,
    SignClass,
    kernel_eval,
    kernel_eval_normalized,
    kernel_eval_raw,
    kernel_jump,
    region_of,
    sign_class,
)
from .nonlinearity import Box3, NonlinearityExpr, box_inf, box_sup, clamp_extend, parse, parse_weight, shift_to_f
from .solver import (
    DiscreteSolution,
    NystromOperator,
    SymmetricGrid,
    apply_discrete_operator,
    cone_membership,
    picard_solve,
    verify_solution,
)

__all__ = [
    "__version__",
    "BoundsProfile",
    "StripInterval",
    "beta_root",
    "bounds_profile",
    "cone_constant",
    "inf_strip_integral",
    "phi_upper",
    "psi_lower",
    "sup_abs_integral",
    "whole_interval_inf_integral",
    "Certificate",
    "CertificationProblem",
    "ConditionKind",
    "ConeVariant",
    "RadiusCondition",
    "ThresholdSource",
    "certify",
    "check_condition",
    "cone_sanity_check",
    "multiplicity_verdict",
    "threshold_M",
    "threshold_m",
    "ConfigError",
    "DomainError",
    "EvaluationError",
    "HypothesisViolation",
    "ParseError",
    "ReflectError",
    "ResonanceError",
    "KernelRegion",
    "ProblemParams",
    "Region",
    "SignClass",
    "kernel_eval",
    "kernel_eval_normalized",
    "kernel_eval_raw",
    "kernel_jump",
    "region_of",
    "sign_class",
    "Box3",
    "NonlinearityExpr",
    "box_inf",
    "box_sup",
    "clamp_extend",
    "parse",
    "parse_weight",
    "shift_to_f",
    "DiscreteSolution",
    "NystromOperator",
    "SymmetricGrid",
    "apply_discrete_operator",
    "cone_membership",
    "picard_solve",
    "verify_solution",
]
