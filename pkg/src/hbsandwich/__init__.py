"""Constructive sandwich extensions P <= L <= S of linear functionals on R^n."""

from .extension import (
    ExtensionInterval,
    ExtensionRefused,
    InfeasibleExtension,
    SandwichCertificate,
    XiPolicy,
    choose_xi,
    classical_extend_sublinear,
    classical_extend_superlinear,
    completion_directions,
    extend_full,
    extend_one_step,
    interval_bounds,
    verify_sandwich,
)
from .functionals import (
    FunctionalSpec,
    Kind,
    LinearFunctional,
    PartialLinearFunctional,
    Subspace,
    VectorSampler,
    check_axioms,
    dual_negate,
    evaluate,
    evaluate_batch,
    evaluate_partial,
    subspace_membership,
)
from .infconv import (
    Attainment,
    ConditionReport,
    Method,
    TValue,
    check_condition_41,
    check_condition_42,
    check_condition_43,
    compute_T,
)
from .lp import LPOutcome, LPProblem, LPStatus, solve
from .oracle import GridSpec, brute_force_bounds, brute_force_T, generate_instance
from .problem import Problem, ProblemError, load_problem, parse_problem

__version__ = "0.1.0"
