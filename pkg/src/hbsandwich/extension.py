"""Constructive sandwich extension over a finite basis completion.

One step extends f on M to M1 = span(M, x0) by choosing f1(x0) = xi.  The
four bounds

    a = sup_y f(y) - S(y - x0)      b = inf_y S(y + x0) - f(y)
    c = inf_y f(y) - P(y - x0)      d = sup_y P(y + x0) - f(y)

(y over M) give the interval [a, b] ∩ [d, c] of values keeping P <= f1 <= S
on M1.  That interval guarantees the next space only: a value inside it can
leave a later step with an empty interval.  When further steps remain, xi
is therefore drawn from the narrower range on which f1 stays below the
infimal convolution T_Y over the target space Y,

    lo = sup_y f(y) - T_Y(y - x0)   hi = inf_y T_Y(y + x0) - f(y),

which is contained in [a, b] ∩ [d, c] and keeps the extendability condition
true on M1, so later steps never get stuck.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from . import polyhedral as poly
from .descent import DescentSettings, escalate
from .functionals import (
    DimensionError,
    FunctionalSpec,
    LinearFunctional,
    PartialLinearFunctional,
    Subspace,
    VectorSampler,
    as_vector,
    batch_kernel,
    dual_negate,
    evaluate_batch,
)
from .infconv import (
    ConditionReport,
    Method,
    _check_pair,
    _pick_method,
    check_condition_41,
    restriction_basis,
)

log = logging.getLogger(__name__)

SINGLETON_WIDTH = 1e-9
FEASIBILITY_TOL = 1e-9
STEP_RESIDUAL = 1e-6
SKIP_TOL = 1e-9
RESIDUAL_TOL = 1e-8
MARGIN_TOL = 1e-6
VERIFY_SAMPLES = 10_000


class XiPolicy(str, enum.Enum):
    MIDPOINT = "midpoint"
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True, eq=False)
class ExtensionInterval:
    a: float
    b: float
    c: float
    d: float
    x0: np.ndarray
    admissible_lo: float | None = None
    admissible_hi: float | None = None
    method: str = Method.EXACT_LP.value
    evidence: dict = field(default_factory=dict)

    @property
    def feasible_lo(self) -> float:
        return max(self.a, self.d)

    @property
    def feasible_hi(self) -> float:
        return min(self.b, self.c)

    @property
    def gap(self) -> float:
        """How far the interval is from being nonempty (<= 0 means nonempty)."""
        return self.feasible_lo - self.feasible_hi

    def feasible(self, tol: float = FEASIBILITY_TOL) -> bool:
        return self.feasible_lo <= self.feasible_hi + tol

    @property
    def choice_range(self) -> tuple[float, float]:
        lo, hi = self.feasible_lo, self.feasible_hi
        if self.admissible_lo is not None:
            lo = max(lo, self.admissible_lo)
            hi = min(hi, self.admissible_hi)
        return lo, hi

    def to_dict(self) -> dict:
        out = {"x0": self.x0.tolist(), "a": self.a, "b": self.b, "c": self.c, "d": self.d}
        if self.admissible_lo is not None:
            out["admissible"] = [self.admissible_lo, self.admissible_hi]
        return out


class InfeasibleExtension(Exception):
    def __init__(self, interval: ExtensionInterval, trace=None, step: int | None = None):
        self.interval = interval
        self.trace = list(trace or [])
        self.step = step
        lo, hi = interval.choice_range
        super().__init__(
            f"no admissible xi: a={interval.a:.6g} b={interval.b:.6g} "
            f"c={interval.c:.6g} d={interval.d:.6g}, gap {lo - hi:.6g}"
        )


class ExtensionRefused(Exception):
    """The extendability condition fails, so no sandwiched extension exists."""

    def __init__(self, report: ConditionReport):
        self.report = report
        super().__init__(f"condition 4.1 fails (margin {report.worst_margin:.6g}, witness {report.witness.get('x')})")


def _check_outside(M: Subspace, x0: np.ndarray):
    _, residual = M.membership(x0)
    if residual < STEP_RESIDUAL * max(1.0, float(np.linalg.norm(x0))):
        raise ValueError(f"x0 lies in M (residual {residual:.3g})")


def interval_bounds(
    f0: PartialLinearFunctional,
    x0,
    S: FunctionalSpec,
    P: FunctionalSpec,
    method: str | Method | None = "auto",
    settings: DescentSettings | None = None,
    target: Subspace | None = None,
    admissible: bool = False,
) -> ExtensionInterval:
    """The bounds a, b, c, d for extending f0 along x0.

    With ``admissible`` set, also the T-admissible sub-range for the target
    space (``None`` meaning all of R^n).
    """
    _check_pair(S, P)
    M = f0.subspace
    x0 = as_vector(x0, S.dim)
    _check_outside(M, x0)
    m = _pick_method(S, P, method)
    if m is Method.GRID:
        raise ValueError("use oracle.brute_force_bounds for the grid route")
    settings = settings or DescentSettings()
    if M.dim == 0:
        vals = {"a": -S(-x0), "b": S(x0), "c": -P(-x0), "d": P(x0)}
        evidence = {"closed_form": True}
    elif m is Method.EXACT_LP:
        vals, arg = poly.interval_endpoints(S.generators, P.generators, M.basis, f0.values, x0)
        evidence = {"argopt": {k: None if v is None else v.tolist() for k, v in arg.items()}}
    else:
        vals, evidence = _numeric_endpoints(f0, x0, S, P, settings)
    lo = hi = None
    if admissible:
        lo, hi, adm_ev = _admissible_range(f0, x0, S, P, m, settings, target)
        evidence["admissible"] = adm_ev
    return ExtensionInterval(vals["a"], vals["b"], vals["c"], vals["d"], x0.copy(), lo, hi, m.value, evidence)


def _numeric_endpoints(f0, x0, S, P, settings):
    B, f = f0.subspace.basis, f0.values
    s_eval, p_eval = batch_kernel(S), batch_kernel(P)

    def run(expr):
        return escalate(expr, B.shape[0], settings)

    runs = {
        "a": run(lambda T: s_eval(T @ B - x0) - T @ f),
        "b": run(lambda T: s_eval(T @ B + x0) - T @ f),
        "c": run(lambda T: T @ f - p_eval(T @ B - x0)),
        "d": run(lambda T: T @ f - p_eval(T @ B + x0)),
    }
    vals = {
        "a": np.inf if runs["a"].minus_infinity else -runs["a"].value,
        "b": -np.inf if runs["b"].minus_infinity else runs["b"].value,
        "c": -np.inf if runs["c"].minus_infinity else runs["c"].value,
        "d": np.inf if runs["d"].minus_infinity else -runs["d"].value,
    }
    evidence = {k: {"limit_only": r.limit_only, **r.evidence()} for k, r in runs.items()}
    return vals, evidence


def _admissible_range(f0, x0, S, P, m, settings, target):
    n = S.dim
    QY = restriction_basis(n, target)
    M = f0.subspace
    if m is Method.EXACT_LP:
        G, H = S.generators, P.generators
        low = poly.intersection_lp(G, H, QY, M.basis, f0.values, objective=x0, sense=1.0)
        if not low.optimal:
            return np.inf, -np.inf, {"lp": low.status.value}
        high = poly.intersection_lp(G, H, QY, M.basis, f0.values, objective=x0, sense=-1.0)
        return low.value, -high.value, {"lp": "optimal"}
    B, f = M.basis, f0.values
    k = B.shape[0]
    s_eval, p_eval = batch_kernel(S), batch_kernel(P)

    def objective(sign):
        # S(tB + sign*x0 + zQ) - P(zQ) - f.t over (t, z)
        def fn(W):
            T, Z = W[:, :k], W[:, k:]
            Y = Z @ QY
            return s_eval(T @ B + sign * x0 + Y) - p_eval(Y) - T @ f

        return fn

    dim = k + QY.shape[0]
    lo_run = escalate(objective(-1.0), dim, settings)
    hi_run = escalate(objective(1.0), dim, settings)
    lo = np.inf if lo_run.minus_infinity else -lo_run.value
    hi = -np.inf if hi_run.minus_infinity else hi_run.value
    ev = {"lo": {"limit_only": lo_run.limit_only, **lo_run.evidence()},
          "hi": {"limit_only": hi_run.limit_only, **hi_run.evidence()}}
    return lo, hi, ev


def choose_xi(interval: ExtensionInterval, policy: str | XiPolicy = XiPolicy.MIDPOINT) -> float:
    policy = XiPolicy(policy)
    lo, hi = interval.choice_range
    if not np.isfinite(lo) and not np.isfinite(hi) or lo > hi + FEASIBILITY_TOL:
        raise InfeasibleExtension(interval)
    if hi - lo < SINGLETON_WIDTH:
        return 0.5 * (lo + hi)
    if policy is XiPolicy.LOW:
        return lo if np.isfinite(lo) else hi - 1.0
    if policy is XiPolicy.HIGH:
        return hi if np.isfinite(hi) else lo + 1.0
    if not np.isfinite(lo):
        return hi - 1.0
    if not np.isfinite(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def extend_one_step(f0: PartialLinearFunctional, x0, xi: float) -> PartialLinearFunctional:
    M = f0.subspace
    x0 = as_vector(x0, M.ambient_dim)
    _check_outside(M, x0)
    return PartialLinearFunctional(M.extended(x0), np.append(f0.values, float(xi)))


def completion_directions(M: Subspace, target: Subspace | None = None, order=None) -> list[np.ndarray]:
    """Directions completing M's basis to the target space.

    Candidates are the explicit ``order`` (if any) followed by the standard
    basis; each is projected onto the target and orthogonalized against the
    span built so far, and dropped when the remainder is below 1e-9.
    """
    n = M.ambient_dim
    goal = n if target is None else target.dim
    cands = [] if order is None else [as_vector(v, n) for v in order]
    cands.extend(np.eye(n))
    Q = [q for q in M.orthonormal]
    out = []
    for v in cands:
        if len(Q) >= goal:
            break
        w = v if target is None else target.project(v)
        for q in Q:
            w = w - (q @ w) * q
        for q in Q:
            w = w - (q @ w) * q
        nrm = float(np.linalg.norm(w))
        if nrm < SKIP_TOL * max(1.0, float(np.linalg.norm(v))):
            continue
        w = w / nrm
        Q.append(w)
        out.append(w)
    return out


@dataclass(frozen=True, eq=False)
class SandwichCertificate:
    L: LinearFunctional
    residual: float
    margin_S: float
    margin_P: float
    margin_lower: float
    lower_consistent: bool
    samples: int
    trace: list = field(default_factory=list)
    exact_margin_S: float | None = None
    exact_margin_P: float | None = None
    witness_S: list | None = None
    witness_P: list | None = None
    domain: Subspace | None = None
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        ok = self.residual < RESIDUAL_TOL and self.margin_S >= -MARGIN_TOL and self.margin_P >= -MARGIN_TOL
        for e in (self.exact_margin_S, self.exact_margin_P):
            if e is not None:
                ok = ok and e >= -MARGIN_TOL
        return ok and self.lower_consistent

    def to_dict(self) -> dict:
        out = {
            "L": self.L.coeffs.tolist(),
            "residual": self.residual,
            "margin_S": self.margin_S,
            "margin_P": self.margin_P,
            "trace": self.trace,
            "margin_lower": self.margin_lower,
            "lower_consistent": self.lower_consistent,
            "passed": self.passed,
            "samples": self.samples,
        }
        if self.exact_margin_S is not None:
            out["exact_margin_S"] = self.exact_margin_S
            out["exact_margin_P"] = self.exact_margin_P
        if self.domain is not None:
            out["domain"] = self.domain.to_dict()
        if self.notes:
            out["notes"] = self.notes
        return out


def verify_sandwich(
    L: LinearFunctional,
    f0: PartialLinearFunctional,
    S: FunctionalSpec,
    P: FunctionalSpec,
    samples: int = VERIFY_SAMPLES,
    seed: int = 0,
    domain: Subspace | None = None,
    trace=None,
    notes: dict | None = None,
) -> SandwichCertificate:
    """Measure how well L sandwiches between P and S and restricts to f0.

    Margins are sampled over ``domain`` (default R^n).  For polyhedral specs
    the worst margins over the unit coordinate box of the domain are also
    computed exactly by LP.  The lower margin is min L(x) + S(-x); it must be
    nonnegative whenever the L <= S margin is, and the certificate records
    whether that held.
    """
    if L.dim != S.dim or S.dim != P.dim:
        raise DimensionError("L, S and P must share the ambient dimension")
    M = f0.subspace
    residual = float(np.max(np.abs(M.basis @ L.coeffs - f0.values))) if M.dim else 0.0
    n = S.dim
    if domain is None:
        X = VectorSampler(n, seed).vectors(samples)
    else:
        X = VectorSampler(domain.dim, seed).vectors(samples) @ domain.orthonormal if domain.dim else np.zeros((1, n))
    lx = X @ L.coeffs
    up = evaluate_batch(S, X) - lx
    down = lx - evaluate_batch(P, X)
    lower = lx + evaluate_batch(S, -X)
    iu, idn = int(np.argmin(up)), int(np.argmin(down))
    margin_S, margin_P, margin_lower = float(up[iu]), float(down[idn]), float(np.min(lower))
    consistent = not (margin_S >= -MARGIN_TOL and margin_lower < -MARGIN_TOL)
    if not consistent:
        log.error("L <= S held on the sample but -S(-x) <= L(x) did not")
    exact_S = exact_P = None
    if S.polyhedral and P.polyhedral:
        Q = np.eye(n) if domain is None else domain.orthonormal
        if Q.shape[0]:
            fq = Q @ L.coeffs
            exact_S = float(poly.worst_side_on_box(S.generators, Q, fq, upper=True)[0])
            exact_P = float(poly.worst_side_on_box(P.generators, Q, fq, upper=False)[0])
        else:
            exact_S = exact_P = 0.0
    return SandwichCertificate(
        L, residual, margin_S, margin_P, margin_lower, consistent, X.shape[0],
        list(trace or []), exact_S, exact_P, X[iu].tolist(), X[idn].tolist(), domain, dict(notes or {}),
    )


def extend_full(
    f0: PartialLinearFunctional,
    S: FunctionalSpec,
    P: FunctionalSpec,
    order=None,
    policy: str | XiPolicy = XiPolicy.MIDPOINT,
    target: Subspace | None = None,
    method: str | Method | None = "auto",
    settings: DescentSettings | None = None,
    samples: int = VERIFY_SAMPLES,
    seed: int = 0,
    precheck: bool = True,
    condition_samples: int | None = None,
) -> SandwichCertificate:
    """Extend f0 to the target space (default R^n) with P <= L <= S there.

    The extendability condition is re-verified first; a failure raises
    :class:`ExtensionRefused` carrying the report.
    """
    _check_pair(S, P)
    M = f0.subspace
    if target is not None and not target.contains(M):
        raise ValueError("M must lie inside the target subspace")
    m = _pick_method(S, P, method)
    if precheck:
        kw = {} if condition_samples is None else {"samples": condition_samples}
        report = check_condition_41(f0, S, P, restriction=target, seed=seed, method=m, settings=settings, **kw)
        if not report.holds:
            raise ExtensionRefused(report)
    dirs = completion_directions(M, target, order)
    f = f0
    trace = []
    for j, x0 in enumerate(dirs):
        last = j == len(dirs) - 1
        iv = interval_bounds(f, x0, S, P, m, settings, target, admissible=not last)
        try:
            xi = choose_xi(iv, policy)
        except InfeasibleExtension as exc:
            exc.trace = trace
            exc.step = j
            raise
        entry = iv.to_dict()
        entry["xi"] = xi
        trace.append(entry)
        f = extend_one_step(f, x0, xi)
    L = LinearFunctional(f.coefficients())
    return verify_sandwich(L, f0, S, P, samples, seed, target, trace, {"policy": XiPolicy(policy).value, "method": m.value})


def classical_extend_sublinear(S: FunctionalSpec, x0, **kw) -> SandwichCertificate:
    """A linear L <= S with L(x0) = S(x0), seeded by f0(alpha x0) = alpha S(x0)."""
    if S.declared != "sublinear":
        raise ValueError("expected a sublinear spec")
    x0 = as_vector(x0, S.dim)
    P = dual_negate(S)
    if np.linalg.norm(x0) == 0.0:
        f0 = PartialLinearFunctional(Subspace.zero(S.dim), np.zeros(0))
    else:
        f0 = PartialLinearFunctional(Subspace([x0]), [S(x0)])
    cert = extend_full(f0, S, P, **kw)
    cert.notes["x0"] = x0.tolist()
    cert.notes["L(x0)"] = float(cert.L(x0))
    cert.notes["S(x0)"] = float(S(x0))
    return cert


def classical_extend_superlinear(P: FunctionalSpec, x0, **kw) -> SandwichCertificate:
    """A linear L >= P, obtained as the sublinear construction for S' = -P(-.)."""
    if P.declared != "superlinear":
        raise ValueError("expected a superlinear spec")
    S_prime = dual_negate(P)
    cert = classical_extend_sublinear(S_prime, x0, **kw)
    # cert already measured L - P with P = -S'(-.), which is the original P
    cert.notes["mirror_of"] = "superlinear"
    return cert
