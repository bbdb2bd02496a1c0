"""The functional T(x) = inf_y { S(x+y) - P(y) } and the extendability conditions.

Two evaluation routes:

* ``exact``: both functionals polyhedral; T is the support function of the
  intersection of the generator hulls (see :mod:`hbsandwich.polyhedral`).
* ``numeric``: box-escalated descent on y -> S(x+y) - P(y), which is convex.

Condition checks return a :class:`ConditionReport`.  On the exact route the
``holds`` bit is decided by an LP; on the numeric route sampling can only
falsify, and the report says so through ``decision == "sampled"``.
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
    PartialLinearFunctional,
    Subspace,
    VectorSampler,
    as_vector,
    batch_kernel,
    evaluate_batch,
)

log = logging.getLogger(__name__)

CONDITION_TOL = 1e-6
DEFAULT_M_SAMPLES = 256


class Method(str, enum.Enum):
    EXACT_LP = "exact_lp"
    NUMERIC = "numeric"
    GRID = "grid"


class Attainment(str, enum.Enum):
    ATTAINED = "attained"
    LIMIT_ONLY = "limit_only"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class TValue:
    value: float
    method: Method
    attainment: Attainment
    witness: np.ndarray | None = None
    restriction: Subspace | None = None
    evidence: dict = field(default_factory=dict)

    @property
    def minus_infinity(self) -> bool:
        return self.value == -np.inf

    def to_dict(self) -> dict:
        return {
            "value": "-inf" if self.minus_infinity else self.value,
            "method": self.method.value,
            "attainment": self.attainment.value,
            "witness": None if self.witness is None else self.witness.tolist(),
            "restricted": self.restriction is not None,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    holds: bool
    worst_margin: float
    witness: dict
    decision: str
    samples: int
    tolerance: float = CONDITION_TOL
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        margin = self.worst_margin
        return {
            "condition": self.condition,
            "holds": self.holds,
            "margin": "-inf" if margin == -np.inf else margin,
            "witness": self.witness,
            "decision": self.decision,
            "samples": self.samples,
            "details": self.details,
        }


def both_polyhedral(S: FunctionalSpec, P: FunctionalSpec) -> bool:
    return S.polyhedral and P.polyhedral


def _check_pair(S: FunctionalSpec, P: FunctionalSpec):
    if S.dim != P.dim:
        raise DimensionError(f"S lives in R^{S.dim} but P in R^{P.dim}")
    if S.declared != "sublinear" or P.declared != "superlinear":
        raise ValueError("S must be sublinear and P superlinear")


def _pick_method(S, P, method) -> Method:
    if method in (None, "auto"):
        return Method.EXACT_LP if both_polyhedral(S, P) else Method.NUMERIC
    m = Method(method)
    if m is Method.EXACT_LP and not both_polyhedral(S, P):
        raise ValueError("the exact route needs two polyhedral functionals")
    return m


def restriction_basis(n: int, restriction: Subspace | None) -> np.ndarray:
    """Orthonormal rows spanning the y-range (all of R^n when unrestricted)."""
    if restriction is None:
        return np.eye(n)
    if restriction.ambient_dim != n:
        raise DimensionError("restriction subspace has the wrong ambient dimension")
    return restriction.orthonormal


def t_objective(S: FunctionalSpec, P: FunctionalSpec, x: np.ndarray, QY: np.ndarray):
    """Batch objective z -> S(x + zQ) - P(zQ) on coordinates of Y."""

    s_eval, p_eval = batch_kernel(S), batch_kernel(P)

    def f(Z):
        Y = Z @ QY
        return s_eval(Y + x) - p_eval(Y)

    return f


def compute_T(
    S: FunctionalSpec,
    P: FunctionalSpec,
    x,
    restriction: Subspace | None = None,
    method: str | Method | None = "auto",
    settings: DescentSettings | None = None,
    witness: bool = True,
) -> TValue:
    """T(x), or its restricted form with y ranging over ``restriction``."""
    _check_pair(S, P)
    x = as_vector(x, S.dim)
    QY = restriction_basis(S.dim, restriction)
    m = _pick_method(S, P, method)
    if m is Method.EXACT_LP:
        value, c = poly.t_support(S.generators, P.generators, x, QY)
        if value == -np.inf:
            return TValue(-np.inf, m, Attainment.UNKNOWN, None, restriction,
                          {"reason": "generator hulls do not meet on the restriction"})
        y = None
        evidence = {"support_point": c.tolist()}
        if witness:
            pv, y = poly.t_primal(S.generators, P.generators, x, QY)
            evidence["primal_value"] = pv
        return TValue(value, m, Attainment.ATTAINED, y, restriction, evidence)
    if m is Method.GRID:
        from .oracle import brute_force_T

        return brute_force_T(S, P, x, restriction=restriction)
    return _numeric_T(S, P, x, QY, restriction, settings or DescentSettings())


def _numeric_T(S, P, x, QY, restriction, settings) -> TValue:
    # T is positively homogeneous: minimize at the unit direction and rescale,
    # so the box schedule is relative to |x|
    scale = float(np.linalg.norm(x))
    if scale == 0.0:
        u = x
        scale = 1.0
    else:
        u = x / scale
    esc = escalate(t_objective(S, P, u, QY), QY.shape[0], settings)
    evidence = esc.evidence()
    evidence["scale"] = scale
    if esc.minus_infinity:
        return TValue(-np.inf, Method.NUMERIC, Attainment.UNKNOWN, None, restriction, evidence)
    y = scale * (esc.point @ QY)
    att = Attainment.LIMIT_ONLY if esc.on_boundary else Attainment.ATTAINED
    return TValue(scale * esc.value, Method.NUMERIC, att, y, restriction, evidence)


def _per_unit(margin: float, x: np.ndarray) -> float:
    # margins of homogeneous quantities are compared per unit length
    nrm = float(np.linalg.norm(x))
    return margin / nrm if nrm > 0 and np.isfinite(margin) else margin


def _first_min(values: np.ndarray, rel: float = 1e-9) -> int:
    # earliest index within rounding of the minimum, so basis rays win ties
    lo = float(np.min(values))
    if not np.isfinite(lo):
        return int(np.argmin(values))
    return int(np.flatnonzero(values <= lo + rel * (1.0 + abs(lo)))[0])


class _TCache:
    """T evaluations keyed by unit direction (T is positively homogeneous)."""

    def __init__(self, fn):
        self.fn = fn
        self.store: dict[tuple, TValue] = {}

    def __call__(self, x: np.ndarray) -> tuple[float, TValue]:
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0:
            tv = self.fn(x)
            return tv.value, tv
        key = tuple(np.round(x / nrm, 12))
        tv = self.store.get(key)
        if tv is None:
            tv = self.fn(np.array(key))
            self.store[key] = tv
        return nrm * tv.value, tv


def m_sample_points(M: Subspace, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """±basis vectors of M then ``count`` seeded random points; returns (points, coordinates)."""
    if M.dim == 0:
        return np.zeros((1, M.ambient_dim)), np.zeros((1, 0))
    eye = np.eye(M.dim)
    t = np.vstack([eye, -eye, VectorSampler(M.dim, seed).vectors(count)])
    return M.from_coordinates(t), t


def check_condition_41(
    f0: PartialLinearFunctional,
    S: FunctionalSpec,
    P: FunctionalSpec,
    restriction: Subspace | None = None,
    samples: int = DEFAULT_M_SAMPLES,
    seed: int = 0,
    tol: float = CONDITION_TOL,
    method: str | Method | None = "auto",
    settings: DescentSettings | None = None,
) -> ConditionReport:
    """f0(x) <= T(x) on M (T restricted to y in ``restriction`` when given)."""
    _check_pair(S, P)
    M = f0.subspace
    if restriction is not None and not restriction.contains(M):
        raise ValueError("M must lie inside the restriction subspace")
    m = _pick_method(S, P, method)
    cache = _TCache(lambda u: compute_T(S, P, u, restriction, m, settings, witness=False))
    pts, coords = m_sample_points(M, samples, seed)
    fv = coords @ f0.values
    margins = np.empty(pts.shape[0])
    tvals = np.empty(pts.shape[0])
    limit_only = 0
    for i, x in enumerate(pts):
        tvals[i], tv = cache(x)
        limit_only += tv.attainment is Attainment.LIMIT_ONLY
        margins[i] = _per_unit(tvals[i] - fv[i], x)
    i = _first_min(margins)
    worst = float(margins[i])
    witness = {"x": pts[i].tolist(), "f0": float(fv[i]), "T": float(tvals[i])}
    details = {"distinct_directions": len(cache.store), "limit_only_directions": limit_only, "method": m.value}

    if m is Method.EXACT_LP:
        G, H = S.generators, P.generators
        QY = restriction_basis(S.dim, restriction)
        out = poly.intersection_lp(G, H, QY, M.basis, f0.values)
        holds = out.optimal
        if holds:
            details["lp_witness_c"] = poly.hull_point(G, out).tolist()
        box_margin, bx, by = poly.worst_41_on_box(G, H, QY, M.basis, f0.values)
        box_margin = _per_unit(box_margin, bx)
        details["box_margin"] = box_margin
        if box_margin < worst:
            worst = box_margin
            witness = {"x": bx.tolist(), "y": None if by is None else by.tolist(),
                       "f0": float(f0.coefficients() @ bx)}
        return ConditionReport("4.1", holds, worst, witness, "exact", pts.shape[0], tol, details)

    holds = worst >= -tol
    if not holds and worst > -np.inf:
        # the descent minimizer at the worst x shows S(x+y) - P(y) < f0(x);
        # cached values are per unit direction, so rescale it
        _, tv = cache(pts[i])
        if tv.witness is not None:
            y = float(np.linalg.norm(pts[i])) * tv.witness
            witness["y"] = y.tolist()
            witness["S(x+y)-P(y)"] = float(S(pts[i] + y) - P(y))
    if worst == -np.inf:
        details["diagnostic"] = _cross_check_42(S, P, restriction, seed)
    return ConditionReport("4.1", holds, worst, witness, "sampled", pts.shape[0], tol, details)


def _cross_check_42(S, P, restriction, seed) -> str:
    # T = -inf is only possible when P > S somewhere on the y-range
    n = S.dim
    if restriction is None:
        pts = VectorSampler(n, seed).vectors(4096)
    else:
        pts = VectorSampler(restriction.dim, seed).vectors(4096) @ restriction.orthonormal
    gap = float(np.min(evaluate_batch(S, pts) - evaluate_batch(P, pts)))
    if gap >= -CONDITION_TOL:
        msg = f"T reported -inf but sampled min S-P is {gap:.3e}; the divergence test may be wrong"
        log.warning(msg)
        return msg
    return f"consistent: sampled min S-P is {gap:.3e}"


def check_condition_42(
    S: FunctionalSpec,
    P: FunctionalSpec,
    samples: int = 1000,
    seed: int = 0,
    tol: float = CONDITION_TOL,
    method: str | Method | None = "auto",
) -> ConditionReport:
    """P(x) <= S(x) on all of R^n."""
    _check_pair(S, P)
    m = _pick_method(S, P, method)
    pts = VectorSampler(S.dim, seed).vectors(samples)
    gaps = evaluate_batch(S, pts) - evaluate_batch(P, pts)
    i = int(np.argmin(gaps))
    worst = float(gaps[i])
    witness = {"x": pts[i].tolist(), "S": float(S(pts[i])), "P": float(P(pts[i]))}
    if m is Method.EXACT_LP:
        G, H = S.generators, P.generators
        out = poly.intersection_lp(G, H, np.eye(S.dim))
        holds = out.optimal
        details = {}
        if holds:
            details["common_point"] = poly.hull_point(G, out).tolist()
        box_margin, bx = poly.worst_gap_on_box(G, H)
        details["box_margin"] = box_margin
        if box_margin < worst:
            worst = box_margin
            witness = {"x": bx.tolist(), "S": float(S(bx)), "P": float(P(bx))}
        return ConditionReport("4.2", holds, worst, witness, "exact", samples, tol, details)
    return ConditionReport("4.2", worst >= -tol, worst, witness, "sampled", samples, tol, {})


def check_condition_43(
    f0: PartialLinearFunctional,
    S: FunctionalSpec,
    P: FunctionalSpec,
    samples: int = DEFAULT_M_SAMPLES,
    seed: int = 0,
    tol: float = CONDITION_TOL,
    method: str | Method | None = "auto",
) -> ConditionReport:
    """P(x) <= f0(x) <= S(x) on M; reports the binding side."""
    _check_pair(S, P)
    M = f0.subspace
    m = _pick_method(S, P, method)
    if M.dim == 0:
        return ConditionReport("4.3", True, 0.0, {"x": [0.0] * S.dim, "side": "both"},
                               "exact", 1, tol, {"note": "M is the zero subspace"})
    pts, coords = m_sample_points(M, samples, seed)
    fv = coords @ f0.values
    upper = evaluate_batch(S, pts) - fv
    lower = fv - evaluate_batch(P, pts)
    iu, il = int(np.argmin(upper)), int(np.argmin(lower))
    if upper[iu] <= lower[il]:
        worst, i, side = float(upper[iu]), iu, "f0 <= S"
    else:
        worst, i, side = float(lower[il]), il, "P <= f0"
    witness = {"x": pts[i].tolist(), "side": side, "f0": float(fv[i])}
    details = {"upper_margin": float(upper[iu]), "lower_margin": float(lower[il])}
    if m is Method.EXACT_LP:
        G, H = S.generators, P.generators
        up_ok = poly.in_projection(G, M.basis, f0.values)
        lo_ok = poly.in_projection(H, M.basis, f0.values)
        for ok, gens, is_upper, label in ((up_ok, G, True, "f0 <= S"), (lo_ok, H, False, "P <= f0")):
            if not ok:
                margin, bx = poly.worst_side_on_box(gens, M.basis, f0.values, is_upper)
                if margin < worst:
                    worst = margin
                    witness = {"x": bx.tolist(), "side": label, "f0": float(f0.coefficients() @ bx)}
        details.update({"upper_exact": up_ok, "lower_exact": lo_ok})
        return ConditionReport("4.3", up_ok and lo_ok, worst, witness, "exact", pts.shape[0], tol, details)
    return ConditionReport("4.3", worst >= -tol, worst, witness, "sampled", pts.shape[0], tol, details)
