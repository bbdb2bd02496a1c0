"""Built-in scenarios reproducing the worked examples.

Each demo returns a :class:`DemoResult`: a list of claims, each pairing the
expected fact with the computed value and a pass bit.  The instances are
embedded as constants so that no input file is needed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .extension import (
    ExtensionRefused,
    classical_extend_sublinear,
    classical_extend_superlinear,
    extend_full,
    verify_sandwich,
)
from .functionals import FunctionalSpec, VectorSampler, dual_negate
from .infconv import (
    Attainment,
    check_condition_41,
    check_condition_42,
    check_condition_43,
    compute_T,
)
from .oracle import brute_force_T
from .problem import parse_problem

LIMIT_EXAMPLE = {
    "dim": 2,
    "S": {"kind": "norm_plus_linear", "linear": [0.0, 0.0], "matrix": [[1.0, 0.0], [0.0, 1.0]]},
    "P": {"kind": "linear_minus_norm", "linear": [0.0, 1.0], "matrix": [[1.0, 0.0]]},
    "M": {"basis": [[1.0, 0.0]]},
    "f0": [1.0],
}

R4_EXAMPLE = {
    "dim": 4,
    "S": {"kind": "norm_plus_linear", "linear": [0.0] * 4, "matrix": np.eye(4).tolist()},
    "P": {"kind": "linear_minus_norm", "linear": [0.0, 0.0, 0.0, 1.0], "matrix": np.eye(4)[:3].tolist()},
    "M": {"basis": [[1.0, 0.0, 0.0, 0.0]]},
    "f0": [1.0],
    "E1": {"basis": np.eye(4)[:3].tolist()},
}

PROBLEMS = {"example-4-1": LIMIT_EXAMPLE, "example-4-2": R4_EXAMPLE}


@dataclass
class Claim:
    label: str
    expected: str
    computed: object
    ok: bool

    def to_dict(self) -> dict:
        return {"claim": self.label, "expected": self.expected, "computed": self.computed, "ok": self.ok}


@dataclass
class DemoResult:
    name: str
    claims: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.claims)

    def claim(self, label, expected, computed, ok):
        self.claims.append(Claim(label, expected, computed, bool(ok)))

    def to_dict(self) -> dict:
        return {
            "demo": self.name,
            "passed": self.passed,
            "claims": [c.to_dict() for c in self.claims],
            "data": self.data,
            "wall_time": self.wall_time,
        }


def demo_limit_example(seed: int = 0) -> DemoResult:
    out = DemoResult("example-4-1")
    prob = parse_problem(LIMIT_EXAMPLE)
    S, P, f0 = prob.S, prob.P, prob.f0
    r42 = check_condition_42(S, P, seed=seed)
    r43 = check_condition_43(f0, S, P, seed=seed)
    r41 = check_condition_41(f0, S, P, seed=seed)
    out.claim("(4.2) P <= S on R^2", "holds", r42.worst_margin, r42.holds)
    out.claim("(4.3) P <= f0 <= S on M", "holds", r43.worst_margin, r43.holds)
    out.claim("(4.1) f0 <= T on M", "fails", {"margin": r41.worst_margin, "witness": r41.witness["x"]}, not r41.holds)
    out.claim("(4.1) worst margin per unit length", "-1 (f0 = 1, T = 0)", r41.worst_margin, abs(r41.worst_margin + 1.0) < 1e-3)
    bf = brute_force_T(S, P, [1.0, 0.0])
    out.claim("brute-force T((1,0))", "in [-1e-2, 1e-2], limit only", {"value": bf.value, "attainment": bf.attainment.value},
              abs(bf.value) <= 1e-2 and bf.attainment is Attainment.LIMIT_ONLY)
    tv = compute_T(S, P, [1.0, 0.0])
    out.claim("descent T((1,0))", "approximately 0, limit only", {"value": tv.value, "attainment": tv.attainment.value},
              abs(tv.value) <= 1e-2 and tv.attainment is Attainment.LIMIT_ONLY)
    # closed form of S(x+y) - P(y) along y = (0, t): 1 / (sqrt(1 + t^2) + t)
    ray = []
    for t in (1.0, 10.0, 100.0, 1e3, 1e4, 1e5):
        y = np.array([0.0, t])
        ray.append([t, S(np.array([1.0, 0.0]) + y) - P(y)])
    decreasing = all(b[1] < a[1] for a, b in zip(ray, ray[1:]))
    out.claim("S(x+y) - P(y) along y = (0, t)", "decreases towards 0", ray, decreasing and ray[-1][1] < 1e-4)
    out.data = {"conditions": [r42.to_dict(), r43.to_dict(), r41.to_dict()], "brute_force_T": bf.to_dict(), "T": tv.to_dict()}
    return out


def demo_r4_example(seed: int = 0) -> DemoResult:
    out = DemoResult("example-4-2")
    prob = parse_problem(R4_EXAMPLE)
    S, P, f0, E1 = prob.S, prob.P, prob.f0, prob.E1
    x = np.array([10.0, 0.0, 0.0, 0.0])
    y = np.array([0.0, 0.0, 0.0, 1.0])
    sxy = S(x + y)
    gap = sxy - P(y)
    fx = f0(x)
    out.claim("S(x+y) for x=(10,0,0,0), y=(0,0,0,1)", "sqrt(101) = 10.0499", sxy, abs(sxy - math.sqrt(101.0)) < 1e-9)
    out.claim("P(y)", "1", P(y), P(y) == 1.0)
    out.claim(
        "S(x+y) - P(y)",
        "sqrt(101) - 1 = 9.0499 (printed as 9.489 in the source; recomputed here)",
        gap,
        abs(gap - (math.sqrt(101.0) - 1.0)) < 1e-9,
    )
    out.claim("S(x+y) - P(y) < f0(x)", "< 10", {"gap": gap, "f0(x)": fx}, gap < fx == 10.0)
    # extend_full re-checks (4.1) first; its refusal carries the report
    try:
        extend_full(f0, S, P, seed=seed)
        r41 = None
    except ExtensionRefused as exc:
        r41 = exc.report
    out.claim("(4.1) with y over R^4", "fails", None if r41 is None else {"margin": r41.worst_margin, "witness": r41.witness["x"]},
              r41 is not None and not r41.holds)
    out.claim("extension to R^4", "impossible (refused)", "refused" if r41 is not None else "extended", r41 is not None)
    r41e = check_condition_41(f0, S, P, restriction=E1, seed=seed)
    out.claim("(4.1) with y over E1 = {x4 = 0}", "holds", r41e.worst_margin, r41e.holds)
    cert = extend_full(f0, S, P, target=E1, seed=seed)
    out.claim("extension to E1", "constructed and verified", {"L": cert.L.coeffs.tolist(), "margin_S": cert.margin_S, "margin_P": cert.margin_P},
              cert.passed and abs(cert.L(np.eye(4)[0]) - 1.0) < 1e-8)
    full = verify_sandwich(cert.L, f0, S, P, seed=seed)
    out.claim("the E1 extension checked on R^4", "fails on the P side", full.margin_P, full.margin_P < -1e-6)
    out.data = {"condition_R4": None if r41 is None else r41.to_dict(), "condition_E1": r41e.to_dict(), "certificate": cert.to_dict()}
    return out


def demo_norm_dual_pair(seed: int = 0, count: int = 100) -> DemoResult:
    out = DemoResult("lemma-4-2")
    S = FunctionalSpec.euclidean_norm(2)
    P = dual_negate(S)
    xs = VectorSampler(2, seed).vectors(count)
    diffs = np.array([abs(compute_T(S, P, x).value - S(x)) for x in xs])
    worst = float(diffs.max())
    out.claim(f"max |T(x) - S(x)| over {count} samples, P = -S(-.)", "< 1e-4", worst, worst < 1e-4)
    t34 = compute_T(S, P, [3.0, 4.0]).value
    out.claim("T((3,4))", "5", t34, abs(t34 - 5.0) < 1e-6)
    out.data = {"samples": count, "worst_index": int(diffs.argmax())}
    return out


def demo_classical(seed: int = 0) -> DemoResult:
    out = DemoResult("classical")
    S3 = FunctionalSpec.euclidean_norm(3)
    c = classical_extend_sublinear(S3, [1.0, 0.0, 0.0], seed=seed)
    out.claim("sublinear, ||.|| on R^3, x0 = e1", "L = (1,0,0), L(x0) = S(x0), L <= S",
              {"L": c.L.coeffs.tolist(), "margin_S": c.margin_S},
              c.passed and abs(c.L([1.0, 0.0, 0.0]) - 1.0) < 1e-8 and np.allclose(c.L.coeffs, [1, 0, 0], atol=1e-4))
    zero = classical_extend_sublinear(FunctionalSpec.max_linear([[0.0, 0.0]]), [1.0, 2.0], seed=seed)
    out.claim("sublinear, S = 0", "L = 0", zero.L.coeffs.tolist(), zero.passed and np.allclose(zero.L.coeffs, 0.0))
    poly = classical_extend_sublinear(FunctionalSpec.max_linear([[1.0, 0.0], [0.0, 1.0]]), [1.0, 0.0], seed=seed)
    out.claim("sublinear, max{x1, x2}, x0 = e1", "L = (1, 0)", poly.L.coeffs.tolist(), poly.passed and np.allclose(poly.L.coeffs, [1, 0], atol=1e-9))
    P2 = dual_negate(FunctionalSpec.euclidean_norm(2))
    sup = classical_extend_superlinear(P2, [0.0, 1.0], seed=seed)
    out.claim("superlinear, -||.|| on R^2, x0 = e2", "L = (0, 1), P <= L", {"L": sup.L.coeffs.tolist(), "margin_P": sup.margin_P},
              sup.passed and sup.margin_P >= -1e-6 and np.allclose(sup.L.coeffs, [0, 1], atol=1e-4))
    out.data = {"certificates": [c.to_dict(), zero.to_dict(), poly.to_dict(), sup.to_dict()]}
    return out


DEMOS = {
    "example-4-1": demo_limit_example,
    "example-4-2": demo_r4_example,
    "lemma-4-2": demo_norm_dual_pair,
    "classical": demo_classical,
}


def run_demo(name: str, seed: int = 0) -> DemoResult:
    if name not in DEMOS:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    t0 = time.perf_counter()
    res = DEMOS[name](seed=seed)
    res.wall_time = time.perf_counter() - t0
    return res
