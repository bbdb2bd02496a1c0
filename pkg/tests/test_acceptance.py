"""Acceptance criteria 1-10, each run at its stated tolerance.

Every test records one pass/fail line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import json
import math
import time

import numpy as np
import pytest

from hbsandwich.cli import main, suite_instance_seed
from hbsandwich.demos import run_demo
from hbsandwich.extension import (
    InfeasibleExtension,
    classical_extend_sublinear,
    classical_extend_superlinear,
    completion_directions,
    extend_full,
    interval_bounds,
)
from hbsandwich.functionals import FunctionalSpec, VectorSampler, dual_negate
from hbsandwich.infconv import check_condition_41, check_condition_42, compute_T
from hbsandwich.oracle import GridSpec, brute_force_bounds, brute_force_T, generate_instance

TOL = 1e-6
ORACLE_TOL = 1e-3
GRID = GridSpec(points=101)
SUITE_SEED = 7


def claims_text(demo):
    return ", ".join(f"{c.label}: {'ok' if c.ok else 'FAILED'}" for c in demo.claims if not c.ok) or "all claims ok"


def test_criterion_01_r4_example(report_criterion):
    t0 = time.perf_counter()
    demo = run_demo("example-4-2")
    elapsed = time.perf_counter() - t0
    c = {cl.label: cl for cl in demo.claims}
    sxy = c["S(x+y) for x=(10,0,0,0), y=(0,0,0,1)"].computed
    gap = c["S(x+y) - P(y)"].computed
    ok = (
        abs(sxy - math.sqrt(101.0)) < 1e-9
        and abs(gap - (math.sqrt(101.0) - 1.0)) < 1e-9
        and gap < 10.0
        and c["extension to R^4"].ok
        and c["extension to E1"].ok
        and demo.passed
        and elapsed < 5.0
    )
    report_criterion(1, ok, f"S(x+y)={sxy:.10f}, gap={gap:.10f}, {claims_text(demo)}, {elapsed:.2f} s (< 5 s)")
    assert ok


def test_criterion_02_plane_example(report_criterion):
    t0 = time.perf_counter()
    demo = run_demo("example-4-1")
    elapsed = time.perf_counter() - t0
    bf = demo.data["brute_force_T"]
    conds = {c["condition"]: c["holds"] for c in demo.data["conditions"]}
    on_m = demo.data["conditions"][2]["witness"]["x"][1] == 0.0
    ok = (
        conds == {"4.2": True, "4.3": True, "4.1": False}
        and on_m
        and abs(bf["value"]) <= 1e-2
        and bf["attainment"] == "limit_only"
        and demo.passed
        and elapsed < 30.0
    )
    report_criterion(2, ok, f"conditions {conds}, brute-force T(1,0)={bf['value']:.3g} ({bf['attainment']}), "
                            f"{elapsed:.2f} s (< 30 s)")
    assert ok


def test_criterion_03_norm_dual_pair(report_criterion):
    t0 = time.perf_counter()
    S = FunctionalSpec.euclidean_norm(2)
    P = dual_negate(S)
    xs = VectorSampler(2, 0).vectors(100)
    worst = max(abs(compute_T(S, P, x).value - S(x)) for x in xs)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 30.0
    report_criterion(3, ok, f"max |T - S| over 100 samples = {worst:.2e} (< 1e-4), {elapsed:.2f} s (< 30 s)")
    assert ok


def test_criterion_04_T_sublinear_sandwich(report_criterion):
    violations, instances, seed = 0, 0, 0
    worst = 0.0
    while instances < 50:
        dim = 2 + instances % 3
        inst = generate_instance(dim, True, 4000 + seed)
        seed += 1
        if not check_condition_42(inst.S, inst.P).holds:
            continue
        instances += 1
        smp = VectorSampler(dim, seed)
        xs, ys, alphas = smp.vectors(100), smp.vectors(100), smp.scales(100)
        T = lambda v: compute_T(inst.S, inst.P, v, method="exact_lp", witness=False).value
        for x, y, a in zip(xs, ys, alphas):
            tx, ty, txy, tax = T(x), T(y), T(x + y), T(a * x)
            errs = [
                inst.P(x) - tx,
                tx - inst.S(x),
                txy - tx - ty,
                abs(tax - a * tx) / max(1.0, abs(tax)),
            ]
            worst = max(worst, *errs)
            violations += sum(e > TOL for e in errs)
    ok = violations == 0
    report_criterion(4, ok, f"{instances} instances x 100 points, {violations} violations, worst excess {worst:.2e} (tol 1e-6)")
    assert ok


@pytest.fixture(scope="module")
def equivalence_runs():
    rows, certs = [], []
    for i in range(50):
        dim = (2, 3)[i % 2]
        seed = suite_instance_seed(SUITE_SEED, i)
        inst = generate_instance(dim, i % 2 == 0, seed)
        lp = check_condition_41(inst.f0, inst.S, inst.P, seed=seed, method="exact_lp")
        try:
            cert = extend_full(inst.f0, inst.S, inst.P, seed=seed, precheck=False)
            certs.append(cert)
        except InfeasibleExtension:
            cert = None
        rows.append((inst.feasible, lp.holds, cert))
    return rows, certs


def test_criterion_05_extension_iff_lp(report_criterion, equivalence_runs):
    rows, certs = equivalence_runs
    agree = sum((cert is not None) == lp for _, lp, cert in rows)
    constructed = sum(feas == lp for feas, lp, _ in rows)
    bad = [c for c in certs if not (c.passed and c.residual < 1e-8 and c.margin_S >= -TOL and c.margin_P >= -TOL)]
    ok = agree == 50 and constructed == 50 and not bad
    report_criterion(5, ok, f"extend_full vs LP form {agree}/50, LP vs construction {constructed}/50, "
                            f"{len(certs)} certificates, {len(bad)} failing verification")
    assert ok


def test_criterion_06_one_step(report_criterion):
    agree = 0
    for i in range(30):
        inst = generate_instance(2 + i % 3, i % 2 == 0, 6000 + i)
        x0 = completion_directions(inst.M)[0]
        iv = interval_bounds(inst.f0, x0, inst.S, inst.P)
        r = check_condition_41(inst.f0, inst.S, inst.P, restriction=inst.M.extended(x0), method="exact_lp", tol=TOL)
        agree += iv.feasible(TOL) == r.holds
    ok = agree == 30
    report_criterion(6, ok, f"interval nonempty vs one-step condition 4.1: {agree}/30")
    assert ok


def _same(a, b):
    if np.isinf(a) or np.isinf(b):
        return a == b
    return abs(a - b) <= ORACLE_TOL


def test_criterion_07_oracle_agreement(report_criterion):
    t_agree, t_cmp, worst_t = 0, 0, 0.0
    for i in range(30):
        inst = generate_instance(2 + i % 2, i % 3 != 2, 7000 + i)
        x = VectorSampler(inst.dim, i).vectors(1)[0]
        bf = brute_force_T(inst.S, inst.P, x, GRID).value
        for method in ("exact_lp", "numeric"):
            v = compute_T(inst.S, inst.P, x, method=method, witness=False).value
            t_cmp += 1
            t_agree += _same(v, bf)
            if np.isfinite(v) and np.isfinite(bf):
                worst_t = max(worst_t, abs(v - bf))
    b_agree, worst_b, n = 0, 0.0, 0
    seed = 0
    while n < 20:
        inst = generate_instance(2 + n % 2, True, 8000 + seed)
        seed += 1
        n += 1
        x0 = completion_directions(inst.M)[0]
        ex = interval_bounds(inst.f0, x0, inst.S, inst.P)
        bf = brute_force_bounds(inst.f0, x0, inst.S, inst.P, GRID)
        pairs = [(getattr(ex, k), getattr(bf, k)) for k in "abcd"]
        b_agree += all(_same(a, b) for a, b in pairs)
        worst_b = max([worst_b] + [abs(a - b) for a, b in pairs if np.isfinite(a) and np.isfinite(b)])
    ok = t_agree == t_cmp == 60 and b_agree == 20
    report_criterion(7, ok, f"T vs grid {t_agree}/{t_cmp} (worst {worst_t:.1e}), bounds vs grid {b_agree}/20 "
                            f"(worst {worst_b:.1e}), tol 1e-3")
    assert ok


@pytest.fixture(scope="module")
def classical_certs():
    S = FunctionalSpec.euclidean_norm(3)
    e1 = np.array([1.0, 0.0, 0.0])
    return classical_extend_sublinear(S, e1), classical_extend_superlinear(dual_negate(S), e1)


def test_criterion_08_classical(report_criterion, classical_certs):
    sub, sup = classical_certs
    S = FunctionalSpec.euclidean_norm(3)
    e1 = np.array([1.0, 0.0, 0.0])
    pin = abs(sub.L(e1) - S(e1))
    ok = pin < 1e-8 and sub.margin_S >= -TOL and sub.passed and sup.margin_P >= -TOL and sup.passed
    report_criterion(8, ok, f"|L(e1) - S(e1)| = {pin:.1e}, L<=S margin {sub.margin_S:.1e}, "
                            f"mirror P<=L margin {sup.margin_P:.1e}")
    assert ok


def test_criterion_09_lower_bound_consistency(report_criterion, equivalence_runs, classical_certs):
    certs = list(equivalence_runs[1]) + list(classical_certs)
    counter = [c for c in certs if c.margin_S >= -TOL and c.margin_lower < -TOL]
    ok = not counter and all(c.lower_consistent for c in certs)
    worst = min(c.margin_lower for c in certs)
    report_criterion(9, ok, f"{len(certs)} certificates, {len(counter)} counterexamples to -S(-x) <= L(x), "
                            f"worst margin {worst:.1e}")
    assert ok


def test_criterion_10_determinism(report_criterion, capsys):
    vectors, codes = [], []
    for _ in range(2):
        codes.append(main(["suite", "--count", "50", "--seed", str(SUITE_SEED), "--json"]))
        vectors.append(json.loads(capsys.readouterr().out)["result"]["pass_vector"])
    ok = vectors[0] == vectors[1]
    report_criterion(10, ok, f"two runs of suite --count 50 --seed 7: identical={ok}, "
                             f"passed {sum(vectors[0])}/50 and {sum(vectors[1])}/50, exit codes {codes}")
    assert ok
