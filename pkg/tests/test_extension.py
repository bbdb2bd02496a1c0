import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbsandwich.demos import R4_EXAMPLE
from hbsandwich.extension import (
    ExtensionInterval,
    ExtensionRefused,
    InfeasibleExtension,
    choose_xi,
    classical_extend_sublinear,
    classical_extend_superlinear,
    completion_directions,
    extend_full,
    extend_one_step,
    interval_bounds,
    verify_sandwich,
)
from hbsandwich.functionals import (
    FunctionalSpec,
    LinearFunctional,
    MembershipError,
    PartialLinearFunctional,
    Subspace,
    dual_negate,
)
from hbsandwich.infconv import check_condition_41, check_condition_42, check_condition_43
from hbsandwich.oracle import generate_instance
from hbsandwich.problem import parse_problem

NORM2 = FunctionalSpec.euclidean_norm(2)


@pytest.fixture(scope="module")
def r4():
    return parse_problem(R4_EXAMPLE)


def interval(a, b, d, c):
    return ExtensionInterval(a, b, c, d, np.zeros(1))


def greedy_extend(inst, policy):
    """The plain interval rule at every step (no look-ahead)."""
    f = inst.f0
    for x0 in completion_directions(inst.M):
        f = extend_one_step(f, x0, choose_xi(interval_bounds(f, x0, inst.S, inst.P), policy))
    return f


class TestChooseXi:
    def test_midpoint_low_high(self):
        iv = interval(0.0, 1.0, -1.0, 0.5)
        assert choose_xi(iv) == pytest.approx(0.25)
        assert choose_xi(iv, "low") == 0.0
        assert choose_xi(iv, "high") == 0.5

    def test_singleton(self):
        assert choose_xi(interval(0.0, 0.0, 0.0, 0.0)) == 0.0

    def test_empty(self):
        with pytest.raises(InfeasibleExtension) as info:
            choose_xi(interval(1.0, 2.0, 3.0, 4.0))
        assert info.value.interval.a == 1.0

    def test_near_empty_is_clamped(self):
        xi = choose_xi(interval(1.0, 1.0 - 5e-10, 0.0, 3.0), "high")
        assert xi == pytest.approx(1.0, abs=1e-9)


class TestIntervalBounds:
    def test_classical_plane_case(self):
        f0 = PartialLinearFunctional(Subspace([[1.0, 0.0]]), [1.0])
        iv = interval_bounds(f0, [0.0, 1.0], NORM2, dual_negate(NORM2))
        for v in (iv.a, iv.b, iv.c, iv.d):
            assert abs(v) < 1e-4
        assert iv.feasible()
        L = extend_one_step(f0, [0.0, 1.0], choose_xi(iv)).coefficients()
        assert np.allclose(L, [1.0, 0.0], atol=1e-4)

    @pytest.mark.parametrize("seed", range(3))
    def test_zero_subspace_closed_form(self, seed):
        inst = generate_instance(3, True, seed)
        x0 = np.array([0.3, -1.0, 2.0])
        f0 = PartialLinearFunctional(Subspace.zero(3), np.zeros(0))
        iv = interval_bounds(f0, x0, inst.S, inst.P)
        S, P = inst.S, inst.P
        assert (iv.a, iv.b, iv.c, iv.d) == (-S(-x0), S(x0), -P(-x0), P(x0))

    def test_r4_example_first_step(self, r4):
        iv = interval_bounds(r4.f0, [0.0, 1.0, 0, 0], r4.S, r4.P)
        assert iv.feasible()

    def test_x0_inside_m(self, r4):
        with pytest.raises(ValueError):
            interval_bounds(r4.f0, [2.0, 0, 0, 0], r4.S, r4.P)

    def test_soundness_when_weaker_conditions_hold(self):
        checked = 0
        for seed in range(12):
            inst = generate_instance(3, seed % 2 == 0, seed)
            if not (check_condition_42(inst.S, inst.P).holds and check_condition_43(inst.f0, inst.S, inst.P).holds):
                continue
            checked += 1
            for x0 in completion_directions(inst.M):
                iv = interval_bounds(inst.f0, x0, inst.S, inst.P)
                assert iv.a <= iv.b + 1e-6
                assert iv.d <= iv.c + 1e-6
        assert checked >= 6


class TestOneStep:
    def test_seed_from_zero(self):
        x0 = np.array([1.0, 2.0])
        f0 = PartialLinearFunctional(Subspace.zero(2), np.zeros(0))
        f1 = extend_one_step(f0, x0, NORM2(x0))
        assert f1(3.0 * x0) == pytest.approx(3.0 * NORM2(x0))

    def test_restriction_kept(self, r4):
        f1 = extend_one_step(r4.f0, [0.0, 1.0, 0, 0], 0.7)
        assert f1([1.0, 0, 0, 0]) == 1.0
        assert f1([0.0, 1.0, 0, 0]) == pytest.approx(0.7)
        with pytest.raises(MembershipError):
            f1([0.0, 0, 1.0, 0])

    def test_rejects_direction_in_m(self, r4):
        with pytest.raises(ValueError):
            extend_one_step(r4.f0, [3.0, 0, 0, 0], 1.0)


class TestExtendFull:
    def test_r4_example_on_e1(self, r4):
        cert = extend_full(r4.f0, r4.S, r4.P, target=r4.E1)
        assert cert.passed
        assert cert.L([1.0, 0, 0, 0]) == pytest.approx(1.0, abs=1e-8)
        assert len(cert.trace) == 2
        assert {"x0", "a", "b", "c", "d", "xi"} <= set(cert.trace[0])

    def test_r4_example_on_r4_refused(self, r4):
        with pytest.raises(ExtensionRefused) as info:
            extend_full(r4.f0, r4.S, r4.P)
        rep = info.value.report
        assert not rep.holds
        assert np.allclose(rep.witness["x"], [1.0, 0, 0, 0])

    @pytest.mark.parametrize("S", [NORM2, FunctionalSpec.max_linear([[1.0, 0.0], [0.0, 2.0], [-1.0, -1.0]])])
    def test_seed_on_zero_subspace(self, S):
        f0 = PartialLinearFunctional(Subspace.zero(2), np.zeros(0))
        cert = extend_full(f0, S, dual_negate(S))
        assert cert.passed and cert.margin_S >= -1e-6

    def test_greedy_counterexample_is_handled(self):
        # the plain interval rule gets stuck on this instance whatever end it picks
        inst = generate_instance(3, True, 2)
        for policy in ("low", "high"):
            with pytest.raises(InfeasibleExtension):
                greedy_extend(inst, policy)
        for policy in ("low", "midpoint", "high"):
            assert extend_full(inst.f0, inst.S, inst.P, policy=policy).passed

    def test_explicit_order(self):
        inst = generate_instance(3, True, 5)
        cert = extend_full(inst.f0, inst.S, inst.P, order=[[0.0, 0.0, 1.0]])
        assert cert.passed
        assert np.allclose(np.abs(cert.trace[0]["x0"]) > 0, inst.M.orthonormal.shape[0] < 3)

    def test_target_must_contain_m(self, r4):
        with pytest.raises(ValueError):
            extend_full(r4.f0, r4.S, r4.P, target=Subspace([[0.0, 1.0, 0, 0]]))

    def test_certificate_json_fields(self, r4):
        d = extend_full(r4.f0, r4.S, r4.P, target=r4.E1).to_dict()
        assert list(d)[:5] == ["L", "residual", "margin_S", "margin_P", "trace"]


class TestClassical:
    def test_norm_r3(self):
        cert = classical_extend_sublinear(FunctionalSpec.euclidean_norm(3), [1.0, 0.0, 0.0])
        assert cert.passed
        assert abs(cert.L([1.0, 0, 0]) - 1.0) < 1e-8
        assert np.allclose(cert.L.coeffs, [1.0, 0.0, 0.0], atol=1e-4)

    def test_zero_seed_point(self):
        cert = classical_extend_sublinear(FunctionalSpec.euclidean_norm(2), [0.0, 0.0])
        assert cert.passed

    def test_max_linear(self):
        cert = classical_extend_sublinear(FunctionalSpec.max_linear([[1.0, 0.0], [0.0, 1.0]]), [1.0, 0.0])
        assert np.allclose(cert.L.coeffs, [1.0, 0.0], atol=1e-9)

    def test_zero_functional(self):
        cert = classical_extend_sublinear(FunctionalSpec.max_linear([[0.0, 0.0]]), [1.0, -1.0])
        assert np.allclose(cert.L.coeffs, 0.0)

    def test_superlinear_mirror(self):
        cert = classical_extend_superlinear(dual_negate(NORM2), [0.0, 1.0])
        assert cert.passed and cert.margin_P >= -1e-6
        assert np.allclose(cert.L.coeffs, [0.0, 1.0], atol=1e-4)

    def test_superlinear_linear_p(self):
        g = np.array([0.5, -2.0])
        cert = classical_extend_superlinear(FunctionalSpec.min_linear([g]), [1.0, 1.0])
        assert np.allclose(cert.L.coeffs, g, atol=1e-9)

    def test_superlinear_zero_point(self):
        assert classical_extend_superlinear(dual_negate(NORM2), [0.0, 0.0]).passed

    def test_class_checks(self):
        with pytest.raises(ValueError):
            classical_extend_sublinear(dual_negate(NORM2), [1.0, 0.0])
        with pytest.raises(ValueError):
            classical_extend_superlinear(NORM2, [1.0, 0.0])


class TestVerify:
    def test_e1_extension_fails_on_r4(self, r4):
        L = LinearFunctional([1.0, 0.0, 0.0, 0.0])
        on_e1 = verify_sandwich(L, r4.f0, r4.S, r4.P, domain=r4.E1)
        assert on_e1.passed
        full = verify_sandwich(L, r4.f0, r4.S, r4.P)
        assert not full.passed
        assert full.margin_P < -1e-6
        w = np.asarray(full.witness_P)
        assert L(w) < r4.P(w)

    def test_zero_functional_under_norm(self):
        f0 = PartialLinearFunctional(Subspace.zero(3), np.zeros(0))
        S = FunctionalSpec.euclidean_norm(3)
        assert verify_sandwich(LinearFunctional(np.zeros(3)), f0, S, dual_negate(S)).passed

    def test_residual_detects_wrong_restriction(self, r4):
        cert = verify_sandwich(LinearFunctional([0.5, 0, 0, 0]), r4.f0, r4.S, r4.P, domain=r4.E1)
        assert cert.residual == pytest.approx(0.5)
        assert not cert.passed

    def test_exact_margins_for_polyhedral(self):
        inst = generate_instance(3, True, 1)
        cert = verify_sandwich(LinearFunctional(inst.witness), inst.f0, inst.S, inst.P)
        assert cert.exact_margin_S >= -1e-9 and cert.exact_margin_P >= -1e-9
        assert cert.passed


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([2, 3, 4]))
def test_equivalence_with_lp_condition(seed, dim):
    inst = generate_instance(dim, seed % 2 == 0, seed)
    lp = check_condition_41(inst.f0, inst.S, inst.P, method="exact_lp")
    try:
        cert = extend_full(inst.f0, inst.S, inst.P, precheck=False, samples=2000)
        ok = True
    except InfeasibleExtension:
        ok = False
    assert ok == lp.holds == inst.feasible
    if ok:
        assert cert.passed
        assert cert.residual < 1e-8
        c = np.asarray(lp.details["lp_witness_c"])
        assert verify_sandwich(LinearFunctional(c), inst.f0, inst.S, inst.P, samples=2000).passed


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_one_step_equivalence(seed):
    inst = generate_instance(3, seed % 2 == 0, seed)
    if inst.M.dim == 0:
        return
    x0 = completion_directions(inst.M)[0]
    iv = interval_bounds(inst.f0, x0, inst.S, inst.P)
    M1 = inst.M.extended(x0)
    r = check_condition_41(inst.f0, inst.S, inst.P, restriction=M1, method="exact_lp")
    assert iv.feasible(1e-6) == r.holds


@pytest.mark.parametrize("seed", range(6))
def test_policy_independence(seed):
    inst = generate_instance(3, True, seed)
    bits = [extend_full(inst.f0, inst.S, inst.P, policy=p, samples=2000).passed for p in ("low", "midpoint", "high")]
    assert all(bits)


@pytest.mark.parametrize("seed", range(8))
def test_order_independence(seed):
    inst = generate_instance(3, seed % 2 == 0, seed)
    rng = np.random.default_rng(seed)
    bits = []
    for _ in range(2):
        try:
            extend_full(inst.f0, inst.S, inst.P, order=list(rng.normal(size=(3, 3))), precheck=False, samples=1000)
            bits.append(True)
        except InfeasibleExtension:
            bits.append(False)
    assert bits[0] == bits[1] == inst.feasible


def test_low_and_high_certificates_differ():
    inst = generate_instance(3, True, 3)
    lo = extend_full(inst.f0, inst.S, inst.P, policy="low")
    hi = extend_full(inst.f0, inst.S, inst.P, policy="high")
    assert lo.passed and hi.passed
    assert not np.allclose(lo.L.coeffs, hi.L.coeffs)
