import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbsandwich.functionals import (
    DimensionError,
    FunctionalSpec,
    Kind,
    LinearFunctional,
    MembershipError,
    PartialLinearFunctional,
    Subspace,
    VectorSampler,
    batch_kernel,
    check_axioms,
    dual_negate,
    evaluate,
    evaluate_batch,
    evaluate_partial,
    subspace_membership,
)

finite = st.floats(min_value=-100, max_value=100, allow_nan=False, allow_infinity=False)


def vec(n):
    return st.lists(finite, min_size=n, max_size=n).map(np.array)


def random_specs(seed, n):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(4, n))
    v = rng.normal(size=n)
    A = rng.normal(size=(n, n))
    return [
        FunctionalSpec.max_linear(G),
        FunctionalSpec.min_linear(G),
        FunctionalSpec.norm_plus_linear(v, A),
        FunctionalSpec.linear_minus_norm(v, A),
    ]


class TestEvaluate:
    def test_norm_at_example_point(self):
        S = FunctionalSpec.euclidean_norm(4)
        assert abs(evaluate(S, [10, 0, 0, 1]) - math.sqrt(101)) < 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_zero_maps_to_zero(self, seed):
        for spec in random_specs(seed, 3):
            value = evaluate(spec, np.zeros(3))
            if spec.polyhedral:
                assert value == 0.0
            else:
                assert abs(value) < 1e-12

    def test_max_linear_1d(self):
        S = FunctionalSpec.max_linear([[1.0], [-1.0]])
        assert evaluate(S, [-3.0]) == 3.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            evaluate(FunctionalSpec.euclidean_norm(2), [1.0, 2.0, 3.0])

    def test_batch_and_kernel_match_pointwise(self):
        xs = VectorSampler(3, 5).vectors(50)
        for spec in random_specs(1, 3):
            pointwise = np.array([evaluate(spec, x) for x in xs])
            assert np.allclose(evaluate_batch(spec, xs), pointwise, atol=1e-12)
            assert np.allclose(batch_kernel(spec)(xs), pointwise, atol=1e-12)

    def test_plane_example_superlinear_p(self):
        P = FunctionalSpec.linear_minus_norm([0.0, 1.0], [[1.0, 0.0]])
        assert P([-2.0, 3.0]) == 1.0


class TestDualNegate:
    def test_norm_maps_to_negative_norm(self):
        P = dual_negate(FunctionalSpec.euclidean_norm(2))
        assert P.kind is Kind.LINEAR_MINUS_NORM
        assert P([3.0, 4.0]) == -5.0

    def test_abs_maps_to_minus_abs(self):
        S = FunctionalSpec.max_linear([[1.0], [-1.0]])
        P = dual_negate(S)
        assert P.kind is Kind.MIN_LINEAR
        grid = np.linspace(-5, 5, 101)[:, None]
        assert np.max(np.abs(evaluate_batch(P, grid) + np.abs(grid[:, 0]))) < 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_involution(self, seed):
        xs = VectorSampler(3, seed).vectors(200)
        for spec in random_specs(seed, 3):
            twice = dual_negate(dual_negate(spec))
            assert twice.declared == spec.declared
            assert np.max(np.abs(evaluate_batch(twice, xs) - evaluate_batch(spec, xs))) < 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_definition(self, seed):
        xs = VectorSampler(3, seed).vectors(200)
        for spec in random_specs(seed, 3):
            d = dual_negate(spec)
            assert np.max(np.abs(evaluate_batch(d, xs) + evaluate_batch(spec, -xs))) < 1e-9


class TestAxioms:
    def test_norm_is_sublinear(self):
        rep = check_axioms(FunctionalSpec.euclidean_norm(3), VectorSampler(3, 0), 1000)
        assert rep.passed and rep.samples == 1000

    def test_plane_example_p_is_superlinear(self):
        P = FunctionalSpec.linear_minus_norm([0.0, 1.0], [[1.0, 0.0]])
        assert check_axioms(P, VectorSampler(2, 0), 1000).passed

    def test_mislabeled_spec_is_caught(self):
        bad = FunctionalSpec(Kind.MIN_LINEAR, generators=[[1.0], [-1.0]], declared="sublinear")
        rep = check_axioms(bad, VectorSampler(1, 0), 1000)
        assert not rep.passed
        assert rep.witness["axiom"] == "subadditivity"
        x, y = rep.witness["x"][0], rep.witness["y"][0]
        assert -abs(x) - abs(y) < -abs(x + y) - 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_random_specs_satisfy_their_class(self, seed):
        for spec in random_specs(seed, 4):
            assert check_axioms(spec, VectorSampler(4, seed), 500).passed

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError):
            check_axioms(FunctionalSpec.euclidean_norm(2), VectorSampler(2, 0), 0)


@settings(max_examples=60, deadline=None)
@given(vec(3), st.integers(0, 3), st.integers(0, 50))
def test_dual_negate_ordering(x, which, seed):
    # -S(-x) <= S(x) for sublinear S, -P(-x) >= P(x) for superlinear P
    spec = random_specs(seed, 3)[which]
    if spec.declared == "sublinear":
        assert -spec(-x) <= spec(x) + 1e-9
    else:
        assert -spec(-x) >= spec(x) - 1e-9


def test_linear_pair_coincides():
    rng = np.random.default_rng(0)
    xs = VectorSampler(3, 1).vectors(300)
    for _ in range(10):
        c = rng.normal(size=(1, 3))
        S, P = FunctionalSpec.max_linear(c), FunctionalSpec.min_linear(c)
        assert np.all(evaluate_batch(S, xs) <= evaluate_batch(P, xs))
        assert np.allclose(evaluate_batch(S, xs), evaluate_batch(P, xs))


def test_reversed_pair_only_where_equal():
    # S <= -S(-.) happens only where the two agree
    rng = np.random.default_rng(1)
    xs = VectorSampler(2, 3).vectors(500)
    for _ in range(10):
        S = FunctionalSpec.max_linear(rng.normal(size=(3, 2)))
        P = dual_negate(S)
        s, p = evaluate_batch(S, xs), evaluate_batch(P, xs)
        below = s <= p
        assert np.all(np.abs(s[below] - p[below]) < 1e-9)


class TestSubspace:
    def test_membership_examples(self):
        M = Subspace([[1.0, 0.0]])
        assert subspace_membership(M, [5.0, 0.0]) == (True, 0.0)
        ok, res = subspace_membership(M, [0.0, 1.0])
        assert not ok and abs(res - 1.0) < 1e-12
        ok, res = subspace_membership(Subspace([[1.0, 1.0]]), [2.0, 2.0 + 1e-12])
        assert ok and 0 < res < 1e-11

    def test_dependent_basis_rejected(self):
        with pytest.raises(ValueError):
            Subspace([[1.0, 2.0], [2.0, 4.0]])

    def test_zero_and_full(self):
        Z = Subspace.zero(3)
        assert Z.dim == 0 and Z.membership(np.zeros(3))[0]
        assert not Z.membership([1.0, 0, 0])[0]
        F = Subspace.full(3)
        assert F.contains(Subspace([[1.0, 2.0, 3.0]]))

    @pytest.mark.parametrize("seed", range(5))
    def test_coordinates_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        M = Subspace(rng.normal(size=(2, 4)))
        t = rng.normal(size=2)
        x = M.from_coordinates(t)
        assert np.allclose(M.coordinates(x), t)
        assert np.allclose(M.project(x), x)

    def test_extended(self):
        M = Subspace([[1.0, 0.0, 0.0]]).extended([0.0, 1.0, 0.0])
        assert M.dim == 2 and M.membership([3.0, -1.0, 0.0])[0]


class TestPartial:
    def test_r4_example_value(self):
        f0 = PartialLinearFunctional(Subspace([[1.0, 0, 0, 0]]), [1.0])
        assert evaluate_partial(f0, [10.0, 0, 0, 0]) == 10.0
        assert evaluate_partial(f0, np.zeros(4)) == 0.0

    def test_outside_m(self):
        f0 = PartialLinearFunctional(Subspace([[1.0, 0, 0, 0]]), [1.0])
        with pytest.raises(MembershipError) as info:
            evaluate_partial(f0, [1.0, 1.0, 0, 0])
        assert info.value.residual == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_linearity_on_m(self, seed):
        rng = np.random.default_rng(seed)
        M = Subspace(rng.normal(size=(2, 3)))
        f0 = PartialLinearFunctional(M, rng.normal(size=2))
        x, y = M.from_coordinates(rng.normal(size=2)), M.from_coordinates(rng.normal(size=2))
        a = float(rng.uniform(-5, 5))
        assert abs(f0(x + y) - f0(x) - f0(y)) < 1e-9
        assert abs(f0(a * x) - a * f0(x)) < 1e-9

    def test_coefficients_restrict(self):
        rng = np.random.default_rng(7)
        M = Subspace(rng.normal(size=(2, 4)))
        f0 = PartialLinearFunctional(M, [1.5, -2.0])
        c = f0.coefficients()
        assert np.allclose(M.basis @ c, [1.5, -2.0])


def test_linear_functional_spec_roundtrip():
    L = LinearFunctional([1.0, -2.0])
    xs = VectorSampler(2, 0).vectors(20)
    assert np.allclose(evaluate_batch(L.as_spec(), xs), L.batch(xs))
    S = FunctionalSpec.norm_plus_linear([1.0, 0.0], [[2.0, 1.0]])
    assert np.allclose(evaluate_batch(FunctionalSpec.from_dict(S.to_dict()), xs), evaluate_batch(S, xs))


def test_sampler_is_seeded_and_hits_axes():
    a, b = VectorSampler(3, 11).vectors(40), VectorSampler(3, 11).vectors(40)
    assert np.array_equal(a, b)
    axis_hits = np.sum(np.count_nonzero(a, axis=1) == 1)
    assert axis_hits >= 2
