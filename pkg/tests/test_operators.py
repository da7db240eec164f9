from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from descentlab import exact
from descentlab.errors import OperatorSpecError, SpaceMismatchError
from descentlab.exact import INF
from descentlab.finite_core import (
    FiniteSpace,
    MeasureMatrix,
    MetricMatrix,
    NeighborhoodSystem,
    ScalarField,
    generator_from_rates,
    validate_generator,
)
from descentlab.operators import (
    TD,
    TL,
    Indicator,
    Nonlocal,
    PointwiseInf,
    PointwiseSup,
    PostCompose,
    PowerPhi,
    RestrictK,
    Scale,
    Sum,
    TablePhi,
    ThresholdPhi,
    TLm,
    TopGap,
    TruncateEps,
    Zero,
    compose_operators,
    eval_nonlocal,
    eval_semiglobal_slope,
    eval_TD,
    eval_TL,
    eval_TLm,
    parse_phi,
)


def test_TL_on_z9(z9_generator, z9_field):
    values = TL(z9_generator).evaluate(z9_field)
    assert values.zero_set() == {1, 2, 5, 6, 8}
    assert values[0] == Fraction(1, 2)
    assert values[4] == Fraction(1)


def test_TLm_values(z9_generator, z9_field):
    # at vertex 4 both neighbours drop by 1 with rate 1/2
    sqrt_rate = TLm(z9_generator, Fraction(2)).evaluate(z9_field)[4]
    assert sqrt_rate == Fraction(1)
    assert TLm(z9_generator, INF).evaluate(z9_field)[4] == 1
    assert TLm(z9_generator, Fraction(1)).evaluate(z9_field) == TL(z9_generator).evaluate(z9_field)


def test_TLm_irrational_values_stay_exact(ring):
    L = ring(3)
    f = ScalarField.of(L.space, [2, 0, 1])
    # (1/2 * 2**2 + 1/2 * 1**2) ** (1/2) = sqrt(5/2)
    value = TLm(L, Fraction(2)).evaluate(f)[0]
    assert exact.equal(value, exact.root(Fraction(5, 2), 2))


def test_TLm_per_vertex_exponents(ring):
    L = ring(3)
    T = TLm(L, (Fraction(1), INF, Fraction(2)))
    assert T.exponent(1) is INF
    with pytest.raises(OperatorSpecError):
        TLm(L, (Fraction(1), Fraction(2)))
    with pytest.raises(OperatorSpecError):
        TLm(L, Fraction(0))


def test_TD_and_topgap():
    space = FiniteSpace.range(3)
    D = NeighborhoodSystem.full(space)
    f = ScalarField.of(space, [2, 0, 1])
    assert TD(D).evaluate(f).values == (2, 0, 1)
    # TopGap compares with the largest competitor only
    assert TopGap(D).evaluate(f).values == (1, 0, 0)


def test_nonlocal_zn_bar_values(zn_spec):
    T = compose_operators("default", zn_spec)
    expected = {"0bar": Fraction(0), "0": Fraction(2, 3)}
    for name in ("f1", "f2"):
        values = T.evaluate(zn_spec.function(name))
        for label, v in zip(zn_spec.space.labels, values.values):
            assert v == expected.get(label, Fraction(1)), (name, label)
    assert not T.is_descent_modulus


def test_oriented_nonlocal_zero_at_local_minima(zn_spec):
    T = compose_operators("oriented", zn_spec)
    values = T.evaluate(zn_spec.function("f1"))
    assert values.zero_set() == zn_spec.space.indices(["0bar", "0", "2", "4"])
    assert T.is_descent_modulus and T.homogeneity_degree == 2


def test_combinator_certificates(ring):
    L = ring(4)
    assert Sum((TL(L), TLm(L, INF))).is_descent_modulus
    assert Sum((TL(L), TLm(L, INF))).homogeneity_degree == 1
    assert PostCompose(TL(L), PowerPhi(Fraction(3))).homogeneity_degree == 3
    assert Scale(TL(L), Fraction(0)).homogeneity_degree is None
    assert TruncateEps(TL(L), Fraction(1)).homogeneity_degree is None
    assert RestrictK(TL(L), frozenset({0})).homogeneity_degree == 1
    assert PointwiseSup((TL(L), Zero(L.space))).homogeneity_degree == 1
    assert not Indicator(TL(L)).is_descent_modulus


def test_sup_and_inf_of_mixed_degrees_are_not_certified(ring):
    L = ring(4)
    children = (TL(L), PostCompose(TL(L), PowerPhi(Fraction(2))))
    for combined in (PointwiseSup(children), PointwiseInf(children)):
        assert combined.homogeneity_degree is None
        assert not combined.is_descent_modulus
    same_degree = PointwiseInf((TL(L), TLm(L, INF)))
    assert same_degree.is_descent_modulus and same_degree.homogeneity_degree == 1
    assert PointwiseSup((TL(L), Zero(L.space))).is_descent_modulus


def test_truncation_levels_collect_through_tree(ring):
    L = ring(4)
    T = Sum((TruncateEps(TL(L), Fraction(1)), Scale(TruncateEps(TL(L), Fraction(2)), Fraction(3))))
    assert T.truncation_levels() == (Fraction(1), Fraction(2))


def test_post_compose_needs_strictly_increasing_phi(ring):
    with pytest.raises(OperatorSpecError):
        PostCompose(TL(ring(3)), ThresholdPhi(Fraction(1)))


def test_combinator_rejects_mixed_spaces(ring):
    with pytest.raises(SpaceMismatchError):
        Sum((TL(ring(3)), TL(ring(4))))


def test_indicator_is_pointwise_root_limit(ring):
    L = ring(3)
    f = ScalarField.of(L.space, [3, 0, 0])
    assert Indicator(TL(L)).evaluate(f).values == (1, 0, 0)


@pytest.mark.parametrize("expr", [
    {"kind": "power", "p": "-1"},
    {"kind": "table", "values": {"0": "1"}},
    {"kind": "cubic"},
    {"p": "2"},
])
def test_invalid_phi(expr):
    with pytest.raises(OperatorSpecError):
        parse_phi(expr)


def test_table_phi_lookup():
    phi = parse_phi({"kind": "table", "values": {"0": "0", "1": "1", "2": "5"}})
    assert isinstance(phi, TablePhi) and phi.strictly_increasing
    assert phi(Fraction(2)) == 5
    with pytest.raises(OperatorSpecError):
        phi(Fraction(3))


def test_compose_operators_from_spec_names(z9_spec):
    T = compose_operators({"op": "Sum", "args": ["TL", "TLinf"]}, z9_spec)
    assert T.describe() == "Sum(TL, TLm(m=inf))"
    with pytest.raises(OperatorSpecError):
        compose_operators({"op": "Nope"}, z9_spec)
    with pytest.raises(OperatorSpecError):
        compose_operators("missing", z9_spec)


def test_self_referencing_expression_is_rejected(z9_spec):
    z9_spec.operators["loop"] = {"op": "Scale", "r": "2", "arg": "loop"}
    with pytest.raises(OperatorSpecError):
        compose_operators("loop", z9_spec)


def test_nonlocal_fractional_power():
    space = FiniteSpace.range(2)
    mu = MeasureMatrix.of(space, [[0, 1], [1, 0]])
    f = ScalarField.of(space, [1, 0])
    T = Nonlocal(mu, PowerPhi(Fraction(1, 2)))
    assert exact.equal(T.evaluate(f)[0], Fraction(1))
    assert T.evaluate(f)[1] == 0


RING4 = generator_from_rates(
    FiniteSpace.range(4), {(x, (x + d) % 4): Fraction(1, 2) for x in range(4) for d in (1, -1)}
)
levels = st.lists(st.integers(min_value=0, max_value=3), min_size=4, max_size=4)


@given(levels, st.integers(min_value=-3, max_value=3))
def test_TL_translation_invariant(values, c):
    L = RING4
    f = ScalarField.of(L.space, values)
    assert TL(L).evaluate(f) == TL(L).evaluate(f.shift(c))


@given(levels, st.fractions(min_value=Fraction(1, 3), max_value=3, max_denominator=3))
def test_TLinf_one_homogeneous(values, r):
    L = RING4
    f = ScalarField.of(L.space, values)
    T = TLm(L, INF)
    assert T.evaluate(f.scale(r)).values == tuple(r * v for v in T.evaluate(f).values)


# ============================================================================
# HAND-EVALUATED VALUES
# ============================================================================

AB = FiniteSpace.of(["a", "b"])
ABC = FiniteSpace.of(["a", "b", "c"])


def test_eval_TL_on_two_states():
    L = validate_generator([[-1, 1], [1, -1]], AB)
    assert eval_TL(L, ScalarField.of(AB, [2, 0])).values == (Fraction(2), Fraction(0))


def test_eval_TLm_square_root_of_rate():
    L = validate_generator([[-4, 4], [0, 0]], AB)
    assert eval_TLm(L, "2", ScalarField.of(AB, [1, 0])).values[0] == Fraction(2)
    assert eval_TLm(L, "1", ScalarField.of(AB, [1, 0])).values == eval_TL(L, ScalarField.of(AB, [1, 0])).values


def test_eval_TD_and_semiglobal_slope():
    D = NeighborhoodSystem.from_labels(ABC, {"a": ["a", "b", "c"], "b": ["b"], "c": ["c"]})
    f = ScalarField.of(ABC, [2, 1, 0])
    assert eval_TD(D, f).at("a") == Fraction(2)
    metric = MetricMatrix.of(ABC, [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert eval_semiglobal_slope(D, metric, f).at("a") == Fraction(1)
    assert eval_semiglobal_slope(D, MetricMatrix.discrete(ABC), f).at("a") == Fraction(2)


def test_eval_nonlocal_orientation():
    mu = MeasureMatrix.of(AB, [[0, 1], [1, 0]])
    f = ScalarField.of(AB, [0, 1])
    assert eval_nonlocal(mu, PowerPhi(Fraction(1)), f).values == (Fraction(0), Fraction(1))
    assert eval_nonlocal(mu, PowerPhi(Fraction(1)), f, oriented=False).values == (Fraction(1), Fraction(1))
