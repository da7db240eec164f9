from fractions import Fraction

import pytest

from descentlab.axioms import (
    Verdict,
    audit,
    check_D1,
    check_D2,
    check_D3,
    check_homogeneity,
    check_translation_invariance,
)
from descentlab.errors import BudgetError
from descentlab.exact import INF
from descentlab.finite_core import (
    FiniteSpace,
    FunctionGrid,
    MeasureMatrix,
    MetricMatrix,
    NeighborhoodSystem,
    ScalarField,
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
    SemiGlobalSlope,
    Sum,
    TLm,
    TopGap,
    TruncateEps,
    compose_operators,
)


@pytest.mark.parametrize("build", [
    TL,
    lambda L: TLm(L, Fraction(2)),
    lambda L: TLm(L, INF),
    lambda L: TD(L.active_system()),
], ids=["TL", "TL2", "TLinf", "TD"])
def test_generator_operators_are_moduli_on_a_small_grid(ring, build):
    L = ring(4)
    T = build(L)
    summary = audit(T, FunctionGrid.integers(L.space, 3))
    assert summary.is_modulus_on_grid, summary.failing()
    assert summary.report("homogeneity").holds


def test_nonoriented_nonlocal_fails_D1_at_0bar(zn_spec):
    T = compose_operators("default", zn_spec)
    report = check_D1(T, FunctionGrid.integers(zn_spec.space, 2))
    assert report.verdict is Verdict.FAILS
    assert report.witness["x"] == "0bar"


def test_indicator_fails_D3(ring):
    L = ring(3)
    report = check_D3(Indicator(TL(L)), FunctionGrid.integers(L.space, 3))
    assert not report.holds
    assert report.witness["T_f"] == report.witness["T_rf"] == "1/1"


def test_truncation_keeps_modulus_axioms_but_breaks_homogeneity(eps_trunc_spec):
    T = compose_operators("default", eps_trunc_spec)
    grid = eps_trunc_spec.grid()
    summary = audit(T, grid, degree=1)
    assert summary.is_modulus_on_grid
    assert summary.failing() == ["homogeneity(p=1/1)"]


def test_topgap_passes_full_audit():
    space = FiniteSpace.range(3)
    T = TopGap(NeighborhoodSystem.full(space))
    summary = audit(T, FunctionGrid.integers(space, 3))
    assert summary.is_modulus_on_grid
    assert [r.axiom for r in summary.reports] == ["D1", "D2", "D3", "translation", "homogeneity(p=1/1)"]


def test_nonoriented_nonlocal_fails_D2_with_witness():
    space = FiniteSpace.range(2)
    T = Nonlocal(MeasureMatrix.of(space, [[0, 1], [1, 0]]), PowerPhi(Fraction(1)), oriented=False)
    report = check_D2(T, FunctionGrid.integers(space, 2))
    assert not report.holds
    w = report.witness
    f = ScalarField.from_mapping(space, {int(k): v for k, v in w["f"].items()})
    g = ScalarField.from_mapping(space, {int(k): v for k, v in w["g"].items()})
    x = w["x"]
    assert T.evaluate(f)[x] < T.evaluate(g)[x]


def test_translation_and_homogeneity_for_TL(ring):
    L = ring(3)
    grid = FunctionGrid.integers(L.space, 3)
    assert check_translation_invariance(TL(L), grid).holds
    assert check_homogeneity(TL(L), grid, 1).holds
    assert not check_homogeneity(TL(L), grid, 2).holds


def test_D3_rejects_scales_at_most_one(ring):
    L = ring(3)
    with pytest.raises(ValueError):
        check_D3(TL(L), FunctionGrid.integers(L.space, 2), rset=[Fraction(1)])


def test_audit_respects_the_enumeration_cap(ring):
    L = ring(5)
    with pytest.raises(BudgetError):
        audit(TL(L), FunctionGrid.integers(L.space, 3), cap=100)


# ============================================================================
# EXHAUSTIVE |V| = 4, G = 4
# ============================================================================

RING_METRIC = [[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]]

MODULI = {
    "TL": TL,
    "TLm-1/2": lambda L: TLm(L, Fraction(1, 2)),
    "TLm-2": lambda L: TLm(L, Fraction(2)),
    "TLm-inf": lambda L: TLm(L, INF),
    "TD": lambda L: TD(L.active_system()),
    "TopGap": lambda L: TopGap(NeighborhoodSystem.full(L.space)),
    "slope": lambda L: SemiGlobalSlope(L.active_system(), MetricMatrix.of(L.space, RING_METRIC)),
    "slope-discrete": lambda L: SemiGlobalSlope(NeighborhoodSystem.full(L.space), MetricMatrix.discrete(L.space)),
    "nonlocal": lambda L: Nonlocal(L.off_diagonal(), PowerPhi(Fraction(2))),
    "Sum": lambda L: Sum((TL(L), TLm(L, INF))),
    "PostCompose": lambda L: PostCompose(TL(L), PowerPhi(Fraction(3))),
    "Scale": lambda L: Scale(TD(L.active_system()), Fraction(5, 2)),
    "TruncateEps": lambda L: TruncateEps(TL(L), Fraction(1)),
    "RestrictK": lambda L: RestrictK(TL(L), frozenset({0, 1})),
    "PointwiseSup": lambda L: PointwiseSup((TL(L), TD(L.active_system()))),
    "PointwiseInf": lambda L: PointwiseInf((TL(L), TLm(L, INF))),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(MODULI))
def test_certified_moduli_pass_every_axiom_on_the_full_grid(ring, name):
    L = ring(4)
    T = MODULI[name](L)
    assert T.is_descent_modulus
    summary = audit(T, FunctionGrid.integers(L.space, 4))
    assert summary.grid_count == 256
    assert summary.is_modulus_on_grid, summary.failing()
    assert summary.report("translation").holds
    assert summary.failing() == [], summary.to_dict()
