import itertools
from fractions import Fraction

import numpy as np
import pytest

from descentlab.finite_core import FiniteSpace, FunctionGrid, ScalarField, generator_from_rates
from descentlab.markov import (
    Distribution,
    check_comp_lemma,
    check_limit_comparison,
    check_support,
    empirical_occupation,
    limit_distribution,
    oriented_generator,
    sample_comp_lemma,
    simulate_trajectory,
    total_variation,
)

QUARTER = Fraction(1, 4)


def test_oriented_generator_drops_uphill_rates(z9_generator, z9_field):
    Lf = oriented_generator(z9_generator, z9_field).generator
    assert Lf.rate(4, 3) == Fraction(1, 2) and Lf.rate(3, 4) == 0
    assert Lf.rate(0, 8) == Fraction(1, 2) and Lf.rate(8, 0) == Fraction(1, 2)
    assert all(sum(row) == 0 for row in Lf.matrix)


@pytest.mark.parametrize("start,expected", [
    (0, {1: Fraction(1, 2), 2: Fraction(1, 2)}),
    (4, {1: QUARTER, 2: QUARTER, 5: QUARTER, 6: QUARTER}),
    (7, {1: QUARTER, 2: QUARTER, 5: QUARTER, 6: QUARTER}),
    (5, {5: Fraction(1, 2), 6: Fraction(1, 2)}),
])
def test_z9_limit_laws(z9_generator, z9_field, start, expected):
    law = limit_distribution(z9_generator, z9_field, start)
    assert {x: p for x, p in enumerate(law.probs) if p} == expected
    assert check_support(z9_generator, z9_field, start)[0]


def test_limit_law_support_inside_minima(random_generator, rng):
    for _ in range(25):
        L = random_generator(5)
        f = ScalarField.of(L.space, rng.integers(0, 3, size=5).tolist())
        for x in range(5):
            ok, reason = check_support(L, f, x)
            assert ok, reason


def test_distribution_validates():
    space = FiniteSpace.range(2)
    with pytest.raises(ValueError):
        Distribution(space, (Fraction(1, 2), Fraction(1, 3)))
    assert Distribution.point_mass(space, 1).support() == {1}


def test_trajectory_is_monotone_and_reproducible(z9_generator, z9_field):
    a = simulate_trajectory(z9_generator, z9_field, 4, horizon=20.0, seed=11)
    b = simulate_trajectory(z9_generator, z9_field, 4, horizon=20.0, seed=11)
    assert a == b
    assert a.points[0] == (0.0, 4)
    assert a.is_monotone(z9_field)[0]
    assert a.vertices[-1] in {1, 2, 5, 6}


def test_trajectory_stays_put_at_isolated_minimum(ring):
    L = ring(3)
    f = ScalarField.of(L.space, [0, 1, 1])
    traj = simulate_trajectory(L, f, 0, horizon=5.0, seed=0)
    assert traj.vertices == [0]


def test_simulate_rejects_nonpositive_horizon(z9_generator, z9_field):
    with pytest.raises(ValueError):
        simulate_trajectory(z9_generator, z9_field, 0, horizon=0, seed=1)


def test_empirical_occupation_matches_exact_law(z9_generator, z9_field):
    law = limit_distribution(z9_generator, z9_field, 4)
    freq = empirical_occupation(z9_generator, z9_field, 4, horizon=50.0, runs=20000, seed=5)
    assert freq.shape == (9,)
    assert np.isclose(freq.sum(), 1.0)
    assert total_variation(law, freq) < 0.02


def test_empirical_occupation_is_seeded(z9_generator, z9_field):
    a = empirical_occupation(z9_generator, z9_field, 7, horizon=10.0, runs=1000, seed=2)
    b = empirical_occupation(z9_generator, z9_field, 7, horizon=10.0, runs=1000, seed=2)
    assert np.array_equal(a, b)


def test_comp_lemma_on_z9(z9_generator, z9_field):
    g = ScalarField.constant(z9_field.space, 0)
    verdict = check_comp_lemma(z9_generator, z9_field, g)
    assert verdict.hypothesis_holds and not verdict.violation


def test_sampled_comp_lemma_has_no_violations(ring):
    L = ring(4)
    result = sample_comp_lemma(L, FunctionGrid.integers(L.space, 3), draws=300, seed=9)
    assert result["draws"] == 300
    assert result["violations"] == []


def test_limit_comparison(z9_generator, z9_field):
    space = z9_field.space
    lower = z9_field.shift(-1)
    assert check_limit_comparison(z9_generator, z9_field, lower, 4) == (True, True)
    higher = ScalarField.constant(space, 5)
    applicable, _ = check_limit_comparison(z9_generator, z9_field, higher, 4)
    assert not applicable


# ============================================================================
# EXHAUSTIVE |V| = 4, G = 3
# ============================================================================

EDGES = [(x, y) for x in range(4) for y in range(4) if x != y]
# nondecreasing fields with minimum 0: every other grid field is a relabeling or translate of one
SORTED_FIELDS = [f for f in itertools.combinations_with_replacement(range(3), 4) if f[0] == 0]


def _pattern_generator(space, pattern, rates):
    return generator_from_rates(space, {e: r for e, on, r in zip(EDGES, pattern, rates) if on})


@pytest.mark.slow
@pytest.mark.parametrize("rates", [
    [Fraction(1)] * 12,
    [Fraction(1, 2) if (x + y) % 2 else Fraction(1) for x, y in EDGES],
], ids=["unit", "mixed"])
def test_limit_law_support_inside_minima_for_every_edge_pattern(rates):
    space = FiniteSpace.range(4)
    fields = [ScalarField.of(space, values) for values in SORTED_FIELDS]
    for pattern in itertools.product((0, 1), repeat=len(EDGES)):
        L = _pattern_generator(space, pattern, rates)
        for f in fields:
            for x in range(4):
                ok, reason = check_support(L, f, x)
                assert ok, (pattern, f.values, x, reason)


@pytest.mark.slow
def test_comp_lemma_over_ten_thousand_draws(ring, random_generator):
    for L in (ring(4), random_generator(4)):
        result = sample_comp_lemma(L, FunctionGrid.integers(L.space, 3), draws=10_000, seed=17)
        assert result["draws"] == 10_000
        assert result["violations"] == []


@pytest.mark.slow
@pytest.mark.parametrize("start", [0, 4, 7])
def test_empirical_occupation_at_full_scale(z9_generator, z9_field, start):
    law = limit_distribution(z9_generator, z9_field, start)
    freq = empirical_occupation(z9_generator, z9_field, start, horizon=50.0, runs=100_000, seed=23)
    assert total_variation(law, freq) < 0.02
