from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from descentlab.errors import (
    BudgetError,
    GeneratorError,
    MetricError,
    NeighborhoodError,
    SpaceMismatchError,
)
from descentlab.finite_core import (
    FiniteSpace,
    FunctionGrid,
    MetricMatrix,
    NeighborhoodSystem,
    ScalarField,
    check_generator,
    enumerate_fields,
    validate_generator,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def test_space_rejects_duplicate_labels():
    with pytest.raises(ValueError):
        FiniteSpace.of(["a", "b", "a"])


def test_field_length_must_match_space():
    with pytest.raises(SpaceMismatchError):
        ScalarField.of(FiniteSpace.range(3), [1, 2])


def test_fields_on_different_spaces_do_not_mix():
    f = ScalarField.of(FiniteSpace.range(2), [0, 1])
    g = ScalarField.of(FiniteSpace.of(["a", "b"]), [0, 1])
    with pytest.raises(SpaceMismatchError):
        f + g


def test_clip_and_level_sets():
    f = ScalarField.of(FiniteSpace.range(4), [0, 3, 1, 3])
    assert f.clip_above(2).values == (0, 2, 1, 2)
    assert f.clip_below(2).values == (2, 3, 2, 3)
    assert f.argmin() == {0}
    assert f.level_set(lambda v: v == 3) == {1, 3}
    assert f.distinct_values() == (0, 1, 3)
    assert f.width() == 3


@pytest.mark.parametrize("rows,row,column", [
    ([["-1", "1"], ["2", "-1"]], 1, None),
    ([["1", "-1"], ["0", "0"]], 0, 1),
])
def test_generator_errors_carry_position(rows, row, column):
    ok, _, r, c = check_generator(rows)
    assert not ok and (r, c) == (row, column)
    with pytest.raises(GeneratorError) as info:
        validate_generator(rows)
    assert info.value.row == row and info.value.column == column


def test_active_system_and_apply(ring):
    L = ring(5)
    assert L.active_system()[0] == {4, 0, 1}
    f = ScalarField.of(L.space, [0, 1, 2, 3, 4])
    # L[f](0) = 1/2 (1 - 0) + 1/2 (4 - 0)
    assert L.apply(f)[0] == Fraction(5, 2)
    assert L.exit_rate(2) == 1


def test_neighborhood_must_contain_its_center():
    space = FiniteSpace.range(2)
    with pytest.raises(NeighborhoodError):
        NeighborhoodSystem(space, (frozenset({1}), frozenset({1})))


def test_metric_must_separate_points():
    space = FiniteSpace.range(2)
    with pytest.raises(MetricError):
        MetricMatrix.of(space, [[0, 0], [1, 0]])
    assert MetricMatrix.discrete(space).matrix == ((0, 1), (1, 0))


def test_grid_enumeration_is_lexicographic_and_complete():
    grid = FunctionGrid.integers(FiniteSpace.range(2), 3)
    fields = [f.values for f in enumerate_fields(grid)]
    assert len(fields) == grid.count == 9
    assert fields[:3] == [(0, 0), (0, 1), (0, 2)]
    assert len(set(fields)) == 9


def test_grid_enumeration_respects_cap():
    grid = FunctionGrid.integers(FiniteSpace.range(4), 3)
    with pytest.raises(BudgetError) as info:
        list(enumerate_fields(grid, cap=10))
    assert info.value.requested == 81 and info.value.cap == 10


@given(st.lists(small, min_size=3, max_size=3), small)
def test_shift_round_trips_exactly(values, c):
    f = ScalarField.of(FiniteSpace.range(3), values)
    assert f.shift(c).shift(-c) == f


@given(st.lists(st.fractions(min_value=0, max_value=3, max_denominator=4), min_size=9, max_size=9))
def test_generators_from_nonnegative_offdiagonals_validate(entries):
    rows = [[Fraction(0)] * 3 for _ in range(3)]
    it = iter(entries)
    for x in range(3):
        for y in range(3):
            if x != y:
                rows[x][y] = next(it)
        rows[x][x] = -sum(rows[x])
    ok, reason, _, _ = check_generator(rows)
    assert ok, reason
