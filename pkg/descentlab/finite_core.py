#!/usr/bin/env python3
"""
DESCENTLAB - FINITE CORE
Exact domain types for finite state spaces: vertices, functions, generators,
neighborhood systems, metrics, measures and enumerable function grids.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Hashable, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

from .errors import BudgetError, GeneratorError, MetricError, NeighborhoodError, SpaceMismatchError
from .exact import INF, Value, format_value, is_zero, parse_rational
from .moduli_config import CONFIG

logger = logging.getLogger(__name__)

Label = Hashable
Matrix = Tuple[Tuple[Fraction, ...], ...]


def _as_matrix(rows: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(parse_rational(v) for v in row) for row in rows)


def _require_square(rows: Matrix, size: int, what: str) -> None:
    if len(rows) != size or any(len(row) != size for row in rows):
        raise SpaceMismatchError(f"{what} must be {size}x{size}")


# ============================================================================
# SPACE AND FUNCTIONS
# ============================================================================

@dataclass(frozen=True)
class FiniteSpace:
    """Ordered, labeled vertex set V"""

    labels: Tuple[Label, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate vertex labels in {self.labels!r}")
        if not self.labels:
            raise ValueError("a space needs at least one vertex")
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(self.labels)})

    @classmethod
    def of(cls, labels: Iterable[Label]) -> "FiniteSpace":
        return cls(tuple(labels))

    @classmethod
    def range(cls, n: int) -> "FiniteSpace":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: Label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown vertex {label!r}") from None

    def indices(self, labels: Iterable[Label]) -> frozenset:
        return frozenset(self.index(label) for label in labels)

    def label_set(self, indices: Iterable[int]) -> list:
        return [self.labels[i] for i in sorted(indices)]

    def require_same(self, other: "FiniteSpace") -> None:
        if other != self:
            raise SpaceMismatchError(f"space {other.labels!r} differs from {self.labels!r}")


@dataclass(frozen=True)
class ScalarField:
    """Exact rational function f on a FiniteSpace"""

    space: FiniteSpace
    values: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.values) != self.space.size:
            raise SpaceMismatchError(
                f"{len(self.values)} values for a space of {self.space.size} vertices"
            )

    @classmethod
    def of(cls, space: FiniteSpace, values: Iterable) -> "ScalarField":
        return cls(space, tuple(parse_rational(v) for v in values))

    @classmethod
    def from_mapping(cls, space: FiniteSpace, mapping: Mapping[Label, object]) -> "ScalarField":
        return cls.of(space, (mapping[label] for label in space.labels))

    @classmethod
    def constant(cls, space: FiniteSpace, c=0) -> "ScalarField":
        return cls.of(space, [c] * space.size)

    @classmethod
    def indicator(cls, space: FiniteSpace, members: Iterable[int]) -> "ScalarField":
        """1_K for a subset K given by vertex indices."""
        members = frozenset(members)
        return cls(space, tuple(Fraction(1 if i in members else 0) for i in range(space.size)))

    def __getitem__(self, i: int) -> Fraction:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)

    def at(self, label: Label) -> Fraction:
        return self.values[self.space.index(label)]

    def shift(self, c) -> "ScalarField":
        c = Fraction(c)
        return ScalarField(self.space, tuple(v + c for v in self.values))

    def scale(self, r) -> "ScalarField":
        r = Fraction(r)
        return ScalarField(self.space, tuple(r * v for v in self.values))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self.space.require_same(other.space)
        return ScalarField(self.space, tuple(a + b for a, b in zip(self.values, other.values)))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self.space.require_same(other.space)
        return ScalarField(self.space, tuple(a - b for a, b in zip(self.values, other.values)))

    def clip_above(self, r) -> "ScalarField":
        """min(r, f)"""
        r = Fraction(r)
        return ScalarField(self.space, tuple(min(r, v) for v in self.values))

    def clip_below(self, r) -> "ScalarField":
        """max(r, f)"""
        r = Fraction(r)
        return ScalarField(self.space, tuple(max(r, v) for v in self.values))

    def minimum(self) -> Fraction:
        return min(self.values)

    def maximum(self) -> Fraction:
        return max(self.values)

    def width(self) -> Fraction:
        return self.maximum() - self.minimum()

    def argmin(self) -> frozenset:
        low = self.minimum()
        return frozenset(i for i, v in enumerate(self.values) if v == low)

    def level_set(self, predicate) -> frozenset:
        return frozenset(i for i, v in enumerate(self.values) if predicate(v))

    def distinct_values(self) -> Tuple[Fraction, ...]:
        return tuple(sorted(set(self.values)))

    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    def dominates(self, other: "ScalarField", on: Optional[Iterable[int]] = None, c=0) -> bool:
        """f >= g + c on the given vertices (all of V by default)."""
        c = Fraction(c)
        vertices = range(self.space.size) if on is None else on
        return all(self.values[i] >= other.values[i] + c for i in vertices)

    def agrees_with(self, other: "ScalarField", on: Iterable[int]) -> bool:
        return all(self.values[i] == other.values[i] for i in on)

    def to_labels(self) -> Dict[Label, str]:
        return {label: format_value(v) for label, v in zip(self.space.labels, self.values)}


@dataclass(frozen=True)
class ExtendedField:
    """Per-vertex extended nonnegative values T[f]"""

    space: FiniteSpace
    values: Tuple[Value, ...]

    def __getitem__(self, i: int) -> Value:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)

    def at(self, label: Label) -> Value:
        return self.values[self.space.index(label)]

    def zero_set(self) -> frozenset:
        return frozenset(i for i, v in enumerate(self.values) if is_zero(v))

    def is_finite(self) -> bool:
        return all(v is not INF for v in self.values)

    def to_labels(self) -> Dict[Label, str]:
        return {label: format_value(v) for label, v in zip(self.space.labels, self.values)}


# ============================================================================
# GENERATORS, SYSTEMS, METRICS, MEASURES
# ============================================================================

def check_generator(rows: Sequence[Sequence]) -> Tuple[bool, str, Optional[int], Optional[int]]:
    """
    Check Markov generator constraints

    Returns:
        (is_valid, reason, row, column) with the first violating position
    """
    matrix = _as_matrix(rows)
    n = len(matrix)
    for i, row in enumerate(matrix):
        if len(row) != n:
            return False, f"row {i} has {len(row)} entries, expected {n}", i, None
    for i, row in enumerate(matrix):
        for j, entry in enumerate(row):
            if i != j and entry < 0:
                return False, f"negative off-diagonal entry L[{i}][{j}] = {entry}", i, j
        total = sum(row, Fraction(0))
        if total != 0:
            return False, f"row {i} sums to {total}, expected 0", i, None
    return True, "ok", None, None


@dataclass(frozen=True)
class Generator:
    """Markov generator L: nonnegative off-diagonals, zero row sums"""

    space: FiniteSpace
    matrix: Matrix

    def rate(self, x: int, y: int) -> Fraction:
        return self.matrix[x][y]

    def successors(self, x: int) -> Tuple[int, ...]:
        return tuple(y for y, v in enumerate(self.matrix[x]) if y != x and v > 0)

    def exit_rate(self, x: int) -> Fraction:
        return -self.matrix[x][x]

    def apply(self, g: ScalarField) -> Tuple[Fraction, ...]:
        """L[g](x) = sum_y L(x,y) (g(y) - g(x))"""
        self.space.require_same(g.space)
        return tuple(
            sum((rate * (g[y] - g[x]) for y, rate in enumerate(row) if y != x), Fraction(0))
            for x, row in enumerate(self.matrix)
        )

    def active_system(self) -> "NeighborhoodSystem":
        """D_x = {x} together with every y reached at positive rate."""
        return NeighborhoodSystem(
            self.space,
            tuple(frozenset((x,) + self.successors(x)) for x in range(self.space.size)),
        )

    def off_diagonal(self) -> "MeasureMatrix":
        return MeasureMatrix(
            self.space,
            tuple(
                tuple(v if x != y else Fraction(0) for y, v in enumerate(row))
                for x, row in enumerate(self.matrix)
            ),
        )

    def to_rows(self) -> list:
        return [[format_value(v) for v in row] for row in self.matrix]


def validate_generator(rows: Sequence[Sequence], space: Optional[FiniteSpace] = None) -> Generator:
    """Build a Generator or raise GeneratorError at the first violation."""
    ok, reason, row, column = check_generator(rows)
    if not ok:
        raise GeneratorError(reason, row, column)
    matrix = _as_matrix(rows)
    space = space or FiniteSpace.range(len(matrix))
    _require_square(matrix, space.size, "generator")
    return Generator(space, matrix)


def generator_from_rates(space: FiniteSpace, rates: Mapping[Tuple[int, int], object]) -> Generator:
    """Generator with the given off-diagonal rates and diagonal set to minus the row sum."""
    n = space.size
    rows = [[Fraction(0)] * n for _ in range(n)]
    for (x, y), rate in rates.items():
        if x != y:
            rows[x][y] = parse_rational(rate)
    for x in range(n):
        rows[x][x] = -sum(rows[x], Fraction(0))
    return validate_generator(rows, space)


@dataclass(frozen=True)
class NeighborhoodSystem:
    """Active neighborhood system D with x in D_x"""

    space: FiniteSpace
    sets: Tuple[frozenset, ...]

    def __post_init__(self):
        if len(self.sets) != self.space.size:
            raise SpaceMismatchError("one neighborhood per vertex is required")
        for x, members in enumerate(self.sets):
            if x not in members:
                raise NeighborhoodError(f"vertex {self.space.labels[x]!r} missing from its own D_x")

    @classmethod
    def from_labels(cls, space: FiniteSpace, mapping: Mapping[Label, Iterable[Label]]) -> "NeighborhoodSystem":
        sets = []
        for x, label in enumerate(space.labels):
            members = set(space.indices(mapping.get(label, ())))
            members.add(x)
            sets.append(frozenset(members))
        return cls(space, tuple(sets))

    @classmethod
    def full(cls, space: FiniteSpace) -> "NeighborhoodSystem":
        everything = frozenset(range(space.size))
        return cls(space, tuple(everything for _ in range(space.size)))

    @classmethod
    def trivial(cls, space: FiniteSpace) -> "NeighborhoodSystem":
        return cls(space, tuple(frozenset((x,)) for x in range(space.size)))

    def __getitem__(self, x: int) -> frozenset:
        return self.sets[x]

    def to_labels(self) -> Dict[Label, list]:
        return {label: self.space.label_set(self.sets[x]) for x, label in enumerate(self.space.labels)}


@dataclass(frozen=True)
class MetricMatrix:
    """Separating nonnegative cost m(x,y); symmetry not required"""

    space: FiniteSpace
    matrix: Matrix

    def __post_init__(self):
        _require_square(self.matrix, self.space.size, "metric")
        for x, row in enumerate(self.matrix):
            for y, value in enumerate(row):
                if value < 0:
                    raise MetricError(f"negative metric entry m[{x}][{y}]")
                if (value == 0) != (x == y):
                    raise MetricError(f"separation fails at m[{x}][{y}] = {value}")

    @classmethod
    def of(cls, space: FiniteSpace, rows: Sequence[Sequence]) -> "MetricMatrix":
        return cls(space, _as_matrix(rows))

    @classmethod
    def discrete(cls, space: FiniteSpace) -> "MetricMatrix":
        n = space.size
        return cls(space, tuple(tuple(Fraction(int(x != y)) for y in range(n)) for x in range(n)))


@dataclass(frozen=True)
class MeasureMatrix:
    """Row x holds the point masses of mu_x"""

    space: FiniteSpace
    matrix: Matrix

    def __post_init__(self):
        _require_square(self.matrix, self.space.size, "measure")
        for x, row in enumerate(self.matrix):
            for y, value in enumerate(row):
                if value < 0:
                    raise ValueError(f"negative mass mu[{x}][{y}]")

    @classmethod
    def of(cls, space: FiniteSpace, rows: Sequence[Sequence]) -> "MeasureMatrix":
        return cls(space, _as_matrix(rows))


# ============================================================================
# FUNCTION GRIDS
# ============================================================================

@dataclass(frozen=True)
class FunctionGrid:
    """All functions V -> valueSet, enumerated in lexicographic order"""

    space: FiniteSpace
    value_set: Tuple[Fraction, ...]

    def __post_init__(self):
        values = tuple(sorted(set(parse_rational(v) for v in self.value_set)))
        if not values:
            raise ValueError("a function grid needs at least one value")
        object.__setattr__(self, "value_set", values)

    @classmethod
    def integers(cls, space: FiniteSpace, g: Optional[int] = None) -> "FunctionGrid":
        g = CONFIG.enumeration.DEFAULT_GRID_SIZE if g is None else g
        return cls(space, tuple(Fraction(i) for i in range(g)))

    @property
    def count(self) -> int:
        return len(self.value_set) ** self.space.size

    @property
    def width(self) -> Fraction:
        return self.value_set[-1] - self.value_set[0]


def enumerate_fields(grid: FunctionGrid, cap: Optional[int] = None) -> Iterator[ScalarField]:
    """Yield every field of the grid exactly once, last vertex varying fastest."""
    cap = CONFIG.enumeration.FIELD_CAP if cap is None else cap
    if grid.count > cap:
        raise BudgetError("function grid enumeration", grid.count, cap)
    logger.debug("enumerating %d fields over %d vertices", grid.count, grid.space.size)
    for values in itertools.product(grid.value_set, repeat=grid.space.size):
        yield ScalarField(grid.space, values)
