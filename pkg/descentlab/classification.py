#!/usr/bin/env python3
"""
DESCENTLAB - CLASSIFICATION
Active neighborhood systems recovered from critical maps, the (Z1)-(Z5)
audit, the recursive set-reduction evaluation and the classification
verdict for homogeneous descent moduli.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from . import exact
from .axioms import AxiomReport, Verdict, check_homogeneity, field_witness
from .errors import BudgetError, ClassificationError
from .finite_core import FiniteSpace, FunctionGrid, NeighborhoodSystem, ScalarField, enumerate_fields
from .moduli_config import CONFIG
from .operators import TD, OperatorHandle

logger = logging.getLogger(__name__)

Subset = FrozenSet[int]
IndicatorTable = Mapping[Subset, Subset]


def _require_cap(space: FiniteSpace, cap: Optional[int]) -> None:
    cap = CONFIG.classification.SUBSET_CAP if cap is None else cap
    if space.size > cap:
        raise BudgetError("subset enumeration over |V|", space.size, cap)


def all_subsets(space: FiniteSpace) -> Iterator[Subset]:
    vertices = range(space.size)
    for k in range(space.size + 1):
        for combo in itertools.combinations(vertices, k):
            yield frozenset(combo)


def subsets_containing(space: FiniteSpace, x: int) -> Iterator[Subset]:
    others = [y for y in range(space.size) if y != x]
    for k in range(len(others) + 1):
        for combo in itertools.combinations(others, k):
            yield frozenset(combo) | {x}


# ============================================================================
# CRITICAL MAP ORACLE
# ============================================================================

class CriticalMapOracle:
    """
    Cached evaluator f -> Z(f), a nonempty subset of V

    Backed either by an operator (Z_T) or by a table on indicators extended
    through the recursive set reduction.
    """

    def __init__(self, space: FiniteSpace, evaluator: Callable[[ScalarField], Subset],
                 name: str, truncation_levels: Tuple[Fraction, ...] = ()):
        self.space = space
        self.name = name
        self.truncation_levels = truncation_levels
        self._evaluator = evaluator
        self._cache: Dict[Tuple[Fraction, ...], Subset] = {}

    @classmethod
    def from_operator(cls, T: OperatorHandle) -> "CriticalMapOracle":
        return cls(T.space, lambda f: T.evaluate(f).zero_set(), f"Z[{T.describe()}]",
                   T.truncation_levels())

    @classmethod
    def from_table(cls, space: FiniteSpace, table: IndicatorTable) -> "CriticalMapOracle":
        table = {frozenset(k): frozenset(v) for k, v in table.items()}
        return cls(space, lambda f: eval_Z_recursive(table, f), "Z[table]")

    def __call__(self, f: ScalarField) -> Subset:
        self.space.require_same(f.space)
        key = f.values
        if key not in self._cache:
            members = frozenset(self._evaluator(f))
            if not members:
                raise ClassificationError(f"{self.name} returned the empty set on {field_witness(f)}")
            self._cache[key] = members
        return self._cache[key]

    def on_indicator(self, K: Subset) -> Subset:
        return self(ScalarField.indicator(self.space, K))


def indicator_table(Z: CriticalMapOracle, cap: Optional[int] = None) -> Dict[Subset, Subset]:
    """Z on all 2^|V| indicators 1_K."""
    _require_cap(Z.space, cap)
    return {K: Z.on_indicator(K) for K in all_subsets(Z.space)}


# ============================================================================
# SYSTEM EXTRACTION
# ============================================================================

@dataclass(frozen=True)
class ExtractedSystem:
    """D_x as the intersection of K_x, with (H) per vertex"""

    space: FiniteSpace
    sets: Tuple[Subset, ...]
    hypothesis: Tuple[bool, ...]
    family_sizes: Tuple[int, ...]

    @property
    def holds_H(self) -> bool:
        return all(self.hypothesis)

    def failing_H(self) -> List[Any]:
        return [self.space.labels[x] for x, ok in enumerate(self.hypothesis) if not ok]

    def to_system(self) -> NeighborhoodSystem:
        return NeighborhoodSystem(self.space, self.sets)

    def to_labels(self) -> Dict[Any, list]:
        return {label: self.space.label_set(self.sets[x]) for x, label in enumerate(self.space.labels)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "neighborhoods": {str(k): v for k, v in self.to_labels().items()},
            "hypothesis_H": {str(self.space.labels[x]): ok for x, ok in enumerate(self.hypothesis)},
        }


def _family(Z: CriticalMapOracle, x: int) -> List[Subset]:
    return [K for K in subsets_containing(Z.space, x) if x in Z.on_indicator(K)]


def extract_system(Z: CriticalMapOracle, cap: Optional[int] = None) -> ExtractedSystem:
    """
    K_x = {K containing x : x in Z(1_K)} and D_x = intersection of K_x.
    An empty K_x yields D_x = V with (H) failing.
    """
    _require_cap(Z.space, cap)
    everything = frozenset(range(Z.space.size))
    sets, hypothesis, sizes = [], [], []
    for x in range(Z.space.size):
        family = _family(Z, x)
        D_x = frozenset.intersection(*family) if family else everything
        sets.append(D_x)
        sizes.append(len(family))
        hypothesis.append(bool(family) and x in Z.on_indicator(D_x))
    extracted = ExtractedSystem(Z.space, tuple(sets), tuple(hypothesis), tuple(sizes))
    if not extracted.holds_H:
        logger.warning("%s: (H) fails at %s", Z.name, extracted.failing_H())
    return extracted


# ============================================================================
# RECURSIVE EVALUATION
# ============================================================================

def eval_Z_recursive(table: IndicatorTable, f: ScalarField) -> Subset:
    """
    Extend an indicator table to every field: constants through Z(1_V),
    two-valued fields through Z(1_[f = max f]), and otherwise split at the
    median value r = f_k, k = floor((n+1)/2), into min(r, f) and max(r, f).
    """
    values = f.distinct_values()
    n = len(values)

    def lookup(K: Subset) -> Subset:
        try:
            return frozenset(table[K])
        except KeyError:
            raise ClassificationError(f"indicator table has no entry for {sorted(K)}") from None

    if n == 1:
        return lookup(frozenset(range(f.space.size)))
    if n == 2:
        return lookup(f.level_set(lambda v: v == values[1]))
    r = values[(n + 1) // 2 - 1]
    low = eval_Z_recursive(table, f.clip_above(r))
    high = eval_Z_recursive(table, f.clip_below(r))
    return (low & f.level_set(lambda v: v <= r)) | (high & f.level_set(lambda v: v > r))


# ============================================================================
# Z AXIOMS
# ============================================================================

@dataclass
class ZAxiomsReport:
    critical_map: str
    reports: List[AxiomReport]

    @property
    def holds_all(self) -> bool:
        return all(r.holds for r in self.reports)

    def report(self, axiom: str) -> AxiomReport:
        for r in self.reports:
            if r.axiom == axiom:
                return r
        raise KeyError(axiom)

    def failing(self) -> List[str]:
        return [r.axiom for r in self.reports if not r.holds]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "critical_map": self.critical_map,
            "holds_all": self.holds_all,
            "reports": [r.to_dict() for r in self.reports],
        }


def _z_holds(axiom: str, checked: int) -> AxiomReport:
    logger.info("%s holds on grid (%d checks)", axiom, checked)
    return AxiomReport(axiom, Verdict.HOLDS_ON_GRID, checked)


def _z_fails(axiom: str, checked: int, witness: Dict[str, Any]) -> AxiomReport:
    logger.warning("%s fails: %s", axiom, witness)
    return AxiomReport(axiom, Verdict.FAILS, checked, witness)


def _labels(space: FiniteSpace, members: Subset) -> list:
    return space.label_set(members)


def check_Z1(Z: CriticalMapOracle, fields: Sequence[ScalarField], cset: Sequence[Fraction]) -> AxiomReport:
    checked = 0
    for f in fields:
        for c in cset:
            checked += 1
            if Z(f.shift(c)) != Z(f):
                return _z_fails("Z1", checked, {"f": field_witness(f), "c": exact.format_rational(Fraction(c))})
    return _z_holds("Z1", checked)


def check_Z2(Z: CriticalMapOracle, fields: Sequence[ScalarField], rset: Sequence[Fraction],
             eps_probes: Sequence[Fraction] = ()) -> AxiomReport:
    """
    Probe-major: every field is first scaled by eps / (max f - min f) for
    each truncation level eps below its width, then by the fixed probes.
    """
    checked = 0
    for eps in eps_probes:
        for f in fields:
            alpha = f.width()
            if alpha <= eps:
                continue
            r = Fraction(eps) / alpha
            checked += 1
            if Z(f.scale(r)) != Z(f):
                return _z_fails("Z2", checked, {"f": field_witness(f), "r": exact.format_rational(r),
                                                "eps": exact.format_rational(Fraction(eps))})
    for r in rset:
        r = Fraction(r)
        for f in fields:
            checked += 1
            if Z(f.scale(r)) != Z(f):
                return _z_fails("Z2", checked, {"f": field_witness(f), "r": exact.format_rational(r)})
    return _z_holds("Z2", checked)


def check_Z3(Z: CriticalMapOracle, fields: Sequence[ScalarField], levels: Sequence[Fraction]) -> AxiomReport:
    checked = 0
    for f in fields:
        for r in levels:
            checked += 1
            split = (Z(f.clip_above(r)) & f.level_set(lambda v: v <= r)) | \
                    (Z(f.clip_below(r)) & f.level_set(lambda v: v > r))
            if split != Z(f):
                return _z_fails("Z3", checked, {
                    "f": field_witness(f),
                    "r": exact.format_rational(r),
                    "Z_f": _labels(Z.space, Z(f)),
                    "split": _labels(Z.space, split),
                })
    return _z_holds("Z3", checked)


def check_Z4(Z: CriticalMapOracle) -> AxiomReport:
    everything = frozenset(range(Z.space.size))
    checked = 0
    for K in all_subsets(Z.space):
        checked += 1
        missing = (everything - K) - Z.on_indicator(K)
        if missing:
            return _z_fails("Z4", checked, {"K": _labels(Z.space, K), "x": _labels(Z.space, missing)[0]})
    return _z_holds("Z4", checked)


def check_Z5(Z: CriticalMapOracle, extracted: ExtractedSystem) -> AxiomReport:
    """K_x must be exactly the supersets of D_x."""
    checked = 0
    for x in range(Z.space.size):
        D_x = extracted.sets[x]
        for K in subsets_containing(Z.space, x):
            checked += 1
            if (x in Z.on_indicator(K)) != (D_x <= K):
                return _z_fails("Z5", checked, {
                    "x": Z.space.labels[x],
                    "K": _labels(Z.space, K),
                    "D_x": _labels(Z.space, D_x),
                })
    return _z_holds("Z5", checked)


def check_Z_axioms(Z: CriticalMapOracle, grid: FunctionGrid, rset: Optional[Sequence[Fraction]] = None,
                   cset: Optional[Sequence[Fraction]] = None, eps_probes: Optional[Sequence[Fraction]] = None,
                   cap: Optional[int] = None) -> ZAxiomsReport:
    """
    (Z1)-(Z5) over the grid (Z1-Z3) and over all subsets (Z4, Z5)

    Args:
        rset: positive scalings for Z2 (configured probes by default)
        cset: shifts for Z1 (audit shift set by default)
        eps_probes: truncation levels for the eps / width probe (from the operator by default)
    """
    _require_cap(Z.space, cap)
    Z.space.require_same(grid.space)
    rset = tuple(CONFIG.classification.Z2_PROBES if rset is None else rset)
    cset = tuple(CONFIG.audit.SHIFT_SET if cset is None else cset)
    eps_probes = tuple(Z.truncation_levels if eps_probes is None else eps_probes)
    fields = list(enumerate_fields(grid))
    extracted = extract_system(Z, cap)
    reports = [
        check_Z1(Z, fields, cset),
        check_Z2(Z, fields, rset, eps_probes),
        check_Z3(Z, fields, grid.value_set),
        check_Z4(Z),
        check_Z5(Z, extracted),
    ]
    return ZAxiomsReport(Z.name, reports)


# ============================================================================
# CLASSIFY
# ============================================================================

def critical_map_enlarges(Z: CriticalMapOracle, D: NeighborhoodSystem, grid: FunctionGrid) -> Tuple[bool, str]:
    """Z_{T_D}(f) contains Z(f) on every grid field."""
    T = TD(D)
    for f in enumerate_fields(grid):
        lost = Z(f) - T.evaluate(f).zero_set()
        if lost:
            return False, f"Z_TD misses {_labels(Z.space, lost)} on {field_witness(f)}"
    return True, "ok"


@dataclass
class ClassificationVerdict:
    operator: str
    extracted: ExtractedSystem
    classifiable: bool
    certified: bool
    checked: int = 0
    counterexample: Optional[Dict[str, Any]] = None
    enlargement: Optional[Tuple[bool, str]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "operator": self.operator,
            "classifiable": self.classifiable,
            "certified": self.certified,
            "checked": self.checked,
            "counterexample": self.counterexample,
            "hypothesis_H_fails_at": [str(x) for x in self.extracted.failing_H()],
        }
        out.update(self.extracted.to_dict())
        if self.enlargement is not None:
            out["enlarges"] = {"ok": self.enlargement[0], "reason": self.enlargement[1]}
        out.update(self.details)
        return out


def classify(T: OperatorHandle, grid: FunctionGrid, cap: Optional[int] = None) -> ClassificationVerdict:
    """
    Certify T ~ T_D for the extracted D

    Raises:
        ClassificationError: T is not 1-homogeneous on the grid
    """
    homogeneity = check_homogeneity(T, grid, 1)
    if not homogeneity.holds:
        raise ClassificationError(f"{T.describe()} is not 1-homogeneous on the grid: {homogeneity.witness}")
    Z = CriticalMapOracle.from_operator(T)
    extracted = extract_system(Z, cap)
    if not extracted.holds_H:
        enlargement = critical_map_enlarges(Z, extracted.to_system(), grid)
        return ClassificationVerdict(T.describe(), extracted, False, False, enlargement=enlargement)

    reference = TD(extracted.to_system())
    checked = 0
    for f in enumerate_fields(grid):
        checked += 1
        ours, theirs = Z(f), reference.evaluate(f).zero_set()
        if ours != theirs:
            logger.error("%s differs from Z_TD on %s", Z.name, f.values)
            return ClassificationVerdict(T.describe(), extracted, True, False, checked, {
                "f": field_witness(f),
                "Z_T": _labels(T.space, ours),
                "Z_TD": _labels(T.space, theirs),
            })
    logger.info("%s certified equivalent to T_D over %d fields", T.describe(), checked)
    return ClassificationVerdict(T.describe(), extracted, True, True, checked)
