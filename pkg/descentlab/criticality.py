#!/usr/bin/env python3
"""
DESCENTLAB - CRITICALITY
Critical sets Z_T(f), the descent preorder of (L, f), its minima M(f) and
brute-force oracles for the comparison and determination theorems.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np

from . import exact
from .axioms import audit, evaluate_grid, field_witness
from .finite_core import FunctionGrid, Generator, ScalarField, enumerate_fields
from .operators import TL, OperatorHandle

logger = logging.getLogger(__name__)


# ============================================================================
# CRITICAL SETS
# ============================================================================

@dataclass(frozen=True)
class CriticalSet:
    """Z_T(f) = {x : T[f](x) = 0} as vertex indices"""

    space: Any
    members: FrozenSet[int]

    def labels(self) -> list:
        return self.space.label_set(self.members)

    def __contains__(self, x: int) -> bool:
        return x in self.members

    def __len__(self) -> int:
        return len(self.members)


def critical_set(T: OperatorHandle, f: ScalarField) -> CriticalSet:
    """Exact zero set; INF entries are not zeros."""
    return CriticalSet(f.space, T.evaluate(f).zero_set())


# ============================================================================
# DESCENT ORDER
# ============================================================================

class DescentOrder:
    """
    Reachability along L^f-paths: x -> y recorded when L(x,y) > 0 and
    f(y) <= f(x). Every vertex reaches itself through the empty path.
    """

    def __init__(self, L: Generator, f: ScalarField):
        L.space.require_same(f.space)
        self.space = L.space
        self.field = f
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(range(self.space.size))
        for x in range(self.space.size):
            for y in L.successors(x):
                if f[y] <= f[x]:
                    self.graph.add_edge(x, y)
        self.condensation = nx.condensation(self.graph)
        self._component = self.condensation.graph["mapping"]
        self._reach = {x: nx.descendants(self.graph, x) | {x} for x in self.graph.nodes}

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return sorted(self.graph.edges)

    def reaches(self, x: int, y: int) -> bool:
        """x succeeds-or-equals y under the f-descent preorder"""
        return y in self._reach[x]

    def reachable(self, x: int) -> frozenset:
        return frozenset(self._reach[x])

    def equivalent(self, x: int, y: int) -> bool:
        return self._component[x] == self._component[y]

    def components(self) -> List[FrozenSet[int]]:
        return [frozenset(self.condensation.nodes[c]["members"]) for c in self.condensation.nodes]

    def sink_components(self) -> List[FrozenSet[int]]:
        return [
            frozenset(self.condensation.nodes[c]["members"])
            for c in self.condensation.nodes
            if self.condensation.out_degree(c) == 0
        ]

    def path(self, x: int, y: int) -> Optional[List[int]]:
        try:
            return nx.shortest_path(self.graph, x, y)
        except nx.NetworkXNoPath:
            return None

    def is_monotone(self) -> Tuple[bool, str]:
        for x, y in self.graph.edges:
            if self.field[y] > self.field[x]:
                return False, f"edge {x}->{y} climbs"
        return True, "ok"


def descent_order(L: Generator, f: ScalarField) -> DescentOrder:
    return DescentOrder(L, f)


def minima_set(L: Generator, f: ScalarField) -> frozenset:
    """M(f): vertices all of whose reachable vertices reach them back."""
    order = DescentOrder(L, f)
    members = set()
    for component in order.sink_components():
        members |= component
    return frozenset(members)


# ============================================================================
# DETERMINATION
# ============================================================================

@dataclass
class DeterminationViolation:
    f: ScalarField
    g: ScalarField
    agreement_set: FrozenSet[int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "f": field_witness(self.f),
            "g": field_witness(self.g),
            "agreement_set": self.f.space.label_set(self.agreement_set),
        }


@dataclass
class DeterminationReport:
    operator: str
    pairs: int
    compared: int
    skipped_infinite: int
    violations: List[DeterminationViolation] = field(default_factory=list)
    audit_passed: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "operator": self.operator,
            "pairs": self.pairs,
            "compared": self.compared,
            "skipped_infinite": self.skipped_infinite,
            "violation_count": len(self.violations),
            "violations": [v.to_dict() for v in self.violations],
            "audit_passed": self.audit_passed,
        }


def _signature(values) -> tuple:
    return tuple(exact.value_key(v) for v in values)


def _same_values(a, b) -> bool:
    return all(exact.equal(v, w) for v, w in zip(a, b))


def _bucketed(evaluations):
    buckets = defaultdict(list)
    skipped = 0
    for f, values in evaluations:
        if any(v is exact.INF for v in values):
            skipped += 1
            continue
        buckets[_signature(values)].append((f, values))
    return buckets, skipped


def check_determination(T: OperatorHandle, grid: FunctionGrid, cap: Optional[int] = None,
                        require_audit: bool = False) -> DeterminationReport:
    """
    Flag every grid pair with T[f] = T[g], f = g on Z_T(f) and f != g.

    Fields are bucketed by the signature of T[f]; a pair inside a bucket is
    compared only once exact.equal confirms the operator values agree.
    Fields with an INF value lie outside dom(T).
    """
    audit_passed = None
    if require_audit:
        audit_passed = audit(T, grid, cap=cap).is_modulus_on_grid
        if not audit_passed:
            logger.warning("%s does not pass D1-D3 on the grid", T.describe())
    evaluations = evaluate_grid(T, grid, cap)
    buckets, skipped = _bucketed(evaluations)
    n = len(evaluations)
    report = DeterminationReport(T.describe(), n * (n + 1) // 2, 0, skipped, audit_passed=audit_passed)
    for members in buckets.values():
        for i, (f, values) in enumerate(members):
            zeros = frozenset(x for x, v in enumerate(values) if exact.is_zero(v))
            for g, other in members[i + 1:]:
                if not _same_values(values, other):
                    continue
                report.compared += 1
                if f.agrees_with(g, zeros):
                    report.violations.append(DeterminationViolation(f, g, zeros))
    logger.info("determination: %d violations over %d pairs", len(report.violations), report.pairs)
    return report


def check_probabilistic_determination(L: Generator, grid: FunctionGrid,
                                      cap: Optional[int] = None) -> DeterminationReport:
    """As check_determination for T_L with the agreement set M(f) | M(g)."""
    T = TL(L)
    evaluations = evaluate_grid(T, grid, cap)
    buckets, skipped = _bucketed(evaluations)
    n = len(evaluations)
    report = DeterminationReport("TL/probabilistic", n * (n + 1) // 2, 0, skipped)
    minima: Dict[Tuple[Fraction, ...], frozenset] = {}

    def m_of(f: ScalarField) -> frozenset:
        if f.values not in minima:
            minima[f.values] = minima_set(L, f)
        return minima[f.values]

    for members in buckets.values():
        for i, (f, values) in enumerate(members):
            for g, other in members[i + 1:]:
                if not _same_values(values, other):
                    continue
                report.compared += 1
                agreement = m_of(f) | m_of(g)
                if f.agrees_with(g, agreement):
                    report.violations.append(DeterminationViolation(f, g, agreement))
    logger.info("probabilistic determination: %d violations", len(report.violations))
    return report


# ============================================================================
# COMPARISON
# ============================================================================

class ComparisonVerdict(Enum):
    HYPOTHESES_FAIL = "hypotheses-fail"
    CONCLUSION_HOLDS = "conclusion-holds"
    THEOREM_VIOLATION = "THEOREM-VIOLATION"


def check_comparison(T: OperatorHandle, f: ScalarField, g: ScalarField, c=0) -> ComparisonVerdict:
    """
    (i) T[f] >= T[g] pointwise and (ii) f >= g + c on Z_T(f) must give
    f >= g + c everywhere.
    """
    c = Fraction(c)
    tf, tg = T.evaluate(f), T.evaluate(g)
    if any(exact.compare(a, b) < 0 for a, b in zip(tf.values, tg.values)):
        return ComparisonVerdict.HYPOTHESES_FAIL
    if not f.dominates(g, tf.zero_set(), c):
        return ComparisonVerdict.HYPOTHESES_FAIL
    if f.dominates(g, None, c):
        return ComparisonVerdict.CONCLUSION_HOLDS
    logger.error("comparison violated by %s: f=%s g=%s c=%s", T.describe(), f.values, g.values, c)
    return ComparisonVerdict.THEOREM_VIOLATION


def sample_comparisons(T: OperatorHandle, grid: FunctionGrid, samples: int, seed: int,
                       shifts=(0, -1, 1)) -> Dict[str, Any]:
    """Tally comparison verdicts over seeded random grid pairs."""
    fields = list(enumerate_fields(grid))
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(fields), size=(samples, 2))
    shift_picks = rng.integers(0, len(shifts), size=samples)
    tally = {v.value: 0 for v in ComparisonVerdict}
    witnesses = []
    for (i, j), k in zip(picks, shift_picks):
        verdict = check_comparison(T, fields[i], fields[j], shifts[k])
        tally[verdict.value] += 1
        if verdict is ComparisonVerdict.THEOREM_VIOLATION and len(witnesses) < 10:
            witnesses.append({"f": field_witness(fields[i]), "g": field_witness(fields[j]), "c": str(shifts[k])})
    return {"samples": samples, "seed": seed, "tally": tally, "witnesses": witnesses}
