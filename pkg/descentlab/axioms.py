#!/usr/bin/env python3
"""
DESCENTLAB - AXIOM AUDITS
Exhaustive grid audits of an operator against the descent-modulus axioms:
minima preservation (D1), monotonicity (D2) with its one-step form, scalar
monotonicity (D3) with its continuous form, translation invariance and
p-homogeneity. Grid-level success is reported as "holds-on-grid".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from . import exact
from .exact import INF, Value
from .finite_core import FunctionGrid, ScalarField, enumerate_fields
from .moduli_config import CONFIG
from .operators import OperatorHandle

logger = logging.getLogger(__name__)

GridEvaluation = List[Tuple[ScalarField, Tuple[Value, ...]]]


class Verdict(Enum):
    HOLDS_ON_GRID = "holds-on-grid"
    FAILS = "fails"


@dataclass
class AxiomReport:
    """Verdict for one axiom; a failure always carries a re-checkable witness"""

    axiom: str
    verdict: Verdict
    checked: int = 0
    witness: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS_ON_GRID

    def to_dict(self) -> Dict[str, Any]:
        return {
            "axiom": self.axiom,
            "verdict": self.verdict.value,
            "checked": self.checked,
            "witness": self.witness,
            "details": self.details,
        }


def _holds(axiom: str, checked: int, **details) -> AxiomReport:
    logger.info("%s holds on grid (%d checks)", axiom, checked)
    return AxiomReport(axiom, Verdict.HOLDS_ON_GRID, checked, None, details)


def _fails(axiom: str, checked: int, witness: Dict[str, Any], **details) -> AxiomReport:
    logger.warning("%s fails: %s", axiom, witness)
    return AxiomReport(axiom, Verdict.FAILS, checked, witness, details)


def field_witness(f: ScalarField) -> Dict[str, str]:
    return {str(k): v for k, v in f.to_labels().items()}


def evaluate_grid(T: OperatorHandle, grid: FunctionGrid, cap: Optional[int] = None) -> GridEvaluation:
    """T[f] for every grid field, in enumeration order."""
    T.space.require_same(grid.space)
    return [(f, T.evaluate(f).values) for f in enumerate_fields(grid, cap)]


def _scaled(f: ScalarField, r: Fraction) -> ScalarField:
    return f.scale(r)


# ============================================================================
# D1
# ============================================================================

def check_D1(T: OperatorHandle, grid: FunctionGrid, cap: Optional[int] = None,
             evaluations: Optional[GridEvaluation] = None) -> AxiomReport:
    """x in argmin f implies T[f](x) = 0. Witness order is vertex-major."""
    evaluations = evaluations if evaluations is not None else evaluate_grid(T, grid, cap)
    minima = [f.argmin() for f, _ in evaluations]
    checked = 0
    for x in range(grid.space.size):
        for (f, values), argmin in zip(evaluations, minima):
            if x not in argmin:
                continue
            checked += 1
            if not exact.is_zero(values[x]):
                return _fails("D1", checked, {
                    "f": field_witness(f),
                    "x": grid.space.labels[x],
                    "value": exact.format_value(values[x]),
                })
    return _holds("D1", checked)


# ============================================================================
# D2
# ============================================================================

@dataclass
class _Group:
    """Fields sharing the same difference vector d(z) = f(x) - f(z) at x."""

    low: Value
    high: Value
    low_field: ScalarField
    high_field: ScalarField

    def absorb(self, f: ScalarField, v: Value) -> None:
        if exact.compare(v, self.low) < 0:
            self.low, self.low_field = v, f
        if exact.compare(v, self.high) > 0:
            self.high, self.high_field = v, f


def _groups_at(x: int, evaluations: GridEvaluation) -> Dict[Tuple[Fraction, ...], _Group]:
    groups: Dict[Tuple[Fraction, ...], _Group] = {}
    for f, values in evaluations:
        key = tuple(f[x] - fz for fz in f.values)
        v = values[x]
        group = groups.get(key)
        if group is None:
            groups[key] = _Group(v, v, f, f)
        else:
            group.absorb(f, v)
    return groups


def _dominates(p: Tuple[Fraction, ...], q: Tuple[Fraction, ...]) -> bool:
    """(p)+ >= (q)+ componentwise"""
    return all(max(a, 0) >= max(b, 0) for a, b in zip(p, q))


def _one_step(p: Tuple[Fraction, ...], q: Tuple[Fraction, ...]) -> bool:
    """exists z with f(z) < f(x) and f(x) - f(z) > g(x) - g(z)"""
    return any(a > 0 and a > b for a, b in zip(p, q))


def check_D2(T: OperatorHandle, grid: FunctionGrid, cap: Optional[int] = None,
             evaluations: Optional[GridEvaluation] = None) -> AxiomReport:
    """
    Monotonicity: (f(x)-f(z))+ >= (g(x)-g(z))+ for all z implies T[f](x) >= T[g](x).

    Fields are grouped by their difference vector at x (T[f](x) may only
    depend on it once D2 holds), so pairs of groups stand for all grid pairs.
    Every strict gap T[f](x) > T[g](x) is also checked against the one-step
    descent form.
    """
    evaluations = evaluations if evaluations is not None else evaluate_grid(T, grid, cap)
    space = grid.space
    checked = 0
    one_step_checked = 0
    for x in range(space.size):
        groups = list(_groups_at(x, evaluations).items())
        for p, gp in groups:
            for q, gq in groups:
                if _dominates(p, q):
                    checked += 1
                    if exact.compare(gp.low, gq.high) < 0:
                        return _fails("D2", checked, {
                            "f": field_witness(gp.low_field),
                            "g": field_witness(gq.high_field),
                            "x": space.labels[x],
                            "T_f": exact.format_value(gp.low),
                            "T_g": exact.format_value(gq.high),
                        })
                if exact.compare(gp.high, gq.low) > 0:
                    one_step_checked += 1
                    if not _one_step(p, q):
                        return _fails("D2", checked, {
                            "form": "one-step",
                            "f": field_witness(gp.high_field),
                            "g": field_witness(gq.low_field),
                            "x": space.labels[x],
                        })
    return _holds("D2", checked, pairs=grid.count ** 2, one_step_checked=one_step_checked)


# ============================================================================
# D3
# ============================================================================

def check_D3(T: OperatorHandle, grid: FunctionGrid, rset: Optional[Sequence[Fraction]] = None,
             cap: Optional[int] = None, evaluations: Optional[GridEvaluation] = None,
             steps: Optional[int] = None) -> AxiomReport:
    """
    Scalar monotonicity: 0 < T[f](x) < inf and r > 1 imply T[f](x) < T[rf](x).

    Also audits the continuous form: delta -> T[(1+delta) f](x) strictly
    increasing on a sample of [0, r-1] wherever T[rf](x) is finite.
    """
    rset = tuple(CONFIG.audit.SCALE_SET if rset is None else rset)
    if any(Fraction(r) <= 1 for r in rset):
        raise ValueError("D3 scales must exceed 1")
    steps = CONFIG.audit.C3_STEPS if steps is None else steps
    evaluations = evaluations if evaluations is not None else evaluate_grid(T, grid, cap)
    space = grid.space
    checked = 0
    for f, values in evaluations:
        active = [x for x, v in enumerate(values) if v is not INF and not exact.is_zero(v)]
        if not active:
            continue
        for r in rset:
            r = Fraction(r)
            scaled = T.evaluate(f.scale(r)).values
            for x in active:
                checked += 1
                if exact.compare(values[x], scaled[x]) >= 0:
                    return _fails("D3", checked, {
                        "f": field_witness(f),
                        "x": space.labels[x],
                        "r": exact.format_rational(r),
                        "T_f": exact.format_value(values[x]),
                        "T_rf": exact.format_value(scaled[x]),
                    })
            finite = [x for x in active if scaled[x] is not INF]
            if not finite or steps < 2:
                continue
            path = [values]
            for k in range(1, steps):
                path.append(T.evaluate(f.scale(1 + (r - 1) * Fraction(k, steps))).values)
            path.append(scaled)
            for x in finite:
                for k, (a, b) in enumerate(zip(path, path[1:])):
                    if exact.compare(a[x], b[x]) >= 0:
                        return _fails("D3", checked, {
                            "form": "c3",
                            "f": field_witness(f),
                            "x": space.labels[x],
                            "delta": exact.format_rational((r - 1) * Fraction(k + 1, steps)),
                        })
    return _holds("D3", checked, scales=[exact.format_rational(Fraction(r)) for r in rset])


# ============================================================================
# TRANSLATION AND HOMOGENEITY
# ============================================================================

def check_translation_invariance(T: OperatorHandle, grid: FunctionGrid,
                                 cset: Optional[Sequence[Fraction]] = None, cap: Optional[int] = None,
                                 evaluations: Optional[GridEvaluation] = None) -> AxiomReport:
    cset = tuple(CONFIG.audit.SHIFT_SET if cset is None else cset)
    evaluations = evaluations if evaluations is not None else evaluate_grid(T, grid, cap)
    checked = 0
    for f, values in evaluations:
        for c in cset:
            shifted = T.evaluate(f.shift(c)).values
            checked += 1
            for x, (a, b) in enumerate(zip(values, shifted)):
                if not exact.equal(a, b):
                    return _fails("translation", checked, {
                        "f": field_witness(f),
                        "c": exact.format_rational(Fraction(c)),
                        "x": grid.space.labels[x],
                        "T_f": exact.format_value(a),
                        "T_f_plus_c": exact.format_value(b),
                    })
    return _holds("translation", checked)


def check_homogeneity(T: OperatorHandle, grid: FunctionGrid, p, rset: Optional[Sequence[Fraction]] = None,
                      cap: Optional[int] = None, evaluations: Optional[GridEvaluation] = None) -> AxiomReport:
    """T[rf] = r**p T[f], exact where rational or surd, interval-tight otherwise."""
    p = Fraction(p)
    rset = tuple(CONFIG.audit.HOMOGENEITY_SCALES if rset is None else rset)
    evaluations = evaluations if evaluations is not None else evaluate_grid(T, grid, cap)
    checked = 0
    for f, values in evaluations:
        for r in rset:
            r = Fraction(r)
            scaled = T.evaluate(f.scale(r)).values
            checked += 1
            for x, (v, w) in enumerate(zip(values, scaled)):
                expected = v if p == 0 else exact.scale_power(r, p, v)
                if not exact.equal(expected, w):
                    return _fails(f"homogeneity(p={exact.format_rational(p)})", checked, {
                        "f": field_witness(f),
                        "r": exact.format_rational(r),
                        "x": grid.space.labels[x],
                        "expected": exact.format_value(expected),
                        "T_rf": exact.format_value(w),
                    })
    return _holds(f"homogeneity(p={exact.format_rational(p)})", checked)


# ============================================================================
# FULL AUDIT
# ============================================================================

@dataclass
class AuditSummary:
    operator: str
    grid_count: int
    reports: List[AxiomReport]

    @property
    def is_modulus_on_grid(self) -> bool:
        return all(r.holds for r in self.reports if r.axiom in ("D1", "D2", "D3"))

    def report(self, axiom: str) -> AxiomReport:
        for r in self.reports:
            if r.axiom == axiom or r.axiom.startswith(axiom + "("):
                return r
        raise KeyError(axiom)

    def failing(self) -> List[str]:
        return [r.axiom for r in self.reports if not r.holds]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "operator": self.operator,
            "grid_fields": self.grid_count,
            "modulus_on_grid": self.is_modulus_on_grid,
            "reports": [r.to_dict() for r in self.reports],
        }


def audit(T: OperatorHandle, grid: FunctionGrid, rset: Optional[Sequence[Fraction]] = None,
          cset: Optional[Sequence[Fraction]] = None, degree=None, cap: Optional[int] = None) -> AuditSummary:
    """
    Run D1, D2, D3 and translation invariance (plus homogeneity when a degree
    is given or known structurally) sharing one grid evaluation.
    """
    evaluations = evaluate_grid(T, grid, cap)
    reports = [
        check_D1(T, grid, evaluations=evaluations),
        check_D2(T, grid, evaluations=evaluations),
        check_D3(T, grid, rset, evaluations=evaluations),
        check_translation_invariance(T, grid, cset, evaluations=evaluations),
    ]
    if degree is None:
        degree = T.homogeneity_degree
    if degree is not None:
        reports.append(check_homogeneity(T, grid, degree, evaluations=evaluations))
    return AuditSummary(T.describe(), grid.count, reports)
