#!/usr/bin/env python3
"""
DESCENTLAB - DESCENT OPERATORS
Primitive operator families on finite spaces, the closure combinators and
the JSON expression builder. Every operator is an immutable evaluator
ScalarField -> ExtendedField.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

from . import exact
from .errors import OperatorSpecError, SpecParseError
from .exact import INF, ZERO, ONE, Value
from .finite_core import (
    ExtendedField,
    FiniteSpace,
    Generator,
    MeasureMatrix,
    MetricMatrix,
    NeighborhoodSystem,
    ScalarField,
)

logger = logging.getLogger(__name__)

Exponent = Union[Fraction, type(INF)]


def _positive_part(v: Fraction) -> Fraction:
    return v if v > 0 else ZERO


# ============================================================================
# PHI REGISTRY
# ============================================================================

class Phi(ABC):
    """Monotone map R+ -> R+ with phi(0) = 0 and phi(INF) = INF."""

    kind: str = "phi"

    @abstractmethod
    def __call__(self, t: Value) -> Value:
        ...

    @property
    @abstractmethod
    def strictly_increasing(self) -> bool:
        ...

    @property
    def degree(self) -> Optional[Fraction]:
        """p when phi(t) = t**p, else None."""
        return None

    @abstractmethod
    def to_expr(self) -> Dict[str, Any]:
        ...


@dataclass(frozen=True)
class PowerPhi(Phi):
    p: Fraction
    kind = "power"

    def __post_init__(self):
        if self.p <= 0:
            raise OperatorSpecError(f"power phi needs p > 0, got {self.p}")

    def __call__(self, t: Value) -> Value:
        return exact.power(t, self.p)

    @property
    def strictly_increasing(self) -> bool:
        return True

    @property
    def degree(self) -> Optional[Fraction]:
        return self.p

    def to_expr(self) -> Dict[str, Any]:
        return {"kind": "power", "p": exact.format_rational(self.p)}


@dataclass(frozen=True)
class ThresholdPhi(Phi):
    """t * 1_{t > eps}"""

    eps: Fraction
    kind = "threshold"

    def __call__(self, t: Value) -> Value:
        if t is INF:
            return INF
        return t if exact.compare(t, self.eps) > 0 else ZERO

    @property
    def strictly_increasing(self) -> bool:
        return self.eps <= 0

    def to_expr(self) -> Dict[str, Any]:
        return {"kind": "threshold", "eps": exact.format_rational(self.eps)}


@dataclass(frozen=True)
class TablePhi(Phi):
    """User table on a finite difference set; entries sorted by argument."""

    table: Tuple[Tuple[Fraction, Fraction], ...]
    kind = "table"

    def __post_init__(self):
        lookup = dict(self.table)
        if lookup.get(ZERO, None) != ZERO:
            raise OperatorSpecError("table phi must map 0 to 0")
        if any(v < 0 for v in lookup.values()):
            raise OperatorSpecError("table phi values must be nonnegative")
        object.__setattr__(self, "table", tuple(sorted(lookup.items())))
        object.__setattr__(self, "_lookup", lookup)

    def __call__(self, t: Value) -> Value:
        if t is INF:
            return INF
        if not isinstance(t, Fraction) or t not in self._lookup:
            raise OperatorSpecError(f"table phi has no entry for {exact.format_value(t)}")
        return self._lookup[t]

    @property
    def strictly_increasing(self) -> bool:
        values = [v for _, v in self.table]
        return all(a < b for a, b in zip(values, values[1:]))

    def to_expr(self) -> Dict[str, Any]:
        return {
            "kind": "table",
            "values": {exact.format_rational(k): exact.format_rational(v) for k, v in self.table},
        }


PHI_KINDS = ("power", "threshold", "table")


def parse_phi(expr: Mapping[str, Any]) -> Phi:
    if not isinstance(expr, Mapping) or "kind" not in expr:
        raise OperatorSpecError(f"phi must be an object with a 'kind' in {PHI_KINDS}")
    kind = expr["kind"]
    try:
        if kind == "power":
            return PowerPhi(exact.parse_rational(expr.get("p", 1)))
        if kind == "threshold":
            return ThresholdPhi(exact.parse_rational(expr["eps"]))
        if kind == "table":
            return TablePhi(
                tuple((exact.parse_rational(k), exact.parse_rational(v)) for k, v in expr["values"].items())
            )
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise OperatorSpecError(f"invalid {kind} phi: {exc}") from None
    raise OperatorSpecError(f"unknown phi kind {kind!r}; registered: {PHI_KINDS}")


# ============================================================================
# OPERATOR BASE
# ============================================================================

class OperatorHandle(ABC):
    """Composable evaluator T: ScalarField -> ExtendedField."""

    @property
    @abstractmethod
    def space(self) -> FiniteSpace:
        ...

    @abstractmethod
    def _values(self, f: ScalarField) -> Tuple[Value, ...]:
        ...

    def evaluate(self, f: ScalarField) -> ExtendedField:
        self.space.require_same(f.space)
        return ExtendedField(self.space, self._values(f))

    def __call__(self, f: ScalarField) -> ExtendedField:
        return self.evaluate(f)

    @property
    def is_descent_modulus(self) -> bool:
        """Structural certificate from the construction rules."""
        return False

    @property
    def homogeneity_degree(self) -> Optional[Fraction]:
        return None

    def truncation_levels(self) -> Tuple[Fraction, ...]:
        return ()

    @abstractmethod
    def describe(self) -> str:
        ...

    def __str__(self) -> str:
        return self.describe()


# ============================================================================
# PRIMITIVES
# ============================================================================

@dataclass(frozen=True)
class TL(OperatorHandle):
    """T_L[f](x) = sum_y L(x,y) (f(x) - f(y))+"""

    generator: Generator

    @property
    def space(self) -> FiniteSpace:
        return self.generator.space

    def _values(self, f):
        out = []
        for x, row in enumerate(self.generator.matrix):
            fx = f[x]
            out.append(sum(
                (rate * (fx - f[y]) for y, rate in enumerate(row) if y != x and rate > 0 and f[y] < fx),
                ZERO,
            ))
        return tuple(out)

    is_descent_modulus = True
    homogeneity_degree = ONE

    def describe(self) -> str:
        return "TL"


@dataclass(frozen=True)
class TLm(OperatorHandle):
    """
    T_{L,m}[f](x) = (sum_y L(x,y) ((f(x)-f(y))+)**m)**(1/m)

    ``m`` is a rational > 0, INF, or a per-vertex tuple of those. For
    m = INF the value is max over the active system of L.
    """

    generator: Generator
    m: Union[Exponent, Tuple[Exponent, ...]]

    def __post_init__(self):
        exponents = self.m if isinstance(self.m, tuple) else (self.m,)
        if isinstance(self.m, tuple) and len(self.m) != self.generator.space.size:
            raise OperatorSpecError("per-vertex exponent table must cover every vertex")
        for m in exponents:
            if m is not INF and Fraction(m) <= 0:
                raise OperatorSpecError(f"exponent m must be positive, got {m}")

    @property
    def space(self) -> FiniteSpace:
        return self.generator.space

    def exponent(self, x: int) -> Exponent:
        return self.m[x] if isinstance(self.m, tuple) else self.m

    def _vertex(self, f: ScalarField, x: int) -> Value:
        m = self.exponent(x)
        row = self.generator.matrix[x]
        fx = f[x]
        drops = [(rate, fx - f[y]) for y, rate in enumerate(row) if y != x and rate > 0 and f[y] < fx]
        if m is INF:
            return max((d for _, d in drops), default=ZERO)
        m = Fraction(m)
        if m == 1:
            return sum((rate * d for rate, d in drops), ZERO)
        inner = exact.add_all(exact.scale(rate, exact.power(d, m)) for rate, d in drops)
        if exact.is_zero(inner):
            return ZERO
        return exact.power(inner, 1 / m)

    def _values(self, f):
        return tuple(self._vertex(f, x) for x in range(self.space.size))

    is_descent_modulus = True
    homogeneity_degree = ONE

    def describe(self) -> str:
        if isinstance(self.m, tuple):
            return "TLm(m=per-vertex)"
        return f"TLm(m={exact.format_value(self.m) if self.m is not INF else 'inf'})"


@dataclass(frozen=True)
class TD(OperatorHandle):
    """T_D[f](x) = max_{y in D_x} (f(x) - f(y))+"""

    system: NeighborhoodSystem

    @property
    def space(self) -> FiniteSpace:
        return self.system.space

    def _values(self, f):
        return tuple(
            max((_positive_part(f[x] - f[y]) for y in members), default=ZERO)
            for x, members in enumerate(self.system.sets)
        )

    is_descent_modulus = True
    homogeneity_degree = ONE

    def describe(self) -> str:
        return "TD"


@dataclass(frozen=True)
class SemiGlobalSlope(OperatorHandle):
    """sup_{y in D_x} (f(x) - f(y))+ / m(x,y), 0 at y = x"""

    system: NeighborhoodSystem
    metric: MetricMatrix

    def __post_init__(self):
        self.system.space.require_same(self.metric.space)

    @property
    def space(self) -> FiniteSpace:
        return self.system.space

    def _values(self, f):
        out = []
        for x, members in enumerate(self.system.sets):
            row = self.metric.matrix[x]
            out.append(max(
                (_positive_part(f[x] - f[y]) / row[y] for y in members if y != x),
                default=ZERO,
            ))
        return tuple(out)

    is_descent_modulus = True
    homogeneity_degree = ONE

    def describe(self) -> str:
        return "SemiGlobalSlope"


@dataclass(frozen=True)
class Nonlocal(OperatorHandle):
    """sum_y mu(x,y) phi(d) with d = (f(x)-f(y))+ oriented, |f(x)-f(y)| otherwise"""

    measure: MeasureMatrix
    phi: Phi
    oriented: bool = True

    @property
    def space(self) -> FiniteSpace:
        return self.measure.space

    def _values(self, f):
        out = []
        for x, row in enumerate(self.measure.matrix):
            terms = []
            for y, mass in enumerate(row):
                if y == x or mass == 0:
                    continue
                d = f[x] - f[y]
                d = _positive_part(d) if self.oriented else abs(d)
                if d == 0:
                    continue
                terms.append(exact.scale(mass, self.phi(d)))
            out.append(exact.add_all(terms))
        return tuple(out)

    @property
    def is_descent_modulus(self) -> bool:
        return self.oriented and self.phi.strictly_increasing

    @property
    def homogeneity_degree(self) -> Optional[Fraction]:
        return self.phi.degree

    def describe(self) -> str:
        return f"Nonlocal({self.phi.kind}, {'oriented' if self.oriented else 'non-oriented'})"


@dataclass(frozen=True)
class TopGap(OperatorHandle):
    """
    (f(x) - max_{y in D'_x, y != x} f(y))+ , and 0 when D'_x = {x}.

    A homogeneous descent modulus whose critical map is not that of T_D'
    once some |D'_x| >= 3.
    """

    system: NeighborhoodSystem

    @property
    def space(self) -> FiniteSpace:
        return self.system.space

    def _values(self, f):
        out = []
        for x, members in enumerate(self.system.sets):
            others = [f[y] for y in members if y != x]
            out.append(_positive_part(f[x] - max(others)) if others else ZERO)
        return tuple(out)

    is_descent_modulus = True
    homogeneity_degree = ONE

    def describe(self) -> str:
        return "TopGap"


@dataclass(frozen=True)
class Zero(OperatorHandle):
    zero_space: FiniteSpace

    @property
    def space(self) -> FiniteSpace:
        return self.zero_space

    def _values(self, f):
        return (ZERO,) * self.zero_space.size

    is_descent_modulus = True

    def describe(self) -> str:
        return "Zero"


# ============================================================================
# COMBINATORS
# ============================================================================

def _common_space(children: Sequence[OperatorHandle]) -> FiniteSpace:
    if not children:
        raise OperatorSpecError("combinator needs at least one operand")
    space = children[0].space
    for child in children[1:]:
        space.require_same(child.space)
    return space


def _shared_degree(children: Sequence[OperatorHandle]) -> Optional[Fraction]:
    degrees = {c.homogeneity_degree for c in children if not isinstance(c, Zero)}
    if len(degrees) == 1:
        return degrees.pop()
    return None


def _truncations(children: Sequence[OperatorHandle]) -> Tuple[Fraction, ...]:
    levels = []
    for child in children:
        levels.extend(child.truncation_levels())
    return tuple(dict.fromkeys(levels))


@dataclass(frozen=True)
class Indicator(OperatorHandle):
    """1_{T[f](x) > 0}: the pointwise limit of (T)**(1/n)."""

    child: OperatorHandle

    @property
    def space(self) -> FiniteSpace:
        return self.child.space

    def _values(self, f):
        return tuple(ZERO if exact.is_zero(v) else ONE for v in self.child._values(f))

    homogeneity_degree = ZERO

    def describe(self) -> str:
        return f"Indicator({self.child.describe()})"


@dataclass(frozen=True)
class Sum(OperatorHandle):
    children: Tuple[OperatorHandle, ...]

    def __post_init__(self):
        _common_space(self.children)

    @property
    def space(self) -> FiniteSpace:
        return self.children[0].space

    def _values(self, f):
        columns = [c._values(f) for c in self.children]
        return tuple(exact.add_all(vals) for vals in zip(*columns))

    @property
    def is_descent_modulus(self) -> bool:
        return all(c.is_descent_modulus for c in self.children)

    @property
    def homogeneity_degree(self) -> Optional[Fraction]:
        return _shared_degree(self.children)

    def truncation_levels(self):
        return _truncations(self.children)

    def describe(self) -> str:
        return "Sum(" + ", ".join(c.describe() for c in self.children) + ")"


@dataclass(frozen=True)
class PostCompose(OperatorHandle):
    """phi o T with phi(INF) = INF"""

    child: OperatorHandle
    phi: Phi

    def __post_init__(self):
        if not self.phi.strictly_increasing:
            raise OperatorSpecError(f"PostCompose needs a strictly increasing phi, got {self.phi.kind}")

    @property
    def space(self) -> FiniteSpace:
        return self.child.space

    def _values(self, f):
        return tuple(self.phi(v) for v in self.child._values(f))

    @property
    def is_descent_modulus(self) -> bool:
        return self.child.is_descent_modulus

    @property
    def homogeneity_degree(self) -> Optional[Fraction]:
        inner, outer = self.child.homogeneity_degree, self.phi.degree
        if inner is None or outer is None:
            return None
        return inner * outer

    def truncation_levels(self):
        return self.child.truncation_levels()

    def describe(self) -> str:
        return f"PostCompose({self.phi.kind}, {self.child.describe()})"


@dataclass(frozen=True)
class Scale(OperatorHandle):
    """r T with 0 * INF = 0"""

    child: OperatorHandle
    r: Fraction

    def __post_init__(self):
        if self.r < 0:
            raise OperatorSpecError(f"Scale needs r >= 0, got {self.r}")

    @property
    def space(self) -> FiniteSpace:
        return self.child.space

    def _values(self, f):
        return tuple(exact.scale(self.r, v) for v in self.child._values(f))

    @property
    def is_descent_modulus(self) -> bool:
        return self.child.is_descent_modulus

    @property
    def homogeneity_degree(self) -> Optional[Fraction]:
        return self.child.homogeneity_degree if self.r > 0 else None

    def truncation_levels(self):
        return self.child.truncation_levels()

    def describe(self) -> str:
        return f"Scale({exact.format_rational(self.r)}, {self.child.describe()})"


@dataclass(frozen=True)
class TruncateEps(OperatorHandle):
    """0 where f(x) <= min f + eps, T elsewhere"""

    child: OperatorHandle
    eps: Fraction

    def __post_init__(self):
        if self.eps <= 0:
            raise OperatorSpecError(f"TruncateEps needs eps > 0, got {self.eps}")

    @property
    def space(self) -> FiniteSpace:
        return self.child.space

    def _values(self, f):
        band = f.minimum() + self.eps
        return tuple(ZERO if f[x] <= band else v for x, v in enumerate(self.child._values(f)))

    @property
    def is_descent_modulus(self) -> bool:
        return self.child.is_descent_modulus

    def truncation_levels(self):
        return (self.eps,) + tuple(e for e in self.child.truncation_levels() if e != self.eps)

    def describe(self) -> str:
        return f"TruncateEps({exact.format_rational(self.eps)}, {self.child.describe()})"


@dataclass(frozen=True)
class RestrictK(OperatorHandle):
    """T on K, 0 off K"""

    child: OperatorHandle
    members: frozenset

    @property
    def space(self) -> FiniteSpace:
        return self.child.space

    def _values(self, f):
        return tuple(v if x in self.members else ZERO for x, v in enumerate(self.child._values(f)))

    @property
    def is_descent_modulus(self) -> bool:
        return self.child.is_descent_modulus

    @property
    def homogeneity_degree(self) -> Optional[Fraction]:
        return self.child.homogeneity_degree

    def truncation_levels(self):
        return self.child.truncation_levels()

    def describe(self) -> str:
        return f"RestrictK({self.space.label_set(self.members)}, {self.child.describe()})"


@dataclass(frozen=True)
class PointwiseSup(OperatorHandle):
    children: Tuple[OperatorHandle, ...]

    def __post_init__(self):
        _common_space(self.children)

    @property
    def space(self) -> FiniteSpace:
        return self.children[0].space

    def _values(self, f):
        columns = [c._values(f) for c in self.children]
        return tuple(exact.maximum(vals) for vals in zip(*columns))

    @property
    def is_descent_modulus(self) -> bool:
        # certified only when the children share one homogeneity degree
        return all(c.is_descent_modulus for c in self.children) and _shared_degree(self.children) is not None

    @property
    def homogeneity_degree(self) -> Optional[Fraction]:
        return _shared_degree(self.children)

    def truncation_levels(self):
        return _truncations(self.children)

    def describe(self) -> str:
        return "PointwiseSup(" + ", ".join(c.describe() for c in self.children) + ")"


@dataclass(frozen=True)
class PointwiseInf(PointwiseSup):
    def _values(self, f):
        columns = [c._values(f) for c in self.children]
        return tuple(exact.minimum(vals) for vals in zip(*columns))

    def describe(self) -> str:
        return "PointwiseInf(" + ", ".join(c.describe() for c in self.children) + ")"


# ============================================================================
# CONVENIENCE EVALUATORS
# ============================================================================

def eval_TL(L: Generator, f: ScalarField) -> ExtendedField:
    return TL(L).evaluate(f)


def eval_TLm(L: Generator, m, f: ScalarField) -> ExtendedField:
    return TLm(L, parse_exponent(m)).evaluate(f)


def eval_TD(D: NeighborhoodSystem, f: ScalarField) -> ExtendedField:
    return TD(D).evaluate(f)


def eval_semiglobal_slope(D: NeighborhoodSystem, m: MetricMatrix, f: ScalarField) -> ExtendedField:
    return SemiGlobalSlope(D, m).evaluate(f)


def eval_nonlocal(mu: MeasureMatrix, phi: Phi, f: ScalarField, oriented: bool = True) -> ExtendedField:
    return Nonlocal(mu, phi, oriented).evaluate(f)


# ============================================================================
# EXPRESSION BUILDER
# ============================================================================

def parse_exponent(raw) -> Union[Exponent, Tuple[Exponent, ...]]:
    if raw is INF:
        return INF
    if isinstance(raw, (list, tuple)):
        return tuple(parse_exponent(v) for v in raw)
    if isinstance(raw, str) and raw.strip().lower() in ("inf", "infinity", "∞"):
        return INF
    try:
        return exact.parse_rational(raw)
    except (ValueError, ZeroDivisionError):
        raise OperatorSpecError(f"invalid exponent {raw!r}") from None


class _Builder:
    """Resolves names against a SpaceSpec while building an expression tree."""

    def __init__(self, spec):
        self.spec = spec
        self._stack: list = []

    def generator(self, expr) -> Generator:
        return self.spec.generator(expr.get("L"))

    def system(self, expr, key: str = "D") -> NeighborhoodSystem:
        name = expr.get(key)
        space = self.spec.space
        if name == "full":
            return NeighborhoodSystem.full(space)
        if name == "trivial":
            return NeighborhoodSystem.trivial(space)
        if name == "active":
            return self.generator(expr).active_system()
        if isinstance(name, dict):
            return NeighborhoodSystem.from_labels(space, name)
        return self.spec.system(name)

    def children(self, expr) -> Tuple[OperatorHandle, ...]:
        args = expr.get("args")
        if not isinstance(args, list) or not args:
            raise OperatorSpecError(f"{expr.get('op')} needs a nonempty 'args' list")
        return tuple(self.build(a) for a in args)

    def child(self, expr) -> OperatorHandle:
        if "arg" not in expr:
            raise OperatorSpecError(f"{expr.get('op')} needs an 'arg'")
        return self.build(expr["arg"])

    def rational(self, expr, key: str) -> Fraction:
        if key not in expr:
            raise OperatorSpecError(f"{expr.get('op')} needs '{key}'")
        try:
            return exact.parse_rational(expr[key])
        except (ValueError, ZeroDivisionError):
            raise OperatorSpecError(f"{expr.get('op')}.{key} is not a rational: {expr[key]!r}") from None

    def build(self, expr) -> OperatorHandle:
        if isinstance(expr, str):
            if expr not in self.spec.operators:
                raise OperatorSpecError(f"unknown operator name {expr!r}")
            if expr in self._stack:
                raise OperatorSpecError(f"operator {expr!r} refers to itself")
            self._stack.append(expr)
            try:
                return self.build(self.spec.operators[expr])
            finally:
                self._stack.pop()
        if not isinstance(expr, Mapping) or "op" not in expr:
            raise OperatorSpecError(f"operator expression must be an object with 'op': {expr!r}")
        op = expr["op"]
        try:
            return self._build_op(op, expr)
        except (SpecParseError, KeyError) as exc:
            raise OperatorSpecError(f"{op}: {exc}") from None

    def _build_op(self, op: str, expr) -> OperatorHandle:
        space = self.spec.space
        if op == "TL":
            return TL(self.generator(expr))
        if op == "TLm":
            return TLm(self.generator(expr), parse_exponent(expr.get("m", 1)))
        if op == "TLinf":
            return TLm(self.generator(expr), INF)
        if op == "TD":
            return TD(self.system(expr))
        if op == "SemiGlobalSlope":
            return SemiGlobalSlope(self.system(expr), self.spec.metric(expr.get("metric")))
        if op == "Nonlocal":
            if "mu" in expr:
                measure = self.spec.measure(expr["mu"])
            else:
                measure = self.generator(expr).off_diagonal()
            return Nonlocal(measure, parse_phi(expr.get("phi", {"kind": "power", "p": "1"})),
                            bool(expr.get("oriented", True)))
        if op == "TopGap":
            return TopGap(self.system(expr))
        if op == "Zero":
            return Zero(space)
        if op == "Indicator":
            return Indicator(self.child(expr))
        if op == "Sum":
            return Sum(self.children(expr))
        if op == "PostCompose":
            return PostCompose(self.child(expr), parse_phi(expr.get("phi", {})))
        if op == "Scale":
            return Scale(self.child(expr), self.rational(expr, "r"))
        if op == "TruncateEps":
            return TruncateEps(self.child(expr), self.rational(expr, "eps"))
        if op == "RestrictK":
            return RestrictK(self.child(expr), space.indices(expr.get("K", [])))
        if op == "PointwiseSup":
            return PointwiseSup(self.children(expr))
        if op == "PointwiseInf":
            return PointwiseInf(self.children(expr))
        raise OperatorSpecError(f"unknown operator {op!r}")


def compose_operators(expr: Union[str, Mapping[str, Any]], spec) -> OperatorHandle:
    """
    Build an OperatorHandle from a JSON expression tree

    Args:
        expr: {"op": ..., ...} tree, or the name of an entry in spec.operators
        spec: SpaceSpec resolving generator/system/metric/measure names
    """
    handle = _Builder(spec).build(expr)
    logger.debug("built operator %s", handle.describe())
    return handle
