#!/usr/bin/env python3
"""
DESCENTLAB - MARKOV DESCENT DYNAMICS
f-oriented generators, exact limit laws, seeded jump-chain simulation and
the comparison machinery built on them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .axioms import field_witness
from .criticality import DescentOrder, minima_set
from .exact import format_rational
from .finite_core import FiniteSpace, FunctionGrid, Generator, ScalarField, enumerate_fields
from .linalg import SingularSystemError, solve, stationary_law
from .moduli_config import CONFIG
from .operators import TL

logger = logging.getLogger(__name__)


# ============================================================================
# TYPES
# ============================================================================

@dataclass(frozen=True)
class OrientedGenerator:
    """L^f with its provenance (L, f)"""

    generator: Generator
    base: Generator
    field: ScalarField

    def apply(self, g: ScalarField) -> Tuple[Fraction, ...]:
        """L^f[g](x) = sum_y L^f(x,y) (g(y) - g(x))"""
        return self.generator.apply(g)


@dataclass(frozen=True)
class Distribution:
    """Exact probability law on V"""

    space: FiniteSpace
    probs: Tuple[Fraction, ...]

    def __post_init__(self):
        if sum(self.probs, Fraction(0)) != 1 or any(p < 0 for p in self.probs):
            raise ValueError(f"not a probability law: {self.probs}")

    @classmethod
    def point_mass(cls, space: FiniteSpace, x: int) -> "Distribution":
        return cls(space, tuple(Fraction(int(i == x)) for i in range(space.size)))

    def support(self) -> frozenset:
        return frozenset(i for i, p in enumerate(self.probs) if p > 0)

    def expectation(self, g: ScalarField) -> Fraction:
        return sum((p * v for p, v in zip(self.probs, g.values)), Fraction(0))

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def to_labels(self) -> Dict[Any, str]:
        return {label: format_rational(p) for label, p in zip(self.space.labels, self.probs)}


@dataclass(frozen=True)
class Trajectory:
    """(time, vertex) pairs of one path, first at time 0"""

    points: Tuple[Tuple[float, int], ...]
    seed: int
    horizon: float

    @property
    def vertices(self) -> List[int]:
        return [v for _, v in self.points]

    def is_monotone(self, f: ScalarField) -> Tuple[bool, str]:
        for (t0, a), (t1, b) in zip(self.points, self.points[1:]):
            if t1 <= t0:
                return False, f"times not increasing at {t1}"
            if f[b] > f[a]:
                return False, f"f increases along jump {a}->{b} at t={t1}"
        return True, "ok"

    def rows(self, space: FiniteSpace) -> List[Tuple[float, Any]]:
        return [(t, space.labels[v]) for t, v in self.points]


# ============================================================================
# ORIENTED GENERATOR AND LIMIT LAW
# ============================================================================

def oriented_generator(L: Generator, f: ScalarField) -> OrientedGenerator:
    """Drop uphill rates (f(y) > f(x)); diagonal restores zero row sums."""
    L.space.require_same(f.space)
    n = L.space.size
    rows = []
    for x in range(n):
        row = [rate if (y != x and f[y] <= f[x]) else Fraction(0) for y, rate in enumerate(L.matrix[x])]
        row[x] = -sum(row, Fraction(0))
        rows.append(tuple(row))
    return OrientedGenerator(Generator(L.space, tuple(rows)), L, f)


def limit_distribution(L: Generator, f: ScalarField, x: int) -> Distribution:
    """
    Exact limit law of the L^f chain started at x.

    Closed classes are the sink components of the descent order; the law is
    the mixture of their stationary laws weighted by absorption probabilities.
    """
    Lf = oriented_generator(L, f).generator.matrix
    order = DescentOrder(L, f)
    space = L.space
    reach = order.reachable(x)
    closed = [c for c in order.sink_components() if c <= reach]
    probs = [Fraction(0)] * space.size

    def stationary(component: frozenset) -> Dict[int, Fraction]:
        members = sorted(component)
        law = stationary_law([[Lf[v][w] for w in members] for v in members])
        return dict(zip(members, law))

    home = next((c for c in closed if x in c), None)
    if home is not None:
        for v, p in stationary(home).items():
            probs[v] = p
        return Distribution(space, tuple(probs))

    in_closed = frozenset().union(*closed)
    transient = sorted(reach - in_closed)
    index = {v: i for i, v in enumerate(transient)}
    A = [[Fraction(0)] * len(transient) for _ in transient]
    for v in transient:
        i = index[v]
        A[i][i] = -Lf[v][v]
        for w in transient:
            if w != v:
                A[i][index[w]] -= Lf[v][w]
    for component in closed:
        b = [sum((Lf[v][w] for w in component), Fraction(0)) for v in transient]
        try:
            h = solve(A, b)
        except SingularSystemError as exc:
            raise AssertionError(f"absorption system singular for a valid generator: {exc}") from None
        weight = h[index[x]]
        if weight == 0:
            continue
        for v, p in stationary(component).items():
            probs[v] += weight * p
    return Distribution(space, tuple(probs))


def check_support(L: Generator, f: ScalarField, x: int) -> Tuple[bool, str]:
    """support(pi^f) inside M(f)"""
    law = limit_distribution(L, f, x)
    outside = law.support() - minima_set(L, f)
    if outside:
        return False, f"support leaves M(f) at {L.space.label_set(outside)}"
    return True, "ok"


# ============================================================================
# SIMULATION
# ============================================================================

def _rates(L: Generator, f: ScalarField) -> np.ndarray:
    Lf = oriented_generator(L, f).generator.matrix
    rates = np.array([[float(v) for v in row] for row in Lf])
    np.fill_diagonal(rates, 0.0)
    return rates


def _cumulative(rates: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    q = rates.sum(axis=1)
    cum = np.zeros_like(rates)
    for x in range(rates.shape[0]):
        if q[x] > 0:
            cum[x] = np.cumsum(rates[x]) / q[x]
            last = int(np.flatnonzero(rates[x])[-1])
            cum[x, last:] = 1.0
    return q, cum


def simulate_trajectory(L: Generator, f: ScalarField, x: int, horizon: float, seed: int) -> Trajectory:
    """Jump chain with inverse-CDF exponential holding times of rate -L^f(v,v)."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    q, cum = _cumulative(_rates(L, f))
    rng = np.random.Generator(np.random.PCG64(seed))
    t, v = 0.0, x
    points = [(0.0, x)]
    while q[v] > 0:
        t += -np.log1p(-rng.random()) / q[v]
        if t > horizon:
            break
        v = int(np.searchsorted(cum[v], rng.random(), side="right"))
        points.append((float(t), v))
    trajectory = Trajectory(tuple(points), seed, horizon)
    ok, reason = trajectory.is_monotone(f)
    if not ok:
        raise AssertionError(reason)
    return trajectory


def empirical_occupation(L: Generator, f: ScalarField, x: int, horizon: Optional[float] = None,
                         runs: Optional[int] = None, seed: int = 0,
                         batches: Optional[int] = None) -> np.ndarray:
    """
    Frequencies of X(horizon) over independent runs, simulated as vectorized
    batches with seeds spawned from one SeedSequence.
    """
    horizon = CONFIG.markov.HORIZON if horizon is None else horizon
    runs = CONFIG.markov.RUNS if runs is None else runs
    batches = CONFIG.markov.BATCHES if batches is None else batches
    n = L.space.size
    q, cum = _cumulative(_rates(L, f))
    counts = np.zeros(n, dtype=np.int64)
    sizes = [runs // batches + (1 if i < runs % batches else 0) for i in range(batches)]
    for child, size in zip(np.random.SeedSequence(seed).spawn(batches), sizes):
        if size == 0:
            continue
        rng = np.random.Generator(np.random.PCG64(child))
        state = np.full(size, x, dtype=np.int64)
        clock = np.zeros(size)
        active = q[state] > 0
        while active.any():
            idx = np.flatnonzero(active)
            clock[idx] += -np.log1p(-rng.random(idx.size)) / q[state[idx]]
            done = clock[idx] > horizon
            active[idx[done]] = False
            moving = idx[~done]
            if moving.size:
                u = rng.random(moving.size)
                nxt = (cum[state[moving]] <= u[:, None]).sum(axis=1)
                state[moving] = np.minimum(nxt, n - 1)
                active[moving] = q[state[moving]] > 0
        counts += np.bincount(state, minlength=n)
    return counts / runs


def total_variation(law: Distribution, empirical: np.ndarray) -> float:
    return 0.5 * float(np.abs(law.as_array() - np.asarray(empirical)).sum())


# ============================================================================
# COMPARISON LEMMAS
# ============================================================================

@dataclass
class CompLemmaVerdict:
    hypothesis_holds: bool
    inequality_holds: bool
    witness: Optional[Any] = None

    @property
    def violation(self) -> bool:
        return self.hypothesis_holds and not self.inequality_holds


def check_comp_lemma(L: Generator, f: ScalarField, g: ScalarField) -> CompLemmaVerdict:
    """T_L[f] >= T_L[g] pointwise must give L^f[g] >= L^f[f] pointwise."""
    T = TL(L)
    tf, tg = T.evaluate(f).values, T.evaluate(g).values
    hypothesis = all(a >= b for a, b in zip(tf, tg))
    return _comp_inequality(L, f, g, hypothesis)


def _comp_inequality(L: Generator, f: ScalarField, g: ScalarField, hypothesis: bool) -> CompLemmaVerdict:
    oriented = oriented_generator(L, f)
    on_g, on_f = oriented.apply(g), oriented.apply(f)
    for x, (a, b) in enumerate(zip(on_g, on_f)):
        if a < b:
            if hypothesis:
                logger.error("comparison lemma violated at %s", L.space.labels[x])
            return CompLemmaVerdict(hypothesis, False, L.space.labels[x])
    return CompLemmaVerdict(hypothesis, True)


def sample_comp_lemma(L: Generator, grid: FunctionGrid, draws: int, seed: int,
                      max_attempts: Optional[int] = None) -> Dict[str, Any]:
    """
    Draw seeded grid pairs until ``draws`` of them satisfy the hypothesis
    (or attempts run out) and count inequality violations among those.
    """
    T = TL(L)
    fields = list(enumerate_fields(grid))
    values = [T.evaluate(f).values for f in fields]
    rng = np.random.default_rng(seed)
    max_attempts = max_attempts or draws * 200
    satisfied = attempts = 0
    violations = []
    while satisfied < draws and attempts < max_attempts:
        chunk = rng.integers(0, len(fields), size=(4096, 2))
        for i, j in chunk:
            attempts += 1
            if not all(a >= b for a, b in zip(values[i], values[j])):
                continue
            satisfied += 1
            verdict = _comp_inequality(L, fields[i], fields[j], True)
            if verdict.violation:
                violations.append({"f": field_witness(fields[i]), "g": field_witness(fields[j]),
                                   "x": verdict.witness})
            if satisfied >= draws:
                break
    return {"draws": satisfied, "attempts": attempts, "seed": seed, "violations": violations}


def check_limit_comparison(L: Generator, f: ScalarField, g: ScalarField, x: int) -> Tuple[bool, bool]:
    """
    Returns:
        (applicable, holds): applicable when f >= g on M(f); then
        pi^f[f] >= pi^f[g] must hold.
    """
    if not f.dominates(g, minima_set(L, f)):
        return False, True
    law = limit_distribution(L, f, x)
    return True, law.expectation(f) >= law.expectation(g)
