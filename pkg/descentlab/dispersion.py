#!/usr/bin/env python3
"""
DESCENTLAB - DISPERSION
Floating-point layer for dispersion operators on boxes of R^n: ball
averages of the difference quotient, their small-radius limit, the ball
identity, the weighted-measure construction and nonlocal operators on
grid nodes.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DispersionError
from .finite_core import ExtendedField, FiniteSpace, MeasureMatrix, ScalarField
from .moduli_config import CONFIG
from .operators import Nonlocal, Phi, PowerPhi

logger = logging.getLogger(__name__)

Point = Sequence[float]


# ============================================================================
# DOMAIN AND FIELDS
# ============================================================================

@dataclass(frozen=True)
class GridDomain:
    """
    Axis-aligned box with a per-axis resolution

    ``local_dimension`` maps a point to n(x); the box dimension is used when
    it is not given.
    """

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    resolution: Tuple[int, ...]
    local_dimension: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.resolution)) or not self.lower:
            raise DispersionError("bounds and resolution must share one positive dimension")
        if any(a >= b for a, b in zip(self.lower, self.upper)):
            raise DispersionError(f"empty box {self.lower} .. {self.upper}")
        if min(self.resolution) < CONFIG.dispersion.MIN_RESOLUTION:
            raise DispersionError(
                f"resolution {self.resolution} below {CONFIG.dispersion.MIN_RESOLUTION} cells per axis"
            )

    @classmethod
    def interval(cls, a: float, b: float, resolution: int) -> "GridDomain":
        return cls((float(a),), (float(b),), (int(resolution),))

    @classmethod
    def cube(cls, a: float, b: float, dim: int, resolution: int) -> "GridDomain":
        return cls((float(a),) * dim, (float(b),) * dim, (int(resolution),) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / np.array(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(np.all(x >= np.array(self.lower) - tol) and np.all(x <= np.array(self.upper) + tol))

    def dimension_at(self, x: np.ndarray) -> float:
        return float(self.local_dimension(x)) if self.local_dimension else float(self.dim)

    def nodes(self) -> np.ndarray:
        """Cell midpoints, last axis varying fastest."""
        axes = [
            lo + (np.arange(n) + 0.5) * h
            for lo, n, h in zip(self.lower, self.resolution, self.spacing)
        ]
        return np.array(list(itertools.product(*axes)))


@dataclass(frozen=True)
class GridField:
    """
    Vectorized f evaluated on arrays of points (shape (..., n))

    ``gradient`` is the analytic gradient when known.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "f"

    def __call__(self, points: np.ndarray) -> np.ndarray:
        values = np.asarray(self.fn(np.asarray(points, dtype=float)), dtype=float)
        if not np.all(np.isfinite(values)):
            raise DispersionError(f"{self.name} has non-finite samples")
        return values

    def grad(self, x: Point) -> np.ndarray:
        if self.gradient is None:
            raise DispersionError(f"{self.name} has no analytic gradient")
        return np.asarray(self.gradient(np.asarray(x, dtype=float)), dtype=float)


def quadratic_field(A, b, c: float = 0.0, name: str = "quadratic") -> GridField:
    """f(x) = x.A.x + b.x + c with A symmetrized"""
    A = np.asarray(A, dtype=float)
    A = (A + A.T) / 2
    b = np.asarray(b, dtype=float)

    def fn(points):
        return np.einsum("...i,ij,...j->...", points, A, points) + points @ b + c

    def gradient(x):
        return 2 * A @ x + b

    return GridField(fn, gradient, name)


def constant_field(c: float = 0.0) -> GridField:
    return GridField(lambda points: np.full(np.shape(points)[:-1], float(c)), lambda x: np.zeros_like(x), "constant")


# ============================================================================
# GRID DISPERSION
# ============================================================================

def geometric_sweep(start: Optional[float] = None, ratio: Optional[float] = None,
                    count: Optional[int] = None) -> Tuple[float, ...]:
    start = CONFIG.dispersion.SWEEP_START if start is None else start
    ratio = CONFIG.dispersion.SWEEP_RATIO if ratio is None else ratio
    count = CONFIG.dispersion.SWEEP_RADII if count is None else count
    if not 0 < ratio < 1 or start <= 0:
        raise DispersionError("sweep needs start > 0 and a ratio in (0, 1)")
    return tuple(start * ratio**i for i in range(count))


def _lattice(domain: GridDomain, x: np.ndarray, eps: float) -> np.ndarray:
    """Lattice points y != x of spacing h inside B(x, eps) and the box."""
    h = domain.spacing
    reach = [np.arange(-math.ceil(eps / hi), math.ceil(eps / hi) + 1) for hi in h]
    steps = np.array(list(itertools.product(*reach)), dtype=float)
    offsets = steps * h
    norm2 = np.einsum("ij,ij->i", offsets, offsets)
    keep = (norm2 <= eps * eps * (1 + 1e-12)) & (norm2 > 0)
    points = x + offsets[keep]
    inside = np.all(points >= np.array(domain.lower) - 1e-12, axis=1) & \
        np.all(points <= np.array(domain.upper) + 1e-12, axis=1)
    return points[inside]


def difference_quotient(f: GridField, x: np.ndarray, points: np.ndarray, oriented: bool) -> np.ndarray:
    """(f(x) - f(y)) / |x - y|, positive part when oriented"""
    fx = float(f(x[None, :])[0])
    delta = (fx - f(points)) / np.linalg.norm(points - x, axis=1)
    return np.maximum(delta, 0.0) if oriented else np.abs(delta)


def grid_dispersion(f: GridField, domain: GridDomain, x: Point, eps: float, p: float = 2,
                    oriented: bool = False) -> float:
    """
    n(x) / mu(B(x, eps) & box) * integral of |Delta_f|^p over the same set,
    by midpoint quadrature on a lattice of spacing h centered at x.

    Raises:
        DispersionError: x outside the box or eps below two cells
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (domain.dim,) or not domain.contains(x):
        raise DispersionError(f"point {x.tolist()} is not in the box")
    min_eps = CONFIG.dispersion.MIN_CELLS * float(domain.spacing.max())
    if eps < min_eps * (1 - 1e-12):
        raise DispersionError(f"radius {eps} is below {CONFIG.dispersion.MIN_CELLS} cells ({min_eps})")
    points = _lattice(domain, x, eps)
    if points.shape[0] == 0:
        raise DispersionError(f"no lattice points within {eps} of {x.tolist()}")
    delta = difference_quotient(f, x, points, oriented)
    return domain.dimension_at(x) * float(np.mean(delta**p))


@dataclass(frozen=True)
class DispersionEstimate:
    """Tail-max surrogate of the small-radius limsup with its diagnostic"""

    value: float
    radii: Tuple[float, ...]
    values: Tuple[float, ...]
    diffs: Tuple[float, ...]
    converged: bool
    tail: int

    def half_widths(self) -> List[float]:
        """Per-radius uncertainty: the gap to the neighbouring coarser radius."""
        if not self.diffs:
            return [0.0] * len(self.values)
        return [self.diffs[0]] + list(self.diffs)

    def rows(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.radii, self.values, self.half_widths()))

    def to_dict(self):
        return {
            "value": self.value,
            "converged": self.converged,
            "tail": self.tail,
            "radii": list(self.radii),
            "values": list(self.values),
            "diffs": list(self.diffs),
        }


def _successive_diffs(values: Sequence[float]) -> Tuple[float, ...]:
    return tuple(abs(b - a) for a, b in zip(values, values[1:]))


def dispersion_limit(f: GridField, domain: GridDomain, x: Point, p: float = 2, oriented: bool = False,
                     radii: Optional[Sequence[float]] = None, tail: Optional[int] = None) -> DispersionEstimate:
    """
    grid_dispersion along a strictly decreasing radius sweep; the reported
    value is the max over the finest ``tail`` radii. Non-convergence is
    flagged and logged, never raised.
    """
    radii = tuple(geometric_sweep() if radii is None else radii)
    tail = CONFIG.dispersion.TAIL if tail is None else tail
    if len(radii) < 4:
        raise DispersionError(f"sweep needs at least 4 radii, got {len(radii)}")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise DispersionError("radius sweep must be strictly decreasing")
    values = tuple(grid_dispersion(f, domain, x, eps, p, oriented) for eps in radii)
    diffs = _successive_diffs(values)
    value = max(values[-tail:])
    scale = max(abs(value), 1.0)
    converged = all(d <= CONFIG.dispersion.CONVERGENCE_TOLERANCE * scale for d in diffs[-tail:])
    if not converged:
        logger.warning("dispersion of %s at %s not converged: tail diffs %s", f.name, list(x), diffs[-tail:])
    return DispersionEstimate(value, radii, values, diffs, converged, tail)


# ============================================================================
# BALL IDENTITY
# ============================================================================

@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    half_width: float
    samples: int
    seed: int

    def to_dict(self):
        return {"value": self.value, "half_width": self.half_width, "samples": self.samples, "seed": self.seed}


def uniform_ball(rng: np.random.Generator, count: int, k: int) -> np.ndarray:
    """Uniform points of the unit ball of R^k: Gaussian direction times U^(1/k)."""
    g = rng.standard_normal((count, k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((count, 1)) ** (1.0 / k)


def mc_ball_identity(V: Sequence[float], k: Optional[int] = None, samples: Optional[int] = None,
                     seed: int = 0, batch: int = 1 << 17) -> MonteCarloEstimate:
    """
    Estimate (k / |B_k|) * integral over B_k of <V, u/|u|>^2 du, which is |V|^2.

    Returns:
        MonteCarloEstimate with a 95% half-width from the sample variance
    """
    V = np.asarray(V, dtype=float)
    k = V.shape[0] if k is None else k
    samples = CONFIG.dispersion.MC_SAMPLES if samples is None else samples
    if k < 1 or V.shape != (k,):
        raise DispersionError(f"vector of length {V.shape[0]} does not live in R^{k}")
    if not np.all(np.isfinite(V)):
        raise DispersionError("vector must be finite")
    if not np.any(V):
        return MonteCarloEstimate(0.0, 0.0, samples, seed)
    rng = np.random.default_rng(seed)
    total = total_sq = 0.0
    done = 0
    while done < samples:
        count = min(batch, samples - done)
        u = uniform_ball(rng, count, k)
        w = k * (u @ V / np.linalg.norm(u, axis=1)) ** 2
        total += float(w.sum())
        total_sq += float((w * w).sum())
        done += count
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return MonteCarloEstimate(mean, 1.96 * math.sqrt(var / samples), samples, seed)


# ============================================================================
# WEIGHTED MEASURES
# ============================================================================

@dataclass(frozen=True)
class WeightedMeasureSpec:
    """Positive semidefinite matrix field R(x) shaping mu_x on W_x = x + Ker(R(x))^perp"""

    R: Callable[[np.ndarray], np.ndarray]
    tol: float = 1e-10

    @classmethod
    def constant(cls, matrix) -> "WeightedMeasureSpec":
        matrix = np.asarray(matrix, dtype=float)
        return cls(lambda x: matrix)

    def at(self, x: np.ndarray) -> np.ndarray:
        R = np.asarray(self.R(x), dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] != x.shape[0]:
            raise DispersionError(f"R(x) must be {x.shape[0]}x{x.shape[0]}")
        if not np.allclose(R, R.T, atol=self.tol):
            raise DispersionError("R(x) must be symmetric")
        if np.linalg.eigvalsh(R).min() < -self.tol:
            raise DispersionError("R(x) must be positive semidefinite")
        return R

    def subspace(self, x: np.ndarray) -> Tuple[int, np.ndarray, np.ndarray]:
        """
        Returns:
            (k, E, R_k): orthonormal basis E (n x k) of Ker(R)^perp and the
            trace R_k = E^T R E of R(x) on it
        """
        R = self.at(x)
        w, vectors = np.linalg.eigh(R)
        scale = max(float(np.abs(w).max()), 1.0)
        E = vectors[:, w > self.tol * scale]
        return E.shape[1], E, E.T @ R @ E


def _psi(R_k: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Psi(u) = |u| / |R u| * R u, row-wise"""
    Ru = u @ R_k.T
    return Ru * (np.linalg.norm(u, axis=1) / np.linalg.norm(Ru, axis=1))[:, None]


def _psi_inverse(R_k: np.ndarray, v: np.ndarray) -> np.ndarray:
    Rv = v @ np.linalg.inv(R_k).T
    return Rv * (np.linalg.norm(v, axis=1) / np.linalg.norm(Rv, axis=1))[:, None]


def _jacobian(R_k: np.ndarray, u: np.ndarray, step: float) -> np.ndarray:
    """|det D Psi(u)| by central differences with a step relative to |u|."""
    k = u.shape[1]
    h = step * np.linalg.norm(u, axis=1)
    columns = []
    for j in range(k):
        e = np.zeros(k)
        e[j] = 1.0
        forward = _psi(R_k, u + h[:, None] * e)
        backward = _psi(R_k, u - h[:, None] * e)
        columns.append((forward - backward) / (2 * h[:, None]))
    D = np.stack(columns, axis=2)
    return np.abs(np.linalg.det(D))


def density(R_k: np.ndarray, v: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    """h_k(v) = |R Psi^-1 v|^2 / |Psi^-1 v|^2 / J Psi(Psi^-1 v)"""
    step = CONFIG.dispersion.FD_STEP if step is None else step
    u = _psi_inverse(R_k, v)
    if not np.allclose(np.linalg.norm(_psi(R_k, u), axis=1), np.linalg.norm(v, axis=1), rtol=1e-9):
        raise DispersionError("Psi does not preserve norms")
    Ru = u @ R_k.T
    ratio = np.einsum("ij,ij->i", Ru, Ru) / np.einsum("ij,ij->i", u, u)
    return ratio / _jacobian(R_k, u, step)


@dataclass(frozen=True)
class WeightedEstimate:
    value: float
    target: float
    half_width: float
    k: int
    radii: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    @property
    def relative_error(self) -> float:
        return abs(self.value - self.target) / self.target if self.target else abs(self.value)

    def to_dict(self):
        return {
            "value": self.value,
            "target": self.target,
            "half_width": self.half_width,
            "k": self.k,
            "radii": list(self.radii),
            "values": list(self.values),
        }


def weighted_dispersion_check(spec: WeightedMeasureSpec, f: GridField, x: Point,
                              samples: int = 200_000, seed: int = 0,
                              radii: Optional[Sequence[float]] = None, batches: int = 8) -> WeightedEstimate:
    """
    p = 2 dispersion of f at x under mu_x = h_k dL_k on W_x with
    n(x) = kappa(x) k, against the closed form |R(x) grad f(x)|^2.

    The k = 0 case is the point mass at x and returns (0, 0).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] not in (2, 3):
        raise DispersionError("weighted check is defined in R^2 and R^3")
    k, E, R_k = spec.subspace(x)
    if k == 0:
        return WeightedEstimate(0.0, 0.0, 0.0, 0)
    target = float(np.sum((spec.at(x) @ f.grad(x)) ** 2))
    radii = tuple(geometric_sweep() if radii is None else radii)
    tail = CONFIG.dispersion.TAIL

    per_batch = []
    sizes = [samples // batches + (1 if i < samples % batches else 0) for i in range(batches)]
    for child, size in zip(np.random.SeedSequence(seed).spawn(batches), sizes):
        rng = np.random.default_rng(child)
        u = uniform_ball(rng, size, k)
        kappa = float(np.mean(np.einsum("ij,ij->i", u @ R_k.T, u @ R_k.T) / np.einsum("ij,ij->i", u, u)))
        v = uniform_ball(rng, size, k)
        h = density(R_k, v)
        fx = float(f(x[None, :])[0])
        row = []
        for r in radii:
            y = x + (r * v) @ E.T
            delta = (fx - f(y)) / np.linalg.norm(y - x, axis=1)
            row.append(kappa * k * float(np.mean(delta**2 * h)) / float(np.mean(h)))
        per_batch.append(row)

    table = np.array(per_batch)
    values = table.mean(axis=0)
    best = int(np.argmax(values[-tail:])) + len(radii) - tail
    spread = table[:, best].std(ddof=1) if batches > 1 else 0.0
    half_width = 1.96 * float(spread) / math.sqrt(batches)
    logger.debug("weighted dispersion k=%d value=%.6g target=%.6g", k, values[best], target)
    return WeightedEstimate(float(values[best]), target, half_width, k, radii, tuple(float(v) for v in values))


# ============================================================================
# NONLOCAL OPERATORS ON GRID NODES
# ============================================================================

def node_space(domain: GridDomain) -> FiniteSpace:
    return FiniteSpace(tuple(itertools.product(*(range(n) for n in domain.resolution))))


def uniform_grid_measure(domain: GridDomain) -> MeasureMatrix:
    """mu_x = cell volume at every node y != x (exact binary rational)"""
    space = node_space(domain)
    mass = Fraction(domain.cell_volume)
    n = space.size
    return MeasureMatrix(space, tuple(
        tuple(Fraction(0) if x == y else mass for y in range(n)) for x in range(n)
    ))


def sample_on_nodes(f: GridField, domain: GridDomain) -> ScalarField:
    """f at the cell midpoints, converted exactly to rationals."""
    values = f(domain.nodes())
    return ScalarField(node_space(domain), tuple(Fraction(float(v)) for v in values))


def nonlocal_grid_operator(mu: MeasureMatrix, f: ScalarField, phi: Optional[Phi] = None,
                           oriented: bool = True) -> ExtendedField:
    """
    The nonlocal operator with grid nodes as the finite space. Every
    function on finitely many nodes is strictly coercive, so any sample is
    in the domain.
    """
    return Nonlocal(mu, phi or PowerPhi(Fraction(1)), oriented).evaluate(f)
