"""
DESCENTLAB - EXTENDED NONNEGATIVE NUMBERS

Values taken by descent operators: exact rationals (``Fraction``), the
``INF`` marker, exact surds ``q**(1/k)`` and, as a last resort, interval
enclosures with exact rational bounds.  Zero is always the rational 0.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from mpmath.ctx_iv import MPIntervalContext
from mpmath.libmp import to_rational

from .moduli_config import CONFIG

ZERO = Fraction(0)
ONE = Fraction(1)


# ============================================================================
# MARKERS AND TYPES
# ============================================================================

class _Infinity:
    """The +inf marker of an extended field. Never a large sentinel."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


@dataclass(frozen=True)
class Surd:
    """Exact positive real ``power ** (1/index)``; build it through :func:`root`."""

    power: Fraction
    index: int

    def __float__(self) -> float:
        return float(self.power) ** (1.0 / self.index)


@dataclass(frozen=True)
class Interval:
    """Enclosure [lo, hi] of a positive irrational value."""

    lo: Fraction
    hi: Fraction

    def __float__(self) -> float:
        return float((self.lo + self.hi) / 2)


Value = Union[Fraction, Surd, Interval, _Infinity]


# ============================================================================
# INTEGER ROOTS
# ============================================================================

def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _exact_root(q: Fraction, k: int):
    num = _iroot(q.numerator, k)
    if num ** k != q.numerator:
        return None
    den = _iroot(q.denominator, k)
    if den ** k != q.denominator:
        return None
    return Fraction(num, den)


def _prime_factors(k: int) -> list[int]:
    factors, p = [], 2
    while p * p <= k:
        while k % p == 0:
            factors.append(p)
            k //= p
        p += 1
    if k > 1:
        factors.append(k)
    return factors


def root(q: Fraction, k: int) -> Value:
    """Canonical exact value of ``q ** (1/k)`` (q >= 0, k >= 1)."""
    q = Fraction(q)
    if q < 0:
        raise ValueError(f"root of negative value {q}")
    if q == 0 or k == 1:
        return q
    while k > 1:
        for p in _prime_factors(k):
            reduced = _exact_root(q, p)
            if reduced is not None:
                q, k = reduced, k // p
                break
        else:
            break
    if k == 1:
        return q
    return Surd(q, k)


# ============================================================================
# INTERVAL ENCLOSURES
# ============================================================================

_IV = MPIntervalContext()
_IV_LOCK = threading.Lock()


def _iv_of(value: Value):
    if isinstance(value, Fraction):
        return _IV.mpf(value.numerator) / value.denominator
    if isinstance(value, Surd):
        base = _IV.mpf(value.power.numerator) / value.power.denominator
        return base ** (_IV.mpf(1) / value.index)
    if isinstance(value, Interval):
        lo = _IV.mpf(value.lo.numerator) / value.lo.denominator
        hi = _IV.mpf(value.hi.numerator) / value.hi.denominator
        return _IV.make_mpf((lo._mpi_[0], hi._mpi_[1]))
    raise TypeError(f"no enclosure for {value!r}")


def _from_iv(x) -> Interval:
    a, b = x._mpi_
    return Interval(Fraction(*to_rational(a)), Fraction(*to_rational(b)))


def enclose(value: Value) -> Interval:
    """Rational enclosure of a finite value at the configured precision."""
    if isinstance(value, Interval):
        return value
    if isinstance(value, Fraction):
        return Interval(value, value)
    with _IV_LOCK:
        _IV.prec = CONFIG.exact.INTERVAL_BITS
        return _from_iv(_iv_of(value))


# ============================================================================
# ARITHMETIC
# ============================================================================

def is_zero(value: Value) -> bool:
    return isinstance(value, Fraction) and value == 0


def is_finite(value: Value) -> bool:
    return value is not INF


def add(a: Value, b: Value) -> Value:
    if a is INF or b is INF:
        return INF
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    if isinstance(a, Surd) and a == b:
        return scale(Fraction(2), a)
    ea, eb = enclose(a), enclose(b)
    return Interval(ea.lo + eb.lo, ea.hi + eb.hi)


def add_all(values: Iterable[Value]) -> Value:
    total: Value = ZERO
    for value in values:
        total = add(total, value)
    return total


def scale(r: Fraction, value: Value) -> Value:
    """r * value with r >= 0 and the convention 0 * INF = 0."""
    if r < 0:
        raise ValueError(f"negative scale {r}")
    if r == 0:
        return ZERO
    if value is INF:
        return INF
    if isinstance(value, Fraction):
        return r * value
    if isinstance(value, Surd):
        return root(r ** value.index * value.power, value.index)
    return Interval(r * value.lo, r * value.hi)


def power(value: Value, p: Fraction) -> Value:
    """value ** p for rational p > 0, INF ** p = INF."""
    p = Fraction(p)
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {p}")
    if value is INF:
        return INF
    if is_zero(value):
        return ZERO
    if isinstance(value, Fraction):
        return root(value ** p.numerator, p.denominator)
    if isinstance(value, Surd):
        return root(value.power ** p.numerator, value.index * p.denominator)
    with _IV_LOCK:
        _IV.prec = CONFIG.exact.INTERVAL_BITS
        exponent = _IV.mpf(p.numerator) / p.denominator
        return _from_iv(_iv_of(value) ** exponent)


# ============================================================================
# COMPARISON
# ============================================================================

def _rational_power(value: Union[Fraction, Surd], n: int) -> Fraction:
    """value ** n for n a multiple of the surd index."""
    if isinstance(value, Fraction):
        return value ** n
    return value.power ** (n // value.index)


def compare(a: Value, b: Value) -> int:
    """
    Three-way comparison of extended values.

    Rationals and surds compare exactly. Anything involving an Interval is
    decided by disjoint bounds and overlapping enclosures compare equal.
    """
    if a is INF or b is INF:
        if a is b:
            return 0
        return 1 if a is INF else -1
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a > b) - (a < b)
    if not isinstance(a, Interval) and not isinstance(b, Interval):
        ka = a.index if isinstance(a, Surd) else 1
        kb = b.index if isinstance(b, Surd) else 1
        n = math.lcm(ka, kb)
        pa, pb = _rational_power(a, n), _rational_power(b, n)
        return (pa > pb) - (pa < pb)
    ea, eb = enclose(a), enclose(b)
    if ea.hi < eb.lo:
        return -1
    if eb.hi < ea.lo:
        return 1
    return 0


def equal(a: Value, b: Value) -> bool:
    return compare(a, b) == 0


def maximum(values: Iterable[Value]) -> Value:
    best: Value = ZERO
    for value in values:
        if compare(value, best) > 0:
            best = value
    return best


def minimum(values: Iterable[Value]) -> Value:
    values = list(values)
    if not values:
        raise ValueError("minimum of an empty family")
    best = values[0]
    for value in values[1:]:
        if compare(value, best) < 0:
            best = value
    return best


def scale_power(r: Fraction, p: Fraction, value: Value) -> Value:
    """r**p * value, kept exact whenever r**p is a surd."""
    factor = power(Fraction(r), p)
    if isinstance(factor, Fraction):
        return scale(factor, value)
    if value is INF:
        return INF
    if is_zero(value):
        return ZERO
    if isinstance(value, Fraction):
        return scale(value, factor)
    if isinstance(value, Surd) and isinstance(factor, Surd):
        n = math.lcm(value.index, factor.index)
        return root(_rational_power(value, n) * _rational_power(factor, n), n)
    ef, ev = enclose(factor), enclose(value)
    return Interval(ef.lo * ev.lo, ef.hi * ev.hi)


# ============================================================================
# SERIALIZATION
# ============================================================================

def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: Union[str, int, Fraction]) -> Fraction:
    """Parse "p/q", an integer or a decimal string exactly."""
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        raise ValueError(f"floats are not exact rationals: {text!r}")
    return Fraction(str(text).strip())


def format_value(value: Value) -> str:
    if value is INF:
        return "inf"
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, Surd):
        return f"root({format_rational(value.power)},{value.index})"
    return f"[{format_rational(value.lo)},{format_rational(value.hi)}]"


def value_key(value: Value) -> tuple:
    """Hashable canonical key; intervals collapse to a rounded midpoint."""
    if value is INF:
        return ("inf",)
    if isinstance(value, Fraction):
        return ("q", value)
    if isinstance(value, Surd):
        return ("s", value.power, value.index)
    return ("i", round(float(value), 12))

