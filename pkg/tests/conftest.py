"""Shared fixtures: the Z9 ring, Z_6 with 0bar, small seeded random generators."""

from fractions import Fraction

import numpy as np
import pytest

from descentlab.finite_core import FiniteSpace, generator_from_rates
from descentlab.spec_io import load_space_spec

HALF = Fraction(1, 2)


def _ring_generator(n, rate=HALF):
    space = FiniteSpace.range(n)
    rates = {}
    for x in range(n):
        rates[(x, (x + 1) % n)] = rate
        rates[(x, (x - 1) % n)] = rate
    return generator_from_rates(space, rates)


@pytest.fixture
def ring():
    """Nearest-neighbour ring generator on n vertices."""
    return _ring_generator


@pytest.fixture
def z9_spec():
    return load_space_spec("z9")


@pytest.fixture
def z9_generator(z9_spec):
    return z9_spec.generator()


@pytest.fixture
def z9_field(z9_spec):
    return z9_spec.function("f")


@pytest.fixture
def zn_spec():
    return load_space_spec("zn-bar")


@pytest.fixture
def exafin_spec():
    return load_space_spec("exafin")


@pytest.fixture
def eps_trunc_spec():
    return load_space_spec("eps-trunc")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_generator(rng):
    """Generator on 4 vertices with rates in {0, 1/2, 1, 2}, about half the edges present."""
    def build(n=4):
        space = FiniteSpace.range(n)
        choices = [Fraction(0), HALF, Fraction(1), Fraction(2)]
        rates = {
            (x, y): choices[int(rng.integers(0, len(choices)))]
            for x in range(n) for y in range(n) if x != y
        }
        return generator_from_rates(space, rates)
    return build

