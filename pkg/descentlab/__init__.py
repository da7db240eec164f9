"""
descentlab: descent moduli on finite spaces, their critical sets, the
descent dynamics of Markov generators and the continuous dispersion limits.
"""

from .errors import DescentLabError
from .exact import INF
from .finite_core import (
    ExtendedField,
    FiniteSpace,
    FunctionGrid,
    Generator,
    MeasureMatrix,
    MetricMatrix,
    NeighborhoodSystem,
    ScalarField,
)
from .operators import compose_operators
from .spec_io import load_domain_spec, load_space_spec

__version__ = "0.1.0"

__all__ = [
    "DescentLabError",
    "INF",
    "ExtendedField",
    "FiniteSpace",
    "FunctionGrid",
    "Generator",
    "MeasureMatrix",
    "MetricMatrix",
    "NeighborhoodSystem",
    "ScalarField",
    "compose_operators",
    "load_domain_spec",
    "load_space_spec",
]
