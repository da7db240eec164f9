"""JSON space-spec documents: parsing, serialization and the packaged specs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from .dispersion import GridDomain, constant_field, quadratic_field
from .errors import DescentLabError, SpecParseError
from .exact import format_rational, parse_rational
from .finite_core import (
    FiniteSpace,
    FunctionGrid,
    Generator,
    MeasureMatrix,
    MetricMatrix,
    NeighborhoodSystem,
    ScalarField,
    validate_generator,
)

PACKAGED_SPECS = Path(__file__).resolve().parent / "specs"
DEFAULT = "default"


def as_rational(x: Any, where: str) -> Fraction:
    try:
        return parse_rational(x)
    except (ValueError, ZeroDivisionError, TypeError):
        raise SpecParseError(f"not an exact rational: {x!r}", where) from None


def as_matrix(rows: Any, where: str) -> List[List[Fraction]]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise SpecParseError("expected a list of rows", where)
    return [[as_rational(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(rows)]


@dataclass
class SpaceSpec:
    """Everything a space-spec document names, resolved to domain objects."""

    space: FiniteSpace
    generators: Dict[str, Generator] = field(default_factory=dict)
    metrics: Dict[str, MetricMatrix] = field(default_factory=dict)
    systems: Dict[str, NeighborhoodSystem] = field(default_factory=dict)
    measures: Dict[str, MeasureMatrix] = field(default_factory=dict)
    functions: Dict[str, ScalarField] = field(default_factory=dict)
    operators: Dict[str, Any] = field(default_factory=dict)
    grid_values: Optional[List[Fraction]] = None
    source: Optional[str] = None

    def generator(self, name: Optional[str] = None) -> Generator:
        return self._lookup(self.generators, name, "generator")

    def metric(self, name: Optional[str] = None) -> MetricMatrix:
        return self._lookup(self.metrics, name, "metric")

    def system(self, name: Optional[str] = None) -> NeighborhoodSystem:
        return self._lookup(self.systems, name, "neighborhood system")

    def measure(self, name: Optional[str] = None) -> MeasureMatrix:
        return self._lookup(self.measures, name, "measure")

    def function(self, name: str) -> ScalarField:
        return self._lookup(self.functions, name, "function")

    def grid(self, g: Optional[int] = None) -> FunctionGrid:
        if g is None and self.grid_values:
            return FunctionGrid(self.space, tuple(self.grid_values))
        return FunctionGrid.integers(self.space, g)

    @staticmethod
    def _lookup(table: Dict[str, Any], name: Optional[str], what: str):
        key = name or DEFAULT
        if key not in table:
            raise SpecParseError(f"unknown {what} {key!r}; known: {sorted(table)}")
        return table[key]


def load_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON document, reporting syntax errors with line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None


def resolve_spec_path(name: Union[str, Path]) -> Path:
    """A bare packaged name (``z9``) or a filesystem path."""
    candidate = Path(name)
    if candidate.exists():
        return candidate
    packaged = PACKAGED_SPECS / (candidate.name if candidate.suffix else f"{candidate.name}.json")
    if packaged.exists():
        return packaged
    raise SpecParseError(f"no spec file or packaged spec named {str(name)!r}")


def parse_space_spec(doc: Dict[str, Any], source: Optional[str] = None) -> SpaceSpec:
    if is_domain_document(doc):
        raise SpecParseError("this is a domain spec; only the dispersion command reads it", source)
    if not isinstance(doc, dict) or "vertices" not in doc:
        raise SpecParseError("a space spec needs a 'vertices' list", source)
    labels = doc["vertices"]
    if not isinstance(labels, list) or not labels:
        raise SpecParseError("'vertices' must be a nonempty list", "vertices")
    try:
        space = FiniteSpace.of(labels)
    except (ValueError, TypeError) as exc:
        raise SpecParseError(str(exc), "vertices") from None
    spec = SpaceSpec(space=space, source=source)

    try:
        generators = dict(doc.get("generators", {}))
        if "generator" in doc:
            generators[DEFAULT] = doc["generator"]
        for name, rows in generators.items():
            spec.generators[name] = parse_generator_rows(rows, space, f"generators.{name}")

        metrics = dict(doc.get("metrics", {}))
        if "metric" in doc:
            metrics[DEFAULT] = doc["metric"]
        for name, rows in metrics.items():
            spec.metrics[name] = MetricMatrix(space, tuple(map(tuple, as_matrix(rows, f"metrics.{name}"))))

        systems = dict(doc.get("systems", {}))
        if "neighborhoods" in doc:
            systems[DEFAULT] = doc["neighborhoods"]
        for name, mapping in systems.items():
            spec.systems[name] = NeighborhoodSystem.from_labels(space, mapping)

        for name, rows in doc.get("measures", {}).items():
            spec.measures[name] = MeasureMatrix(space, tuple(map(tuple, as_matrix(rows, f"measures.{name}"))))
    except SpecParseError:
        raise
    except (DescentLabError, KeyError, ValueError) as exc:
        raise SpecParseError(str(exc), source) from None

    for name, values in doc.get("functions", {}).items():
        where = f"functions.{name}"
        if isinstance(values, dict):
            try:
                values = [values[label] for label in labels]
            except KeyError as exc:
                raise SpecParseError(f"missing value for vertex {exc.args[0]!r}", where) from None
        if not isinstance(values, list) or len(values) != space.size:
            raise SpecParseError(f"expected {space.size} values", where)
        spec.functions[name] = ScalarField(space, tuple(as_rational(v, where) for v in values))

    spec.operators = dict(doc.get("operators", {}))
    grid = doc.get("grid")
    if grid is not None:
        spec.grid_values = [as_rational(v, "grid.values") for v in grid.get("values", [])]
    return spec


def load_space_spec(name: Union[str, Path]) -> SpaceSpec:
    path = resolve_spec_path(name)
    return parse_space_spec(load_document(path), str(path))


def dump_generator(generator: Generator) -> List[List[str]]:
    return [[format_rational(v) for v in row] for row in generator.matrix]


def dump_space_spec(spec: SpaceSpec) -> Dict[str, Any]:
    """Serialize back to the document shape; rationals as "p/q" strings."""
    doc: Dict[str, Any] = {"vertices": list(spec.space.labels)}
    if spec.generators:
        doc["generators"] = {name: dump_generator(g) for name, g in spec.generators.items()}
    if spec.metrics:
        doc["metrics"] = {
            name: [[format_rational(v) for v in row] for row in m.matrix] for name, m in spec.metrics.items()
        }
    if spec.systems:
        doc["systems"] = {name: d.to_labels() for name, d in spec.systems.items()}
    if spec.measures:
        doc["measures"] = {
            name: [[format_rational(v) for v in row] for row in m.matrix] for name, m in spec.measures.items()
        }
    if spec.functions:
        doc["functions"] = {name: [format_rational(v) for v in f.values] for name, f in spec.functions.items()}
    if spec.operators:
        doc["operators"] = spec.operators
    if spec.grid_values:
        doc["grid"] = {"values": [format_rational(v) for v in spec.grid_values]}
    return doc


def parse_generator_rows(rows: Sequence[Sequence[str]], space: Optional[FiniteSpace] = None,
                         where: str = "generator") -> Generator:
    if isinstance(rows, tuple):
        rows = list(rows)
    if isinstance(rows, list):
        rows = [list(row) if isinstance(row, tuple) else row for row in rows]
    return validate_generator(as_matrix(rows, where), space)


# ============================================================================
# CONTINUOUS DOMAINS
# ============================================================================

FIELD_KINDS = ("quadratic", "constant")


@dataclass
class DomainSpec:
    """Box domain, named smooth fields and query points for the dispersion layer."""

    domain: GridDomain
    fields: Dict[str, Any]
    points: List[List[float]]
    source: Optional[str] = None

    def field_named(self, name: str):
        if name not in self.fields:
            raise SpecParseError(f"unknown field {name!r}; known: {sorted(self.fields)}")
        return self.fields[name]


def _as_floats(values: Any, where: str) -> List[float]:
    if not isinstance(values, list) or not values:
        raise SpecParseError("expected a nonempty list of numbers", where)
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise SpecParseError(f"not a number list: {values!r}", where) from None


def _parse_field(raw: Any, dim: int, where: str):
    if not isinstance(raw, dict) or raw.get("kind") not in FIELD_KINDS:
        raise SpecParseError(f"field needs a 'kind' in {FIELD_KINDS}", where)
    if raw["kind"] == "constant":
        return constant_field(float(raw.get("c", 0.0)))
    A = raw.get("A", [[0.0] * dim for _ in range(dim)])
    if not isinstance(A, list) or len(A) != dim:
        raise SpecParseError(f"A must be {dim}x{dim}", f"{where}.A")
    rows = [_as_floats(row, f"{where}.A") for row in A]
    if any(len(row) != dim for row in rows):
        raise SpecParseError(f"A must be {dim}x{dim}", f"{where}.A")
    b = _as_floats(raw.get("b", [0.0] * dim), f"{where}.b")
    if len(b) != dim:
        raise SpecParseError(f"b must have {dim} entries", f"{where}.b")
    return quadratic_field(rows, b, float(raw.get("c", 0.0)), where.split(".")[-1])


def is_domain_document(doc: Any) -> bool:
    return isinstance(doc, dict) and "domain" in doc


def parse_domain_spec(doc: Dict[str, Any], source: Optional[str] = None) -> DomainSpec:
    if not is_domain_document(doc):
        raise SpecParseError("a domain spec needs a 'domain' box; space specs go to the finite commands", source)
    box = doc.get("domain")
    if not isinstance(box, dict):
        raise SpecParseError("'domain' must be an object", source)
    lower = _as_floats(box.get("lower"), "domain.lower")
    upper = _as_floats(box.get("upper"), "domain.upper")
    resolution = box.get("resolution")
    if not isinstance(resolution, list) or not all(isinstance(n, int) for n in resolution):
        raise SpecParseError("resolution must be a list of integers", "domain.resolution")
    try:
        domain = GridDomain(tuple(lower), tuple(upper), tuple(resolution))
    except DescentLabError as exc:
        raise SpecParseError(str(exc), "domain") from None
    fields = {
        name: _parse_field(raw, domain.dim, f"fields.{name}") for name, raw in doc.get("fields", {}).items()
    }
    points = [_as_floats(p, f"points[{i}]") for i, p in enumerate(doc.get("points", []))]
    for i, p in enumerate(points):
        if len(p) != domain.dim:
            raise SpecParseError(f"point has {len(p)} coordinates, expected {domain.dim}", f"points[{i}]")
    return DomainSpec(domain, fields, points, source)


def load_domain_spec(name: Union[str, Path]) -> DomainSpec:
    path = resolve_spec_path(name)
    return parse_domain_spec(load_document(path), str(path))
