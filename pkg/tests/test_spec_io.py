import json
from fractions import Fraction

import pytest

from descentlab.errors import SpecParseError
from descentlab.spec_io import (
    dump_space_spec,
    is_domain_document,
    load_document,
    load_domain_spec,
    load_space_spec,
    parse_domain_spec,
    parse_generator_rows,
    parse_space_spec,
)


@pytest.mark.parametrize("name", ["z9", "zn-bar", "exafin", "eps-trunc"])
def test_packaged_space_specs_load(name):
    spec = load_space_spec(name)
    assert spec.space.size >= 3
    assert "default" in spec.operators
    assert spec.grid().count == len(spec.grid_values) ** spec.space.size


def test_z9_contents(z9_spec):
    assert z9_spec.space.labels == tuple(range(9))
    assert z9_spec.function("f").values == tuple(Fraction(v) for v in [1, 0, 0, 1, 2, 1, 1, 2, 1])
    assert z9_spec.generator().rate(0, 1) == Fraction(1, 2)


def test_unknown_names_are_reported(z9_spec):
    with pytest.raises(SpecParseError, match="unknown function"):
        z9_spec.function("nope")
    with pytest.raises(SpecParseError):
        load_space_spec("no-such-spec")


def test_syntax_errors_carry_line_and_column(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "vertices": [0, 1,\n}\n', encoding="utf-8")
    with pytest.raises(SpecParseError) as info:
        load_document(path)
    assert info.value.where.startswith(f"{path}:3:")


def test_semantic_errors_name_their_location():
    with pytest.raises(SpecParseError, match="vertices"):
        parse_space_spec({"generator": []})
    with pytest.raises(SpecParseError) as info:
        parse_space_spec({"vertices": [0, 1], "functions": {"f": [0, "x"]}})
    assert info.value.where == "functions.f"
    with pytest.raises(SpecParseError) as info:
        parse_space_spec({"vertices": ["a", "b"], "functions": {"f": {"a": 1}}})
    assert info.value.where == "functions.f"
    with pytest.raises(SpecParseError):
        parse_space_spec({"vertices": [0, 1], "generator": [["-1", "1"], ["0", "1"]]})
    with pytest.raises(SpecParseError):
        parse_space_spec({"vertices": [0, 0]})


def test_function_mapping_form():
    spec = parse_space_spec({"vertices": ["a", "b"], "functions": {"f": {"b": "1/3", "a": 2}}})
    assert spec.function("f").values == (Fraction(2), Fraction(1, 3))


def test_dump_reloads_to_the_same_objects(zn_spec):
    doc = json.loads(json.dumps(dump_space_spec(zn_spec)))
    again = parse_space_spec(doc)
    assert again.space == zn_spec.space
    assert again.generator().matrix == zn_spec.generator().matrix
    assert again.functions == zn_spec.functions
    assert again.operators == zn_spec.operators
    assert again.grid_values == zn_spec.grid_values


def test_generator_rows_from_strings():
    L = parse_generator_rows([["-1", "1"], ["1/2", "-1/2"]])
    assert L.exit_rate(1) == Fraction(1, 2)


def test_domain_spec():
    spec = load_domain_spec("interval-quadratics")
    assert spec.domain.resolution == (4096,)
    assert sorted(spec.fields) == ["f", "g"]
    assert spec.points == [[1.0], [0.5]]
    with pytest.raises(SpecParseError):
        spec.field_named("h")


def test_domain_spec_errors():
    box = {"lower": [0, 0], "upper": [1, 1], "resolution": [32, 32]}
    assert is_domain_document({"domain": box})
    assert not is_domain_document({"vertices": [0]})
    with pytest.raises(SpecParseError):
        parse_domain_spec({"domain": dict(box, resolution=[8, 8])})
    with pytest.raises(SpecParseError):
        parse_domain_spec({"domain": box, "points": [[0.5]]})
    with pytest.raises(SpecParseError):
        parse_domain_spec({"domain": box, "fields": {"f": {"kind": "cubic"}}})
    with pytest.raises(SpecParseError):
        parse_domain_spec({"domain": box, "fields": {"f": {"kind": "quadratic", "A": [[1, 0]]}}})


def test_space_and_domain_documents_are_not_interchangeable():
    box = {"lower": [0], "upper": [1], "resolution": [64]}
    with pytest.raises(SpecParseError, match="domain spec"):
        parse_space_spec({"domain": box, "vertices": [0, 1]})
    with pytest.raises(SpecParseError, match="'domain' box"):
        parse_domain_spec({"vertices": [0, 1]})


def test_generator_errors_carry_their_location():
    doc = {"vertices": ["a", "b"], "generators": {"slow": [["-1", "1"], ["x", "0"]]}}
    with pytest.raises(SpecParseError) as info:
        parse_space_spec(doc)
    assert "generators.slow[1][0]" in str(info.value)
