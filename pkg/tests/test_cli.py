import csv
import json

import pytest

from descentlab.cli import EXIT_ERROR, build_parser, main


def run_cli(tmp_path, *argv):
    code = main([*argv, "--out", str(tmp_path)])
    return code


def read_json(tmp_path, command):
    return json.loads((tmp_path / f"{command}.json").read_text(encoding="utf-8"))


def test_audit_of_a_modulus_is_clean(tmp_path):
    assert run_cli(tmp_path, "audit", "--spec", "exafin") == 0
    doc = read_json(tmp_path, "audit")
    assert doc["command"] == "audit" and doc["seed"] == 0
    assert doc["report"]["modulus_on_grid"] is True
    assert doc["findings"]["counts"]["violation"] == 0


@pytest.mark.slow
def test_audit_of_TL_on_z9(tmp_path):
    assert run_cli(tmp_path, "audit", "--spec", "z9", "--grid", "2") == 0


def test_audit_failure_of_a_non_modulus_is_informational(tmp_path):
    assert run_cli(tmp_path, "audit", "--spec", "zn-bar") == 0
    doc = read_json(tmp_path, "audit")
    assert doc["report"]["modulus_on_grid"] is False
    sources = [f["source"] for f in doc["findings"]["findings"]]
    assert "audit.D1" in sources
    d1 = next(f for f in doc["findings"]["findings"] if f["source"] == "audit.D1")
    assert d1["severity"] == "info"
    assert d1["witness"]["x"] == "0bar"


def test_determination_counterexample_is_not_a_violation(tmp_path):
    assert run_cli(tmp_path, "determine", "--spec", "zn-bar") == 0
    report = read_json(tmp_path, "determine")["report"]["reports"][0]
    assert report["violation_count"] > 0


def test_minima_on_z9(tmp_path):
    assert run_cli(tmp_path, "minima", "--spec", "z9") == 0
    fields = read_json(tmp_path, "minima")["report"]["fields"]
    assert fields["f"]["minima"] == ["1", "2", "5", "6"]
    assert fields["f"]["critical_set"] == ["1", "2", "5", "6", "8"]


def test_critical_with_inline_operator_and_values(tmp_path):
    code = run_cli(tmp_path, "critical", "--spec", "z9", "--op", '{"op": "TLm", "m": "2"}',
                   "--f", "0,1,2,3,4,5,6,7,8")
    assert code == 0
    fields = read_json(tmp_path, "critical")["report"]["fields"]
    assert fields["0,1,2,3,4,5,6,7,8"]["critical_set"] == ["0"]


def test_pif_limit_law_from_the_top(tmp_path):
    assert run_cli(tmp_path, "pif", "--spec", "z9", "--x", "4") == 0
    report = read_json(tmp_path, "pif")["report"]
    assert {k: v for k, v in report["law"].items() if v != "0/1"} == {
        "1": "1/4", "2": "1/4", "5": "1/4", "6": "1/4",
    }
    assert report["support"] == ["1", "2", "5", "6"]


def test_simulate_writes_csv(tmp_path):
    code = run_cli(tmp_path, "simulate", "--spec", "z9", "--x", "4", "--seed", "9", "--format", "csv")
    assert code == 0
    with open(tmp_path / "simulate.csv", encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["time", "vertex"]
    assert rows[1] == ["0.0", "4"]
    assert rows[-1][1] in {"1", "2", "5", "6"}


def test_artifacts_are_reproducible(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert main(["simulate", "--spec", "z9", "--x", "0", "--seed", "3", "--out", str(out)]) == 0
    assert (first / "simulate.json").read_bytes() == (second / "simulate.json").read_bytes()


def test_classify_exafin(tmp_path):
    assert run_cli(tmp_path, "classify", "--spec", "exafin") == 0
    report = read_json(tmp_path, "classify")["report"]
    assert report["classifiable"] is False
    assert report["hypothesis_H_fails_at"] == ["0"]
    assert report["enlarges"]["ok"] is True


def test_zaxioms_on_the_truncated_operator(tmp_path):
    assert run_cli(tmp_path, "zaxioms", "--spec", "eps-trunc") == 0
    reports = {r["axiom"]: r for r in read_json(tmp_path, "zaxioms")["report"]["reports"]}
    assert reports["Z2"]["verdict"] != reports["Z1"]["verdict"]
    assert reports["Z2"]["witness"]["r"] == "1/2"


def test_dispersion_on_the_interval(tmp_path):
    assert run_cli(tmp_path, "dispersion", "--spec", "interval-quadratics", "--f", "f", "--point", "1") == 0
    estimates = read_json(tmp_path, "dispersion")["report"]["estimates"]
    assert [e["oriented"] for e in estimates] == [False, True]
    assert estimates[0]["value"] == pytest.approx(4.0, rel=0.05)


def test_ball_identity(tmp_path):
    assert run_cli(tmp_path, "ball-identity", "--samples", "200000", "--seed", "1") == 0
    report = read_json(tmp_path, "ball-identity")["report"]
    assert report["target"] == 25.0
    assert report["value"] == pytest.approx(25.0, rel=0.01)


@pytest.mark.parametrize("argv", [
    ["audit", "--spec", "z9", "--op", "nonexistent"],
    ["audit", "--spec", "z9", "--op", "{not json"],
    ["audit", "--spec", "no-such-spec"],
    ["pif", "--spec", "z9", "--x", "99"],
    ["audit", "--spec", "z9", "--cap", "10"],
    ["audit", "--spec", "interval-quadratics"],
    ["dispersion", "--spec", "z9"],
])
def test_input_errors_exit_with_2(tmp_path, argv):
    assert run_cli(tmp_path, *argv) == EXIT_ERROR


def test_x_is_required_for_markov_commands():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["pif", "--spec", "z9"])


def test_determination_of_TL_on_z9(tmp_path):
    assert run_cli(tmp_path, "determine", "--spec", "z9") == 0
    report = read_json(tmp_path, "determine")["report"]["reports"][0]
    assert report["violation_count"] == 0
    assert report["pairs"] == 3 ** 9 * (3 ** 9 + 1) // 2


def test_dispersion_csv_finest_row(tmp_path):
    code = run_cli(tmp_path, "dispersion", "--spec", "interval-quadratics", "--f", "f",
                   "--point", "1", "--format", "csv")
    assert code == 0
    with open(tmp_path / "dispersion.csv", encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    plain = [r for r in rows if r["oriented"] == "False"]
    finest = min(plain, key=lambda r: float(r["eps"]))
    assert float(finest["value"]) == pytest.approx(4.0, rel=0.01)
