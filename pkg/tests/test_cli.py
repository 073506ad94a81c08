import csv
import json

import pytest

from grwkit.errors import ScenarioError
from grwkit.veritool import cli
from grwkit.veritool.runner import RESIDUAL_HEADER, execute
from grwkit.veritool.scenario import load_scenario, parse_scenario, with_overrides

TORUS = {
    "name": "torus-graph",
    "spacetime": {"warping": {"kind": "exp", "params": {"c": 1.0, "lam": 0.5}},
                  "fiber": {"kind": "torus", "dim": 2}},
    "surface": {"kind": "graph", "t0": 0.0,
                "coeffs": [{"term": ["cos", [1, 0]], "c": 0.05},
                           {"term": ["sin", [1, 1]], "c": -0.03}]},
    "checks": ["geometry", {"check": "minkowski", "formulas": ["mf1", "mf2"],
                            "levels": [2, 3, 4]}],
    "grid": {"level": 3},
}


def write(tmp_path, obj, name="s.scn"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return path


def test_round_trip(tmp_path):
    scn = parse_scenario(json.dumps(TORUS))
    again = parse_scenario(scn.dumps())
    assert again == scn
    assert again.dumps() == scn.dumps()


def test_unknown_key_has_location():
    text = json.dumps(dict(TORUS, colour="red"), indent=2)
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    assert info.value.line is not None and info.value.column is not None
    assert "colour" in str(info.value)


def test_malformed_json_has_location():
    with pytest.raises(ScenarioError) as info:
        parse_scenario('{\n  "checks": [\n    "ncc",,\n  ]\n}')
    assert info.value.line == 3


@pytest.mark.parametrize("patch", [
    {"surface": {"kind": "slice"}},
    {"checks": []},
    {"grid": {"level": 0}},
    {"orientation": "sideways"},
    {"checks": [{"check": "minkowski", "formulas": ["mf9"]}]},
    {"checks": [{"check": "teleport"}]},
    {"spacetime": {"warping": {"kind": "cosh", "params": {"b": 1}},
                   "fiber": {"kind": "sphere", "dim": 2}}},
])
def test_invalid_scenarios(patch):
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(dict(TORUS, **patch)))


def test_seed_override_reaches_random_surface():
    raw = dict(TORUS, surface={"kind": "random", "t0": 0.0, "amplitude": 0.05,
                                "degree": 2, "seed": 1})
    scn = with_overrides(parse_scenario(json.dumps(raw)), level=2, seed=9)
    assert scn.surface["seed"] == 9 and scn.level == 2


def test_identities_makes_no_geometry_evaluations(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["identities", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["summary"]["geometry_evaluations"] == 0
    assert report["summary"]["exit_code"] == 0


def test_bundled_de_sitter_slice(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--scenario", "desitter-slice.scn", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["summary"]["failed"] == []
    assert report["summary"]["inconsistent_with_paper"] == 0
    with (out / "residuals.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == RESIDUAL_HEADER and len(rows) > 1
    for row in rows[1:]:
        assert abs(float(row[4])) <= 1e-5
    printed = capsys.readouterr().out
    assert "theorem" in printed and "report:" in printed


def test_reports_are_deterministic(tmp_path):
    path = write(tmp_path, TORUS)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["geometry", "--scenario", str(path), "--out", str(a)]) == 0
    assert cli.main(["geometry", "--scenario", str(path), "--out", str(b)]) == 0
    for name in ("report.json", "residuals.csv", "residuals_general.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_minkowski_family_on_torus_graph(tmp_path):
    path = write(tmp_path, TORUS)
    out = tmp_path / "m"
    assert cli.main(["minkowski", "--scenario", str(path), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert [r["check"] for r in report["results"]] == ["minkowski"]


def test_cli_error_exits(tmp_path, capsys):
    bad = write(tmp_path, '{"checks": [}')
    assert cli.main(["run", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "line 1" in capsys.readouterr().err
    unknown = write(tmp_path, json.dumps(dict(TORUS, extra=1), indent=2), "u.scn")
    assert cli.main(["run", "--scenario", str(unknown), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["run", "--scenario", str(tmp_path / "missing.scn"),
                     "--out", str(tmp_path / "o")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["geometry"])
    with pytest.raises(SystemExit):
        cli.main(["identities", "--seed", "-1"])


def test_theorem_family_without_theorem_checks(tmp_path):
    path = write(tmp_path, TORUS)
    assert cli.main(["theorem", "--scenario", str(path), "--out", str(tmp_path / "t")]) == 2


def test_unsupported_check_is_reported_not_raised():
    raw = {
        "spacetime": {"warping": {"kind": "cosh"}, "fiber": {"kind": "perturbed-sphere", "dim": 2}},
        "surface": {"kind": "slice", "t0": 0.5},
        "checks": ["constant-curvature"],
        "grid": {"level": 2},
    }
    result = execute(parse_scenario(json.dumps(raw)))
    res = result.report["results"][0]
    assert res["status"] == "error" and res["error"] == "unsupported"
    assert result.exit_code == 1


def test_list_and_bundled_scenarios_parse(capsys):
    assert cli.main(["list"]) == 0
    names = capsys.readouterr().out.split()
    assert "desitter-slice.scn" in names and "identities.scn" in names
    for name in names:
        load_scenario(cli._resolve(name))
