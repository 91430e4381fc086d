import json
import math
from importlib import resources

import pytest

from dichospec.cli import main
from dichospec.scenario import (
    Scenario,
    ScenarioError,
    canonical_json,
    load_scenario,
)

SCENARIO_DIR = resources.files("dichospec") / "scenarios"


def bundled(name):
    with resources.as_file(SCENARIO_DIR / f"{name}.json") as p:
        return str(p)


def write_scenario(tmp_path, name, payload):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(payload))
    return str(path)


def small_diag_payload(**analysis):
    base = {"bohl_window": 512, "samples": 6, "samples_per_fiber": 4}
    base.update(analysis)
    return {
        "name": "diag-small",
        "system": {"kind": "diagonal", "entries": [
            {"kind": "constant", "value": 2.0},
            {"kind": "constant", "value": 0.5},
        ]},
        "analysis": base,
    }


# -- canonical serialization ---------------------------------------------------


def test_canonical_json_is_key_order_independent():
    a = canonical_json({"x": 1, "y": {"b": 2.5, "a": [1.0, 2]}})
    b = canonical_json({"y": {"a": [1.0, 2], "b": 2.5}, "x": 1})
    assert a == b


def test_canonical_json_keeps_float_identity():
    text = canonical_json({"pi": math.pi, "one": 1.0, "n": 3})
    decoded = json.loads(text)
    assert decoded["pi"] == math.pi  # 17 significant digits round-trip
    assert isinstance(decoded["one"], float)
    assert isinstance(decoded["n"], int)


def test_canonical_json_rejects_non_finite():
    with pytest.raises(ValueError):
        canonical_json({"x": float("inf")})


# -- scenarios -----------------------------------------------------------------


def test_bundled_scenarios_load_and_round_trip():
    for entry in sorted(p.name for p in SCENARIO_DIR.iterdir()
                        if p.name.endswith(".json")):
        name = entry[: -len(".json")]
        scn = load_scenario(bundled(name))
        assert scn.name == name
        again = Scenario.from_payload(json.loads(scn.dumps()))
        assert again.dumps() == scn.dumps()


def test_scenario_defaults_and_overrides(tmp_path):
    path = write_scenario(tmp_path, "diag-small", small_diag_payload())
    scn = load_scenario(path)
    assert scn.analysis["refine_tol"] == 1e-3  # default fills the gap
    assert scn.analysis["bohl_window"] == 512
    bumped = scn.with_overrides(refine_tol=5e-4, seed=None)
    assert bumped.analysis["refine_tol"] == 5e-4
    assert bumped.analysis["seed"] == scn.analysis["seed"]  # None is "keep"
    with pytest.raises(ScenarioError):
        scn.with_overrides(not_a_field=1)


def test_scenario_rejects_unknown_fields(tmp_path):
    payload = small_diag_payload()
    payload["analysis"]["mystery"] = 1
    with pytest.raises(ScenarioError):
        load_scenario(write_scenario(tmp_path, "bad", payload))
    payload = small_diag_payload()
    payload["output"] = {"format": "xml"}
    with pytest.raises(ScenarioError):
        load_scenario(write_scenario(tmp_path, "bad2", payload))


def test_scenario_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(str(path))


# -- CLI commands ----------------------------------------------------------------


def test_cli_spectrum_writes_artifacts(tmp_path, capsys):
    rc = main(["spectrum", bundled("autonomous-diagonal"),
               "--out", str(tmp_path), "--format", "json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    artifact = json.loads((tmp_path / "autonomous-diagonal-spectrum.json").read_text())
    assert artifact == doc
    assert (tmp_path / "autonomous-diagonal-spectrum.csv").exists()
    assert artifact["gap_ranks"] == [0, 1, 2]
    lows = [iv["lower"] for iv in artifact["intervals"]]
    assert lows[0] == pytest.approx(0.5, abs=5e-3)
    assert lows[1] == pytest.approx(2.0, abs=5e-3)


def test_cli_spectrum_piecewise(tmp_path):
    rc = main(["spectrum", bundled("piecewise-scalar"), "--out", str(tmp_path),
               "--format", "table"])
    assert rc == 0
    artifact = json.loads((tmp_path / "piecewise-scalar-spectrum.json").read_text())
    assert len(artifact["intervals"]) == 1
    iv = artifact["intervals"][0]
    assert iv["lower"] == pytest.approx(0.5, abs=5e-3)
    assert iv["upper"] == pytest.approx(2.0, abs=5e-3)


def test_cli_bohl_window_flag_targets_bohl(tmp_path, capsys):
    rc = main(["bohl", bundled("autonomous-diagonal"), "--xi", "1,0",
               "--window", "512", "--out", str(tmp_path), "--format", "json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["params"]["window"] == 512
    assert doc["upper"] == pytest.approx(2.0, rel=1e-9)
    assert doc["lower"] == pytest.approx(2.0, rel=1e-9)


def test_cli_dichotomy_and_bundles(tmp_path):
    rc = main(["dichotomy", bundled("autonomous-diagonal"), "--gamma", "1.0",
               "--out", str(tmp_path), "--format", "table"])
    assert rc == 0
    verdict = json.loads((tmp_path / "autonomous-diagonal-dichotomy.json").read_text())
    assert verdict["outcome"] == "certificate"
    assert verdict["rank"] == 1

    rc = main(["bundles", bundled("autonomous-diagonal"),
               "--out", str(tmp_path), "--format", "table"])
    assert rc == 0
    doc = json.loads((tmp_path / "autonomous-diagonal-bundles.json").read_text())
    assert [f["dimension"] for f in doc["fibers"]] == [1, 1]
    assert doc["whitney"]["passed"] is True


def test_cli_oracle_periodic_scalar(tmp_path, capsys):
    rc = main(["oracle", bundled("periodic-scalar"), "--out", str(tmp_path),
               "--format", "json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["points"] == [1.0]


def test_cli_triangularize(tmp_path):
    rc = main(["triangularize", bundled("triangular-constant"),
               "--out", str(tmp_path), "--format", "table"])
    assert rc == 0
    doc = json.loads((tmp_path / "triangular-constant-triangularize.json").read_text())
    assert doc["residual_max"] <= 1e-10
    assert doc["orthogonality_max"] <= 1e-12


def test_cli_verify_is_deterministic(tmp_path):
    scn = write_scenario(tmp_path, "diag-small", small_diag_payload())
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", scn, "--out", str(out_a), "--format", "table"]) == 0
    assert main(["verify", scn, "--out", str(out_b), "--format", "table"]) == 0
    name_json = "diag-small-verify.json"
    name_csv = "diag-small-verify.csv"
    assert (out_a / name_json).read_bytes() == (out_b / name_json).read_bytes()
    assert (out_a / name_csv).read_bytes() == (out_b / name_csv).read_bytes()
    doc = json.loads((out_a / name_json).read_text())
    statuses = {c["check"]: c["status"] for c in doc["reports"]}
    assert statuses == {"fiber-containment": "pass",
                        "global-containment": "pass",
                        "endpoint-attainability": "pass"}


def test_cli_verify_fails_loudly_on_impossible_tolerance(tmp_path):
    payload = small_diag_payload(tolerance=1e-15, bohl_window=256)
    scn = write_scenario(tmp_path, "diag-small", payload)
    rc = main(["verify", scn, "--out", str(tmp_path), "--format", "table"])
    assert rc == 1


def test_cli_exit_codes(tmp_path):
    # usage errors
    assert main(["spectrum"]) == 2
    assert main(["no-such-command", "x.json"]) == 2
    assert main(["spectrum", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "system": {"kind": "wat"}}')
    assert main(["spectrum", str(bad)]) == 2
    # validation errors inside the analysis
    assert main(["oracle", bundled("piecewise-scalar"), "--out", str(tmp_path)]) == 3
    assert main(["dichotomy", bundled("autonomous-diagonal"), "--gamma", "-2",
                 "--out", str(tmp_path)]) == 3
    # help is not an error
    assert main(["--help"]) == 0
