import csv
import io
import json
import subprocess
import sys

import pytest

from logdiv.cli import ConfigError, load_config, main

BALL = "ball_log(2, 4, [0, 0], 1)"


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _run(tmp_path, command, data, out="out.json"):
    out_path = tmp_path / out
    code = main([command, "--config", _write(tmp_path, data), "--out", str(out_path)])
    return code, out_path


class TestConfig:
    def test_defaults(self):
        cfg = load_config({"generator_id": BALL})
        assert cfg.samples == 20 and cfg.seed == 0 and cfg.output.format == "json"
        assert cfg.tol("equivalence") == 1e-12
        assert cfg.t_max("pythagoras") == 0.1

    @pytest.mark.parametrize("bad", [
        {"generator_id": BALL, "samples": 0},
        {"generator_id": BALL, "grid": {"t_max": 0}},
        {"generator_id": BALL, "grid": {"t_max": 0.3}},
        {"generator_id": BALL, "colour": "red"},
        {"generator_id": BALL, "grid": {"t_max": 0.1, "spacing": 2}},
        {"generator_id": BALL, "tolerances": {"equivalence": -1.0}},
        {"generator_id": BALL, "tolerances": {"nonsense": 1.0}},
        {"generator_id": BALL, "output": {"format": "xml"}},
        {"generator_id": BALL, "alpha": -1.0},
        {"samples": 3},
    ])
    def test_rejections(self, bad):
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_bad_config_exit_code(self, tmp_path):
        code, _ = _run(tmp_path, "equivalence", {"generator_id": BALL, "samples": 0})
        assert code == 2
        code, _ = _run(tmp_path, "equivalence", {"generator_id": "cube(2)"})
        assert code == 2


class TestCommands:
    def test_equivalence(self, tmp_path):
        code, out = _run(tmp_path, "equivalence", {"generator_id": BALL, "samples": 1000})
        doc = json.loads(out.read_text())
        assert code == 0 and doc["summary"]["pass"]
        assert doc["summary"]["max_error"] <= 1e-12
        assert len(doc["rows"]) == 1000

    def test_equivalence_fault(self, tmp_path):
        code, _ = _run(tmp_path, "equivalence", {"generator_id": BALL, "samples": 50, "inject_fault": True})
        assert code != 0

    @pytest.mark.parametrize("gid,target", [(BALL, -1.0), ("ball_log(2, 4, [0, 0], 2)", -2.0), ("quadratic(2)", 0.0)])
    def test_curvature(self, tmp_path, gid, target):
        code, out = _run(tmp_path, "curvature", {"generator_id": gid, "samples": 5})
        doc = json.loads(out.read_text())
        assert code == 0
        for row in doc["rows"]:
            assert row["sec_closed"] == pytest.approx(target, abs=1e-6)

    def test_pythagoras(self, tmp_path):
        code, out = _run(tmp_path, "pythagoras", {"generator_id": BALL, "samples": 3})
        doc = json.loads(out.read_text())
        assert code == 0
        cohorts = {r["cohort"] for r in doc["rows"]}
        assert cohorts == {"orthogonal", "non_orthogonal"}

    def test_expansion(self, tmp_path):
        code, out = _run(tmp_path, "expansion", {"generator_id": BALL, "samples": 2})
        assert code == 0
        row = json.loads(out.read_text())["rows"][0]
        assert row["claimed_c31"] == pytest.approx(-row["target_c31"])

    def test_immersion(self, tmp_path):
        code, _ = _run(tmp_path, "immersion-check", {"generator_id": BALL, "samples": 10})
        assert code == 0
        code, _ = _run(tmp_path, "immersion-check", {"generator_id": BALL, "samples": 10, "inject_fault": True})
        assert code != 0

    def test_alpha_generator_required(self, tmp_path):
        code, _ = _run(tmp_path, "immersion-check", {"generator_id": "quadratic(2)", "samples": 2})
        assert code == 2


class TestOutput:
    def test_csv(self, tmp_path):
        code, out = _run(tmp_path, "equivalence", {"generator_id": BALL, "samples": 5}, out="out.csv")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert len(rows) == 5
        assert {"index", "xi_0", "xi_1", "error", "pass"} <= set(rows[0])
        assert rows[0]["pass"] == "true"

    def test_json_schema(self, tmp_path):
        _, out = _run(tmp_path, "curvature", {"generator_id": BALL, "samples": 2})
        doc = json.loads(out.read_text())
        assert set(doc) == {"config", "rows", "summary"}
        assert doc["config"]["generator_id"] == BALL

    @pytest.mark.parametrize("command", ["equivalence", "pythagoras"])
    def test_deterministic(self, tmp_path, command):
        cfg = {"generator_id": BALL, "samples": 3, "seed": 7}
        _, a = _run(tmp_path, command, cfg, out="a.json")
        _, b = _run(tmp_path, command, cfg, out="b.json")
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override_changes_output(self, tmp_path):
        path = _write(tmp_path, {"generator_id": BALL, "samples": 3})
        main(["equivalence", "--config", path, "--out", str(tmp_path / "a.json")])
        main(["equivalence", "--config", path, "--out", str(tmp_path / "b.json"), "--seed", "1"])
        assert (tmp_path / "a.json").read_bytes() != (tmp_path / "b.json").read_bytes()

    def test_module_entry_point(self, tmp_path):
        path = _write(tmp_path, {"generator_id": BALL, "samples": 2})
        proc = subprocess.run([sys.executable, "-m", "logdiv", "equivalence", "--config", path],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["summary"]["pass"]
