import json

import pytest

from cqnls.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def report(out):
    return json.loads(out)


class TestUsage:
    def test_sc_without_mass(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["ground-state", "sc"])
        assert exc.value.code == 2

    def test_reversed_range(self):
        with pytest.raises(SystemExit) as exc:
            main(["mc-curve", "--lo", "0.9", "--hi", "0.2"])
        assert exc.value.code == 2

    def test_unknown_suite(self):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--suite", "no-such-suite"])
        assert exc.value.code == 2

    def test_missing_file_gives_error_json(self, capsys, tmp_path):
        code, out = run(capsys, "classify", str(tmp_path / "none.field"), str(tmp_path / "none.json"))
        assert code == 1 and report(out)["error"] == "FileNotFoundError"


class TestCommands:
    def test_ground_state_q(self, capsys, tmp_path):
        path = tmp_path / "q.field"
        code, out = run(capsys, "ground-state", "q", "--tol", "1e-10", "--grid-n", "128", "--grid-l", "32", "--out", str(path))
        doc = report(out)
        assert code == 0 and path.exists()
        assert abs(doc["M_Q"] - 3.42065732) < 1e-7
        assert abs(doc["C_GN"] - 0.5 * doc["M_Q_sq"]) < 1e-12
        assert doc["grid"] == {"n_points": 128, "box_length": 32.0}

    def test_deterministic_apart_from_timestamp(self, capsys):
        _, a = run(capsys, "ground-state", "q", "--tol", "1e-8", "--grid-n", "128", "--grid-l", "32")
        _, b = run(capsys, "ground-state", "q", "--tol", "1e-8", "--grid-n", "128", "--grid-l", "32")
        da, db = report(a), report(b)
        da.pop("timestamp"), db.pop("timestamp")
        assert da == db

    def test_config_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid": {"n_points": 64, "box_length": 32.0}, "tolerances": {"shoot": 1e-6}}))
        _, out = run(capsys, "--config", str(cfg), "ground-state", "q", "--grid-n", "128")
        doc = report(out)
        assert doc["grid"] == {"n_points": 128, "box_length": 32.0} and doc["tolerance"] == 1e-6

    def test_sc_point_and_classify(self, capsys, tmp_path):
        field = tmp_path / "sc.field"
        point = tmp_path / "point.json"
        code, out = run(capsys, "ground-state", "sc", "--c", "1.7", "--mc-out", str(point), "--out", str(field))
        assert code == 0 and json.loads(point.read_text())["c"] == 1.7
        curve = tmp_path / "curve.json"
        code, out = run(capsys, "mc-curve", "--lo", "0.45", "--hi", "0.55", "--points", "3", "--out", str(curve))
        doc = report(out)
        assert code == 0 and doc["points"] == 3 and doc["strictly_decreasing"]
        _, out = run(capsys, "classify", str(field), str(curve))
        assert report(out)["status"] == "boundary/indeterminate"
        _, out = run(capsys, "classify", str(field), str(curve), "--scale", "0.9")
        doc = report(out)
        assert doc["in_A"] is True and doc["prediction"] == "scatter"
        _, out = run(capsys, "classify", str(field), str(curve), "--scale", "1.1")
        doc = report(out)
        assert doc["blowup_criterion"] is True and doc["prediction"] == "blowup"

    def test_single_point_curve(self, capsys, tmp_path):
        curve = tmp_path / "one.json"
        code, out = run(capsys, "mc-curve", "--lo", "0.5", "--points", "1", "--out", str(curve))
        assert code == 0 and report(out)["points"] == 1
        field = tmp_path / "g.json"
        from cqnls.grid import Field, make_grid, save_field
        import numpy as np

        save_field(Field.from_function(make_grid(64, 16.0), lambda X, Y: 0.5 * np.exp(-(X**2 + Y**2) / 2)), field)
        code, out = run(capsys, "classify", str(field), str(curve))
        assert code == 1 and report(out)["error"] == "CurveRangeError"

    def test_evolve_writes_trace(self, capsys, tmp_path):
        from cqnls.grid import Field, make_grid, save_field
        import numpy as np

        field = tmp_path / "g.json"
        save_field(Field.from_function(make_grid(64, 24.0), lambda X, Y: 0.5 * np.exp(-(X**2 + Y**2) / 4)), field)
        trace = tmp_path / "run.csv"
        code, out = run(capsys, "evolve", str(field), "--t-end", "0.1", "--dt", "1e-2", "--trace", str(trace))
        doc = report(out)
        assert code == 0 and trace.exists() and doc["samples"] == 2 and doc["mass_drift"] < 1e-12

    def test_verify_suite(self, capsys):
        code, out = run(capsys, "verify", "--suite", "lemma3.1", "--seed", "7")
        assert code == 0 and "lemma3.1: PASS" in out
