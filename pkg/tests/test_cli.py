import json

import pytest

from planar_mhd.cli import equally_spaced_triples, main

SMALL = {
    "grid": {"L": 4.0, "N": 129},
    "solver": {"scheme": "explicit-rk2", "cfl": 0.9, "dt_max": 1.0, "T_end": 0.03},
    "output": {"snapshot_times": [0.01, 0.015, 0.02]},
    "diagnostics": {"output_every": 50},
    "studies": {"dilation": {"N": 65, "T_end": 0.1},
                "mms": {"levels": [33, 65, 129], "T_end": 0.02}},
}


def _write(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Two small runs differing only in the velocity bump amplitude."""
    root = tmp_path_factory.mktemp("cli")
    out = {}
    for name, amp in (("a", 0.1), ("b", 0.101)):
        doc = json.loads(json.dumps(SMALL))
        doc["bumps"] = {"u0": {"amplitude": amp}}
        cfg = _write(root / f"{name}.json", doc)
        rc = main(["simulate", cfg, "--out", str(root / name)])
        assert rc == 0
        out[name] = root / name
    out["root"] = root
    return out


class TestExitCodes:
    def test_simulate_ok(self, runs, capsys):
        rc = main(["simulate", str(runs["root"] / "a.json"), "--out", str(runs["root"] / "again")])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["final_time"] == pytest.approx(0.03, abs=1e-15)
        assert report["Jmin"] >= report["J_bound"]

    def test_invalid_config(self, tmp_path, capsys):
        rc = main(["simulate", _write(tmp_path / "c.json", {"grid": {"N": 100}})])
        assert rc == 2
        assert "grid.N" in capsys.readouterr().err

    def test_syntax_error(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"grid": ', encoding="utf-8")
        assert main(["check-data", str(path)]) == 2

    def test_numerical_abort(self, tmp_path, capsys):
        doc = json.loads(json.dumps(SMALL))
        # The bound is tiny on this grid, so lift the floor above J = 1.
        doc["solver"]["J_floor_factor"] = 1e15
        rc = main(["simulate", _write(tmp_path / "c.json", doc), "--out", str(tmp_path / "o")])
        assert rc == 3
        assert "collapsed" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["simulate", str(tmp_path / "absent.json")]) == 4

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        cfg = _write(tmp_path / "c.json", SMALL)
        assert main(["simulate", cfg, "--out", str(blocker / "run")]) == 4


class TestCheckData:
    def test_default_data_passes(self, tmp_path, capsys):
        doc = dict(SMALL, grid={"L": 16.0, "N": 2049})
        rc = main(["check-data", _write(tmp_path / "c.json", doc)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 0 and report["ok"] and report["h3_ok"]

    def test_short_domain_is_not_converged(self, tmp_path, capsys):
        rc = main(["check-data", _write(tmp_path / "c.json", SMALL)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 2 and not report["converged"]["K1"]

    def test_slow_decay_fails(self, tmp_path, capsys):
        doc = dict(SMALL, grid={"L": 16.0, "N": 2049}, density={"ell": 2.5})
        rc = main(["check-data", _write(tmp_path / "c.json", doc)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 2 and not report["h3_ok"]


class TestStudies:
    def test_dilation(self, tmp_path, capsys):
        rc = main(["dilation-test", _write(tmp_path / "c.json", SMALL)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 0 and report["pass"]
        assert 3.5 <= report["P_ratio"] <= 4.5

    def test_mms(self, tmp_path, capsys):
        rc = main(["mms", _write(tmp_path / "c.json", SMALL)])
        report = json.loads(capsys.readouterr().out)
        assert rc == 0 and len(report["errors"]) == 3
        assert report["errors"][0] > report["errors"][1] > report["errors"][2]


class TestRunTools:
    def test_residuals(self, runs, capsys):
        rc = main(["residuals", str(runs["a"] / "snapshots")])
        report = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert [row["t"] for row in report["triples"]] == pytest.approx([0.015])
        row = report["triples"][0]
        for name in ("F", "h", "H", "G", "P"):
            assert row[f"{name}_l2"] <= row[f"{name}_linf"] * 8 + 1e-300

    def test_residuals_need_triples(self, runs, tmp_path):
        doc = json.loads(json.dumps(SMALL))
        doc["output"]["snapshot_times"] = []
        cfg = _write(tmp_path / "c.json", doc)
        assert main(["simulate", cfg, "--out", str(tmp_path / "r")]) == 0
        assert main(["residuals", str(tmp_path / "r")]) == 2

    def test_compare(self, runs, capsys):
        rc = main(["compare", str(runs["a"]), str(runs["b"])])
        lines = capsys.readouterr().out.splitlines()
        assert rc == 0 and lines[0] == "t,difference"
        values = [float(line.split(",")[1]) for line in lines[1:]]
        assert len(values) == 5 and values[0] > 0

    def test_compare_with_itself(self, runs, capsys):
        main(["compare", str(runs["a"]), str(runs["a"])])
        lines = capsys.readouterr().out.splitlines()[1:]
        assert all(float(line.split(",")[1]) == 0.0 for line in lines)

    def test_compare_count_mismatch(self, runs, tmp_path):
        doc = json.loads(json.dumps(SMALL))
        doc["output"]["snapshot_times"] = [0.01]
        cfg = _write(tmp_path / "c.json", doc)
        main(["simulate", cfg, "--out", str(tmp_path / "r")])
        assert main(["compare", str(runs["a"]), str(tmp_path / "r")]) == 2


class TestTriples:
    def test_detects_equal_spacing(self):
        assert equally_spaced_triples([0.0, 0.01, 0.015, 0.02, 0.03]) == [2]

    def test_rejects_repeated_times(self):
        assert equally_spaced_triples([0.0, 0.0, 0.0]) == []
