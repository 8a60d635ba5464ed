import csv
import io
import json
import subprocess
import sys

import pytest

from rtwalk import __version__
from rtwalk.cli import main, parse_grid, UsageError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# manifest: ")
    manifest = json.loads(lines[0][len("# manifest: "):])
    return manifest, list(csv.reader(io.StringIO("\n".join(lines[1:]))))


def test_grid_parser():
    assert parse_grid("0:4") == [0, 1, 2, 3, 4]
    assert parse_grid("10:30:10") == [10, 20, 30]
    assert parse_grid("3,1,2") == [3, 1, 2]
    assert parse_grid("") == []
    for bad in ("1:2:0", "a:b", "1:2:3:4", "-1,2"):
        with pytest.raises(UsageError):
            parse_grid(bad)


def test_spectrum_two_step(capsys):
    code, out, err = run(capsys, "spectrum", "--n", "5", "--f", "3", "--g", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["summary"]["size"] == 36
    assert doc["result"]["summary"]["delta"] == 6
    assert doc["manifest"]["command"] == "spectrum"
    assert doc["manifest"]["version"] == __version__
    assert "|S|=36" in err


def test_spectrum_single_line(capsys):
    code, out, _ = run(capsys, "spectrum", "--b", "1,2,3", "--format", "csv")
    assert code == 0
    _, rows = read_csv(out)
    assert rows == [["eig_u", "eig_p_num", "eig_p_den", "dim"], ["0", "3", "3", "1"]]


def test_spectrum_general_vector(capsys):
    code, out, _ = run(capsys, "spectrum", "--b", "1,1,1,2,4")
    doc = json.loads(out)
    assert code == 0
    assert sum(line["dim"] for line in doc["result"]["lines"]) == doc["result"]["summary"]["size"] == 36


def test_invalid_inputs_are_usage_errors(capsys):
    assert run(capsys, "spectrum", "--b", "1,3,3")[0] == 2
    assert run(capsys, "spectrum", "--n", "5", "--f", "2", "--g", "3")[0] == 2
    assert run(capsys, "spectrum", "--n", "5")[0] == 2
    assert run(capsys, "spectrum", "--b", "1,1", "--n", "2")[0] == 2
    assert run(capsys, "verify", "--level", "bogus")[0] == 2
    assert run(capsys, "bounds", "--b", "1,1,2")[0] == 2
    assert run(capsys, "sweep", "--n", "5", "--f", "3", "--g", "2", "--meaning", "nope")[0] == 2
    code, _, err = run(capsys, "simulate", "--n", "5", "--f", "3", "--g", "2", "--t", "5", "--reps", "0")
    assert code == 2 and "reps" in err


def test_cap_exit_code(capsys, monkeypatch):
    assert run(capsys, "spectrum", "--b", "1,1,1,1,1,1", "--cap", "3")[0] == 3
    monkeypatch.setenv("RTWALK_CAP", "3")
    assert run(capsys, "spectrum", "--b", "1,1,1,1,1,1")[0] == 3
    monkeypatch.delenv("RTWALK_CAP")
    code, out, _ = run(capsys, "sweep", "--b", "1,1,1,1,1,1,1", "--meaning", "tv-exact",
                       "--t-grid", "0:1", "--cap", "100")
    assert code == 3


def test_verify_quick(capsys, tmp_path):
    out = tmp_path / "v.json"
    code, _, err = run(capsys, "verify", "--level", "quick", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["passed"] is True
    assert {c["name"] for c in doc["result"]["checks"]} >= {"return-probability-example"}
    assert "PASS return-probability-example" in err


def test_bounds_desk_scale(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "2000", "--f", "40", "--g", "20", "--c", "12")
    assert code == 0
    ev = json.loads(out)["result"]["evaluations"][0]
    assert float(ev["chi_upper_bound"]["value"]) < 4 * 2.718281828459045 ** -6
    assert ev["times"]["t_chi_upper"] > 0


def test_bounds_midpoint_only(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "50", "--f", "10", "--g", "4", "--c", "0")
    ev = json.loads(out)["result"]["evaluations"][0]
    assert code == 0 and "midpoint" in ev and "chi_upper_bound" not in ev


def test_bounds_fast_mix(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "300", "--f", "10", "--g", "1")
    doc = json.loads(out)["result"]
    assert code == 0 and "t_fast_mix" in doc
    assert any(c["meaning"] == "tv-lower-bound" for c in doc["curves"])


def test_simulate_deterministic_files(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"n": 5, "f": 3, "g": 2}, "t": 25, "reps": 2000,
                               "seed": 9, "record": [0, 25]}))
    out = tmp_path / "s.csv"
    args = ["simulate", "--config", str(cfg), "--format", "csv", "--out", str(out)]
    assert run(capsys, *args)[0] == 0
    first = out.read_bytes()
    assert run(capsys, *args, "--workers", "2")[0] == 0
    assert out.read_bytes() == first
    manifest, rows = read_csv(first.decode())
    assert manifest["seed"] == 9 and manifest["parameters"]["reps"] == 2000
    assert "workers" not in json.dumps(manifest)
    assert rows[0] == ["t", "statistic", "mean", "ci99"]


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 5, "f": 3, "g": 2, "t": 5, "reps": 10, "seed": 1}))
    code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--reps", "20")
    assert code == 0 and json.loads(out)["manifest"]["parameters"]["reps"] == 20
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "simulate", "--config", str(cfg))[0] == 2


def test_simulate_A_frequency(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "5", "--f", "3", "--g", "2", "--t", "200",
                       "--reps", "100000", "--seed", "3", "--t-grid", "200", "--stats", "in_A",
                       "--block-size", "4096")
    stat = json.loads(out)["result"]["statistics"]["in_A"]
    assert code == 0 and abs(stat["mean"][0] - 0.5) <= stat["ci99"][0]


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--b", "1,1,1,3,3", "--meaning", "chi-spectral,tv-exact",
                       "--t-grid", "0:10", "--format", "csv")
    assert code == 0
    _, rows = read_csv(out)
    assert rows[0] == ["t", "value", "kind"]
    spectral = [float(r[1]) for r in rows[1:] if r[2] == "chi-spectral"]
    assert len(spectral) == 11 and abs(spectral[0] - 35 ** 0.5) < 1e-12


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rtwalk", "spectrum", "--b", "1,1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["result"]["summary"]["size"] == 2
