import json

import numpy as np
import pytest

from toruslab import __version__
from toruslab.cli import main
from toruslab.io import read_json, read_table, sha256_file


def test_baker_spectrum(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["baker-spectrum", "--N", "16", "--out", str(out)]) == 0
    header, data = read_table(out, "spectrum")
    assert data.shape[0] == 16
    assert np.all(data[:, header.index("residual")] < 1e-9)


def test_baker_odd_dimension_is_a_domain_error(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["baker-spectrum", "--N", "15", "--out", str(out)]) == 3
    assert "even" in capsys.readouterr().err
    # the manifest of a failed run still records the exit code
    doc = read_json(str(out) + ".manifest.json", "toruslab-manifest/1")
    assert doc["exit_code"] == 3 and doc["outputs"] == []


def test_usage_errors(tmp_path):
    assert main(["baker-spectrum", "--N", "16", "--bogus"]) == 2
    assert main([]) == 2
    out = tmp_path / "q.json"
    assert main(["qvariance", "--N", "8", "--obs", "cos(2pi*(1x", "--out", str(out)]) == 2
    assert not (tmp_path / "q.json.manifest.json").exists()


def test_missing_input_is_an_io_error(tmp_path):
    assert main(["husimi", "--state", str(tmp_path / "nope.tqs"), "--out", str(tmp_path / "h.pgm")]) == 4


def test_manifest_fields(tmp_path):
    out = tmp_path / "s.tqs"
    argv = ["state", "--kind", "random", "--N", "12", "--seed", "5", "--out", str(out)]
    assert main(argv) == 0
    doc = read_json(str(out) + ".manifest.json", "toruslab-manifest/1")
    assert doc["argv"] == argv and doc["command"] == "state" and doc["seed"] == 5
    assert doc["tool_version"] == __version__ and doc["inputs"] == [] and doc["exit_code"] == 0
    assert doc["wall_time_s"] >= 0
    digests = {d["path"]: d["sha256"] for d in doc["outputs"]}
    assert digests[str(out)] == sha256_file(out)


def test_state_then_husimi_records_inputs(tmp_path):
    s, h = tmp_path / "s.tqs", tmp_path / "h.pgm"
    assert main(["state", "--kind", "coherent", "--N", "16", "--x", "0.25", "--p", "0.5", "--out", str(s)]) == 0
    assert main(["husimi", "--state", str(s), "--grid", "32", "--out", str(h)]) == 0
    doc = read_json(str(h) + ".manifest.json", "toruslab-manifest/1")
    assert doc["inputs"][0]["sha256"] == sha256_file(s)
    meta = read_json(str(h) + ".json", "toruslab-husimi/1")
    assert meta["M"] == 32


def test_zeros_with_reconstruction_check(tmp_path):
    s, z = tmp_path / "s.tqs", tmp_path / "z.csv"
    assert main(["state", "--kind", "random", "--N", "16", "--seed", "2", "--out", str(s)]) == 0
    assert main(["zeros", "--state", str(s), "--check-reconstruction", "--out", str(z)]) == 0
    _, data = read_table(z, "zeros")
    assert data[:, 2].sum() == 16
    check = read_json(str(z) + ".json", "toruslab-zeros-check/1")
    assert check["passed"] and check["max_deviation"] < 1e-6


def test_nodal_census_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["rwm-nodal", "--k", "60", "--samples", "3", "--seed", "4", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["counts"]) == 3


def test_replay(tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["torus-nodal", "--N", "20", "--samples", "200", "--seed", "1", "--out", str(out)]) == 0
    manifest = str(out) + ".manifest.json"
    before = open(manifest).read()
    assert main(["replay", manifest]) == 0
    assert "replay ok" in capsys.readouterr().out
    assert open(manifest).read() == before
    # a recorded digest that no longer matches is reported
    doc = json.loads(before)
    doc["outputs"][0]["sha256"] = "0" * 64
    open(manifest, "w").write(json.dumps(doc))
    assert main(["replay", manifest]) == 3


def test_replay_detects_changed_input(tmp_path):
    s, h = tmp_path / "s.tqs", tmp_path / "h.pgm"
    main(["state", "--kind", "position", "--N", "8", "--index", "3", "--out", str(s)])
    main(["husimi", "--state", str(s), "--grid", "16", "--out", str(h)])
    main(["state", "--kind", "position", "--N", "8", "--index", "4", "--out", str(s)])
    assert main(["replay", str(h) + ".manifest.json"]) == 4


@pytest.mark.parametrize("argv", [
    ["scar-scan", "--nmax", "30"],
    ["half-scar", "--N", "19", "--grid", "64"],
    ["ldos", "--N", "32"],
    ["cat-spectrum", "--N", "12", "--eps", "0.1"],
    ["rwm-field", "--k", "40", "--periodic"],
])
def test_commands_run(tmp_path, argv):
    out = tmp_path / "o.dat"
    assert main(argv + ["--out", str(out)]) == 0
    assert out.exists()
