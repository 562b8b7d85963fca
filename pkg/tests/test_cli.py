import csv
import json
import math

import numpy as np
import pytest

from ptscatter import __version__
from ptscatter.cli import main


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_spectrum_header_and_rows(tmp_path):
    code, out = run(tmp_path, "spectrum", "--w0", "4", "--v0", "0.3", "--cells", "1",
                    "--emin", "4.05", "--emax", "40", "--steps", "25")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "E,k,T2,RL2,RR2,residual,flag"
    rows = read_csv(out)
    assert len(rows) == 25
    assert float(rows[0]["E"]) == 4.05 and float(rows[-1]["E"]) == 40.0
    assert all(r["flag"] == "ok" for r in rows)
    meta = json.loads((tmp_path / "out.meta.json").read_text())
    assert meta["version"] == __version__
    assert meta["provenance_counts"] == {"FloquetPair": 25}
    assert "sign_convention" in meta and "fallback_flags" in meta and "timestamp" in meta


def test_spectrum_hermitian_columns(tmp_path):
    code, out = run(tmp_path, "spectrum", "--w0", "4", "--v0", "0", "--cells", "9",
                    "--emin", "4.05", "--emax", "40", "--steps", "30")
    assert code == 0
    for r in read_csv(out):
        assert abs(float(r["RL2"]) - float(r["RR2"])) < 1e-10
        assert abs(float(r["T2"]) + float(r["RL2"]) - 1) < 1e-10


def test_reruns_are_byte_identical(tmp_path):
    args = ["spectrum", "--w0", "4", "--v0", "0.8", "--cells", "2", "--steps", "12"]
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()
    sargs = ["ss-scan", "--w0", "4", "--v0", "1", "--cells", "1", "--v0min", "2.6", "--v0max", "3.0",
             "--emin", "9.5", "--emax", "11.5", "--grid", "15"]
    _, a = run(tmp_path, *sargs, name="a.json")
    _, b = run(tmp_path, *sargs, name="b.json")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("args,field", [
    (["spectrum", "--w0", "4", "--v0", "0.3", "--cells", "1", "--emin", "4"], "emin"),
    (["spectrum", "--w0", "4", "--v0", "0.3", "--cells", "1", "--steps", "1"], "steps"),
    (["spectrum", "--w0", "-1", "--v0", "0.3", "--cells", "1"], "w0"),
    (["spectrum", "--w0", "4", "--v0", "0.3", "--cells", "0"], "cells"),
    (["spectrum", "--w0", "4", "--v0", "0.3"], "cells"),
    (["ss-scan", "--w0", "4", "--v0", "1", "--cells", "1", "--v0min", "0.4"], "v0min"),
    (["ss-scan", "--w0", "4", "--v0", "1", "--cells", "1", "--format", "csv"], "format"),
    (["invisibility", "--w0", "4", "--v0", "0.5", "--cells", "1"], "cells"),
    (["invisibility", "--w0", "4", "--v0", "0.3", "--cells", "2"], "v0"),
    (["wavefield", "--w0", "4", "--v0", "0.3", "--cells", "1", "--energy", "3"], "energy"),
])
def test_invalid_config_exit_two(tmp_path, capsys, args, field):
    code, out = run(tmp_path, *args)
    err = capsys.readouterr().err
    print(err)
    assert code == 2
    assert field in err
    assert not out.exists()


def test_unknown_command_exit_two(capsys):
    assert main(["bogus", "--w0", "4"]) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"w0": 4, "v0": 0.3, "cells": 1, "steps": 7, "emax": 10}))
    code, out = run(tmp_path, "spectrum", "--config", str(cfg), "--steps", "5")
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 5
    assert float(rows[-1]["E"]) == 10.0
    cfg.write_text(json.dumps({"w0": 4, "colour": "red"}))
    assert main(["spectrum", "--config", str(cfg)]) == 2


def test_wavefield_format(tmp_path):
    code, out = run(tmp_path, "wavefield", "--w0", "4", "--v0", "0.3", "--cells", "9",
                    "--energy", "5", "--steps", "200")
    assert code == 0
    assert out.read_text().splitlines()[0] == "x,re_psi,im_psi,abs2"
    rows = read_csv(out)
    for r in rows:
        re, im, a2 = float(r["re_psi"]), float(r["im_psi"]), float(r["abs2"])
        assert abs(re * re + im * im - a2) < 1e-12 * max(1, a2)
    # beyond x = L only the transmitted wave: |psi|^2 is constant there
    right = [float(r["abs2"]) for r in rows if float(r["x"]) > 9 * math.pi]
    assert np.ptp(right) < 1e-8


def test_potential_dump(tmp_path):
    code, out = run(tmp_path, "potential", "--w0", "4", "--v0", "0.8", "--cells", "5", "--steps", "401")
    assert code == 0
    assert out.read_text().splitlines()[0] == "x,re_v,im_v"
    rows = read_csv(out)
    x = np.array([float(r["x"]) for r in rows])
    v = np.array([float(r["re_v"]) + 1j * float(r["im_v"]) for r in rows])
    L = 5 * math.pi
    outside = (x <= 0) | (x >= L)
    assert np.all(v[outside] == 4.0)
    # grid is symmetric about L/2, so sample i mirrors sample -1-i
    inside = ~outside
    assert np.max(np.abs(np.conj(v[::-1]) - v)[inside]) < 1e-9


def test_ss_scan_json_contract(tmp_path):
    code, out = run(tmp_path, "ss-scan", "--w0", "4", "--v0", "1", "--cells", "1",
                    "--v0min", "2.6", "--v0max", "3.0", "--emin", "9.5", "--emax", "11.5", "--grid", "30")
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"w0", "cells", "window", "candidates", "metadata"}
    assert doc["candidates"], "the window contains a known zero"
    for c in doc["candidates"]:
        assert set(c) == {"v0", "e", "absD", "refined"}
    best = min(doc["candidates"], key=lambda c: c["absD"])
    assert best["refined"] and abs(best["v0"] - 2.8129216614779) < 1e-8


def test_ss_scan_empty_window(tmp_path):
    code, out = run(tmp_path, "ss-scan", "--w0", "4", "--v0", "1", "--cells", "1",
                    "--v0min", "0.6", "--v0max", "0.9", "--emin", "20", "--emax", "24", "--grid", "10")
    assert code == 0
    assert json.loads(out.read_text())["candidates"] == []


def test_unitarity_report(tmp_path):
    code, out = run(tmp_path, "unitarity", "--w0", "4", "--v0", "0.3", "--cells", "1",
                    "--emin", "4.05", "--emax", "40", "--steps", "100")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["max_scaled_residual"] < 1e-8
    assert doc["checked"] == 100


def test_invisibility_report_shape(tmp_path):
    code, out = run(tmp_path, "invisibility", "--w0", "4", "--v0", "0.5", "--cells", "2",
                    "--emin", "4.5", "--emax", "8", "--steps", "3")
    assert code == 0
    doc = json.loads(out.read_text())
    for key in ("passed", "energies", "T2", "RL2", "RR2", "violations", "finite_left_count", "metadata"):
        assert key in doc
    assert len(doc["T2"]) == 3


def test_stdout_output(capsys):
    assert main(["potential", "--w0", "4", "--v0", "0.3", "--cells", "1", "--steps", "3"]) == 0
    captured = capsys.readouterr()
    assert captured.out.splitlines()[0] == "x,re_v,im_v"
    assert json.loads(captured.err)["version"] == __version__
    assert main(["unitarity", "--w0", "4", "--v0", "0.3", "--cells", "1", "--steps", "3"]) == 0
    assert "metadata" in json.loads(capsys.readouterr().out)


def test_help_prints_defaults(capsys):
    assert main(["--help"]) == 0
    text = capsys.readouterr().out
    assert "default: 4.05" in text and "default: 200" in text
