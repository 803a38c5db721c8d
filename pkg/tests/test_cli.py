"""End-to-end runs of the command-line driver."""

import json

import numpy as np
import pytest

from lamlab.cli import main

BASE = {
    "model": {},
    "omega": "golden",
    "eps": "eps1/2",
    "p": [0.3, 0.7],
    "window_radius": 8,
}


def write_spec(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


def read_dir(d):
    return {f.name: f.read_bytes() for f in d.iterdir() if f.is_file()}


def test_continue_writes_artifacts(tmp_path):
    spec = dict(BASE, M1=4, M2=7)
    out = tmp_path / "run"
    rc = main(["continue", "--spec", write_spec(tmp_path, "s.json", spec),
               "--out", str(out)])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    summary = json.loads((out / "summary.json").read_text())
    assert manifest["command"] == "continue"
    assert manifest["parameters"]["p"] == [0.3, 0.7]
    assert manifest["constants"]["eps1"] == pytest.approx(0.001073511824875158)
    assert manifest["parameters"]["eps"] == manifest["constants"]["eps1"] / 2.0
    assert summary["ordered"] is True
    assert summary["final_residual"] <= 1e-12
    assert summary["truncation"]["holds"] is True
    header = (out / "solution.csv").read_text().splitlines()[0]
    assert header == "i,x0,x,residual"


def test_reruns_are_byte_identical(tmp_path):
    spec = write_spec(tmp_path, "s.json", BASE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["continue", "--spec", spec, "--out", str(a)]) == 0
    assert main(["continue", "--spec", spec, "--out", str(b)]) == 0
    assert read_dir(a) == read_dir(b)


def test_threading_does_not_change_bytes(tmp_path, monkeypatch):
    spec = write_spec(tmp_path, "s.json",
                      dict(BASE, window_radius=6, n_samples=4))
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["lamination", "--spec", spec, "--out", str(a)]) == 0
    assert main(["lamination", "--spec", spec, "--out", str(b),
                 "--threads", "3"]) == 0
    monkeypatch.setenv("LAMLAB_THREADS", "2")
    assert main(["lamination", "--spec", spec, "--out", str(c)]) == 0
    assert read_dir(a) == read_dir(b) == read_dir(c)
    names = set(read_dir(a))
    assert {"manifest.json", "ordering_matrix.csv", "summary.json",
            "member_000.csv", "member_003.csv"} <= names


def test_schema_problems_exit_1(tmp_path):
    out = str(tmp_path / "o")
    bad_key = write_spec(tmp_path, "a.json", dict(BASE, bogus=1))
    assert main(["continue", "--spec", bad_key, "--out", out]) == 1
    missing = {k: v for k, v in BASE.items() if k != "p"}
    assert main(["continue", "--spec", write_spec(tmp_path, "b.json", missing),
                 "--out", out]) == 1
    garbage = tmp_path / "c.json"
    garbage.write_text("{not json")
    assert main(["continue", "--spec", str(garbage), "--out", out]) == 1
    assert main(["continue", "--spec", str(tmp_path / "absent.json"),
                 "--out", out]) == 1
    assert main(["continue", "--spec", write_spec(tmp_path, "d.json", BASE)]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["continue", "--spec", write_spec(tmp_path, "e.json", BASE),
                 "--out", out, "--threads", "0"]) == 1


def test_refused_and_no_convergence_exits(tmp_path):
    out = str(tmp_path / "o")
    hot = write_spec(tmp_path, "hot.json", dict(BASE, eps=0.5))
    assert main(["continue", "--spec", hot, "--out", out]) == 2
    ok = write_spec(tmp_path, "ok.json", dict(BASE, window_radius=6))
    assert main(["continue", "--spec", ok, "--out", out,
                 "--tol", "1e-30"]) == 3


def test_eps_expressions(tmp_path):
    spec = write_spec(tmp_path, "s.json", dict(BASE, eps="eps0"))
    out = tmp_path / "o"
    assert main(["continue", "--spec", spec, "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["parameters"]["eps"] == manifest["constants"]["eps0"]
    bad = write_spec(tmp_path, "b.json", dict(BASE, eps="eps2"))
    assert main(["continue", "--spec", bad, "--out", str(out)]) == 1
    zero = write_spec(tmp_path, "z.json", dict(BASE, eps="eps1/0"))
    assert main(["continue", "--spec", zero, "--out", str(out)]) == 1


def test_verify_passes_and_prints(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "--out", str(out)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(lines) == 9
    assert all("PASS" in l for l in lines)
    report = json.loads((out / "verify.json").read_text())
    assert all(row["passed"] for row in report["checks"])


def test_verify_needs_no_out(capsys):
    assert main(["verify"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_flags_broken_model(tmp_path, capsys):
    spec = write_spec(tmp_path, "flip.json", {
        "model": {"stencil": {"kind": "harmonic", "d": 1, "flip_sign": True}},
    })
    out = tmp_path / "v"
    assert main(["verify", "--spec", spec, "--out", str(out)]) == 2
    report = json.loads((out / "verify.json").read_text())
    failed = {row["name"] for row in report["checks"] if not row["passed"]}
    assert "stencil-sign-condition" in failed
    capsys.readouterr()


def test_verify_tampered_tolerance(tmp_path, capsys):
    spec = write_spec(tmp_path, "tamper.json",
                      {"checks": {"gradient-consistency": 1e-18}})
    assert main(["verify", "--spec", spec]) == 2
    outtext = capsys.readouterr().out
    assert "gradient-consistency" in outtext and "FAIL" in outtext


def test_momentum_coin_flip(tmp_path):
    spec = write_spec(tmp_path, "m.json", {
        "model": {},
        "mode": "momentum",
        "eps": 5e-4,
        "window_radius": 8,
        "coin_flip": {"seed": 5},
    })
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["cantorus", "--spec", spec, "--out", str(a)]) == 0
    summary = json.loads((a / "summary.json").read_text())
    assert summary["points"] == 16
    assert summary["map_residual"] <= 1e-8
    rows = (a / "orbit.csv").read_text().splitlines()
    assert rows[0] == "i,x,y"
    assert len(rows) == 17
    assert main(["cantorus", "--spec", spec, "--out", str(b)]) == 0
    assert read_dir(a) == read_dir(b)


def test_cantorus_cli(tmp_path):
    spec = write_spec(tmp_path, "c.json", {
        "model": {"potential": {"kind": "n_well", "N": 1}},
        "omega": "golden",
        "eps": "eps1/2",
        "window_radius": 8,
        "n_samples": 8,
    })
    out = tmp_path / "o"
    assert main(["cantorus", "--spec", spec, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["invariance_error"] <= 1e-8
    assert len((out / "cantorus.csv").read_text().splitlines()) == 9


def test_measure_cli(tmp_path):
    spec = write_spec(tmp_path, "m.json", {
        "model": {},
        "omega": "golden",
        "eps": "eps1/2",
        "p": [0.3, 0.7],
        "n": 30,
        "window_radius": 30,
    })
    out = tmp_path / "o"
    assert main(["measure", "--spec", spec, "--out", str(out)]) == 0
    measure = json.loads((out / "measure.json").read_text())
    masses = {round(a, 3): m for a, m in measure["atoms"]}
    assert abs(masses[0.0] - 0.3) <= 0.2
    assert abs(masses[0.5] - 0.7) <= 0.2
    lines = (out / "density.csv").read_text().splitlines()
    assert lines[0] == "n,p1,p2"
    assert len(lines) == 4


def test_sweep_cli(tmp_path):
    spec = write_spec(tmp_path, "s.json", {
        "model": {},
        "omega": "golden",
        "eps_values": ["eps1/8", "eps1/4", "eps1/2"],
        "p": [0.5, 0.5],
        "window_radius": 6,
    })
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--spec", spec, "--out", str(a)]) == 0
    assert main(["sweep", "--spec", spec, "--out", str(b),
                 "--threads", "2"]) == 0
    assert read_dir(a) == read_dir(b)
    lines = (a / "sweep.csv").read_text().splitlines()
    assert lines[0] == "eps,iterations,residual,rate,displacement"
    assert len(lines) == 4
    # displacement grows with the coupling
    disp = [float(l.split(",")[4]) for l in lines[1:]]
    assert disp[0] < disp[1] < disp[2]
