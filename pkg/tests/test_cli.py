import json
import math
import subprocess
import sys

import pytest

from wavediv.cli import RunConfig, main
from wavediv.dyadic import BesovParams, CoefficientField
from wavediv.spectrum import theoretical_spectrum


def run(argv):
    return main([str(a) for a in argv])


def _sat_config(path, jmax=10, **extra):
    obj = {"kind": "saturating", "besov": {"s": 0.5, "p": 2, "q": 2, "d": 1}, "jmax": jmax,
           "covering": {"max_depth": 1, "c0": 1.0}, **extra}
    path.write_text(json.dumps(obj))
    return path


def test_check_covering_exit_codes(tmp_path):
    out = tmp_path / "h.json"
    assert run(["check-covering", "--system", "haar", "-o", out]) == 0
    obj = json.loads(out.read_text())
    assert obj["found"] and obj["M"] == 1 and obj["L"] == 2
    assert (tmp_path / "h.json.config.json").exists()
    out = tmp_path / "s.json"
    assert run(["check-covering", "--system", "schauder", "--max-depth", 3, "--c0", 0.01, "-o", out]) == 2
    obj = json.loads(out.read_text())
    assert not obj["found"] and obj["witness"] == [0.0]
    assert run(["check-covering", "--system", "indicator", "-o", tmp_path / "i.json"]) == 0
    assert run(["check-covering", "--system", "nope", "-o", tmp_path / "x.json"]) == 1
    assert run(["check-covering", "--c0", "-1", "-o", tmp_path / "y.json"]) == 1


def test_generate_reproducible(tmp_path):
    cfg = _sat_config(tmp_path / "c.json")
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c2.json"
    assert run(["generate", "--config", cfg, "--seed", 3, "-o", a]) == 0
    assert run(["generate", "--config", cfg, "--seed", 3, "-o", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert run(["generate", "--config", cfg, "--seed", 4, "-o", c]) == 0
    assert a.read_bytes() != c.read_bytes()
    # the resolved config reproduces the field byte for byte
    d = tmp_path / "d.json"
    assert run(["generate", "--config", str(a) + ".config.json", "-o", d]) == 0
    assert d.read_bytes() == a.read_bytes()
    meta = json.loads(a.read_text())["meta"]
    assert meta["log"] == "log2" and meta["blocks"] and meta["seed"] == 3


def test_generate_seed_from_environment(tmp_path, monkeypatch):
    cfg = _sat_config(tmp_path / "c.json")
    monkeypatch.setenv("WAVEDIV_SEED", "17")
    assert run(["generate", "--config", cfg, "-o", tmp_path / "a.json"]) == 0
    assert json.loads((tmp_path / "a.json").read_text())["meta"]["seed"] == 17
    monkeypatch.setenv("WAVEDIV_SEED", "x")
    assert run(["generate", "--config", cfg, "-o", tmp_path / "b.json"]) == 1


def test_generate_kinds(tmp_path):
    base = ["generate", "--s", 0.5, "--p", 2, "--jmax", 8]
    assert run(base + ["--kind", "deterministic", "-o", tmp_path / "e.json"]) == 0
    e1 = (tmp_path / "e.json").read_bytes()
    assert run(base + ["--kind", "deterministic", "-o", tmp_path / "e2.json"]) == 0
    assert (tmp_path / "e2.json").read_bytes() == e1
    (tmp_path / "lin.json").write_text(json.dumps({"kind": "lineability", "besov": {"s": 0.5, "p": 2},
                                                   "jmax": 8, "a": [0.5, 1.0], "k": [2, -1]}))
    assert run(["generate", "--config", tmp_path / "lin.json", "-o", tmp_path / "l.json"]) == 0
    (tmp_path / "res.json").write_text(json.dumps({"kind": "residual", "besov": {"s": 0.5, "p": 2},
                                                   "jmax": 12, "n": 3}))
    assert run(["generate", "--config", tmp_path / "res.json", "-o", tmp_path / "r.json"]) == 0
    assert json.loads((tmp_path / "r.json.config.json").read_text())["generator"]["N_n"] == 6
    (tmp_path / "hol.json").write_text(json.dumps({"kind": "holder", "besov": {"s": 0.5, "p": "inf",
                                                                              "q": "inf"}, "jmax": 6, "n": 2}))
    assert run(["generate", "--config", tmp_path / "hol.json", "-o", tmp_path / "h.json"]) == 0
    assert json.loads((tmp_path / "h.json").read_text())["p"] == "inf"


def test_generate_point_outside_unit_cube(tmp_path):
    out = tmp_path / "p.json"
    assert run(["generate", "--kind", "point", "--s", 0, "--p", 2, "--jmax", 12, "--x0", 1.3, "-o", out]) == 0
    f = CoefficientField.loads(out.read_text())
    for i, j, k in f.meta["selected"]:
        assert k[0] / 2 ** j <= 1.3 < (k[0] + 1) / 2 ** j


def test_generate_config_errors(tmp_path):
    assert run(["generate", "--kind", "saturating", "--s", 0.5, "--p", 2, "--jmax", 1,
                "-o", tmp_path / "a.json"]) == 1
    assert run(["generate", "--kind", "lineability", "--s", 0.5, "--p", 2, "--jmax", 4,
                "-o", tmp_path / "b.json"]) == 1
    (tmp_path / "bad.json").write_text("{not json")
    assert run(["generate", "--config", tmp_path / "bad.json", "-o", tmp_path / "c.json"]) == 1
    assert run(["generate", "--kind", "unknown"]) == 1


def test_analyze(tmp_path, capsys):
    Z = CoefficientField.zeros(1, 10, BesovParams(0.5, 2.0, 2.0, 1))
    zf = tmp_path / "z.json"
    zf.write_text(Z.dumps())
    summ = tmp_path / "s.csv"
    assert run(["analyze", zf, "--grid", 8, "-o", tmp_path / "p.csv", "--summary", summ]) == 0
    rows = summ.read_text().strip().splitlines()
    assert len(rows) == 257
    assert all(r.split(",")[1] == "-inf" for r in rows[1:])
    assert run(["analyze", zf, "--grid", 3, "--d", 2]) == 1
    assert run(["analyze", zf]) == 1


def test_analyze_point_field(tmp_path):
    pf = tmp_path / "p.json"
    assert run(["generate", "--kind", "point", "--s", 0, "--p", 2, "--jmax", 18, "--x0", repr(1 / 3),
                "-o", pf]) == 0
    pts = tmp_path / "x.txt"
    pts.write_text(f"# x0\n{1 / 3!r}\n")
    summ = tmp_path / "s.csv"
    assert run(["analyze", pf, "--points", pts, "--summary", summ, "-o", tmp_path / "prof.csv"]) == 0
    delta = float(summ.read_text().splitlines()[1].split(",")[1])
    # finite-scale value; the log weight costs about (log2 18)^2 / 18
    assert delta == pytest.approx(0.5 - math.log2(18) ** 2 / 18, abs=0.05)


def test_spectrum_cmd(tmp_path):
    cfg = _sat_config(tmp_path / "c.json", jmax=12)
    f = tmp_path / "f.json"
    assert run(["generate", "--config", cfg, "--seed", 1, "-o", f]) == 0
    out = tmp_path / "sp.csv"
    assert run(["spectrum", f, "--grid-bits", 8, "--gammas=-2,-1.5,-1,-0.5,0", "-o", out]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "gamma,dim_boxcount,dim_coeffcount,dim_theory,ci_low,ci_high"
    P = BesovParams(0.5, 2.0, 2.0, 1)
    dims = []
    for line in lines[1:]:
        g, box, _, theory = (float(v) for v in line.split(",")[:4])
        t = theoretical_spectrum(P, g)
        assert (math.isnan(t) and math.isnan(theory)) or theory == t
        dims.append(box)
    finite = [v for v in dims if not math.isnan(v)]
    assert finite == sorted(finite, reverse=True)
    assert run(["spectrum", f, "--grid-bits", 8, "--box-scales", "1,2", "-o", out]) == 1


def test_experiment_cmd(tmp_path):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"besov": {"s": 0.5, "p": 2, "q": 2}, "jmax": 10, "trials": 2,
                               "base_fields": ["zero", "negate"], "n_uniform": 30, "n_dyadic": 3}))
    out = tmp_path / "r.json"
    assert run(["experiment", cfg, "--seed", 9, "-o", out]) == 0
    rep = json.loads(out.read_text())
    assert len(rep["per_trial"]) == 2 and all("seed" in t for t in rep["per_trial"])
    again = tmp_path / "r2.json"
    assert run(["experiment", str(out) + ".config.json", "-o", again]) == 0
    assert again.read_bytes() == out.read_bytes()
    assert run(["experiment", cfg, "--trials", 0, "-o", tmp_path / "x.json"]) == 1


def test_norm_cmd(tmp_path, capsys):
    f = tmp_path / "e.json"
    assert run(["generate", "--kind", "deterministic", "--s", 0.5, "--p", 2, "--jmax", 6, "-o", f]) == 0
    capsys.readouterr()
    assert run(["norm", f]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["besov_norm"] > 0 and len(obj["eps"]) == 7
    assert run(["norm", f, "--p", "inf", "--q", "inf"]) == 0
    assert json.loads(capsys.readouterr().out)["params"]["p"] == "inf"


def test_run_config_round_trip():
    cfg = RunConfig("generate", BesovParams(0.5, math.inf, 2.0, 1), {"name": "haar", "d": 1, "n": 1},
                    {"kind": "saturating", "jmax": 8}, {"j_min": 4}, {"field": "a.json"}, 3)
    text = cfg.dumps()
    assert RunConfig.loads(text).dumps() == text


def test_usage_error_exit_code():
    assert run(["bogus"]) == 1
    proc = subprocess.run([sys.executable, "-m", "wavediv", "bogus"], capture_output=True)
    assert proc.returncode == 1
    proc = subprocess.run([sys.executable, "-m", "wavediv", "check-covering"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["found"]
