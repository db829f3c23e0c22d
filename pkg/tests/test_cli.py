import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from nonlocdiff import DomainGrid, extrema
from nonlocdiff.cli import main
from nonlocdiff.config import build_config, default_matrix, unflatten
from nonlocdiff.errors import ConfigError
from nonlocdiff.grid import read_snapshot, read_trace

BASE = {
    "grid": {"extent": [1.0], "h": 0.0625},
    "conductivity": {"family": "linear"},
    "initial": 1.0,
    "psi": 0.0,
    "t_final": 0.25,
    "output_times": {"every": 0.03125},
}


def _write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _run(tmp_path, command, doc, *extra, out="out"):
    return main([command, "--config", _write(tmp_path, doc), "--out", str(tmp_path / out), *extra])


def test_solve_writes_outputs(tmp_path):
    assert _run(tmp_path, "solve", {**BASE, "snapshot_times": [0.125, 0.25]}) == 0
    out = tmp_path / "out"
    trace = read_trace(out / "trace.csv")
    u_inf = [r.u_inf for r in trace]
    assert all(b <= a for a, b in zip(u_inf, u_inf[1:]))
    assert [r.t for r in trace] == [i * 0.03125 for i in range(9)]
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["snapshots"] == {"snapshot_0000.csv": 0.0, "snapshot_0004.csv": 0.125, "snapshot_0008.csv": 0.25}
    assert meta["windows"][0]["window_formula"] == 0.1
    assert (out / "timings.json").exists()


def test_snapshot_round_trips_to_trace_row(tmp_path):
    assert _run(tmp_path, "solve", {**BASE, "conductivity": {"family": "porous_medium", "m": 2},
                                    "initial": {"profile": "random", "seed": 3}}) == 0
    out = tmp_path / "out"
    grid = DomainGrid((1.0,), 0.0625)
    trace = read_trace(out / "trace.csv")
    snap = read_snapshot(out / "snapshot_0008.csv", grid)
    assert extrema(snap, trace[-1].t) == trace[-1]


def test_solve_is_bit_deterministic(tmp_path):
    doc = {**BASE, "initial": {"profile": "random"}, "seed": 11}
    assert _run(tmp_path, "solve", doc, out="a") == 0
    assert _run(tmp_path, "solve", doc, "--threads", "3", out="b") == 0
    for name in ("trace.csv", "snapshot_0008.csv", "metadata.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides(tmp_path):
    doc = {**BASE, "initial": {"profile": "random"}, "seed": 1}
    _run(tmp_path, "solve", doc, out="a")
    _run(tmp_path, "solve", doc, "--seed", "2", out="b")
    _run(tmp_path, "solve", {**doc, "seed": 2}, out="c")
    a, b, c = ((tmp_path / d / "trace.csv").read_bytes() for d in "abc")
    assert a != b and b == c


def test_bad_spacing_exit_2(tmp_path, capsys):
    assert _run(tmp_path, "solve", {**BASE, "grid": {"extent": [1.0], "h": 0.3}}) == 2
    assert "BadSpacing" in capsys.readouterr().err


def test_not_lipschitz_exit_2(tmp_path, capsys):
    assert _run(tmp_path, "solve", {**BASE, "conductivity": {"family": "p_laplacian", "p": 2.5}}) == 2
    assert "NotLipschitzForEvolution" in capsys.readouterr().err


@pytest.mark.parametrize("patch", [
    {"initial": {"profile": "nope"}},
    {"solver": {"substeps": 0}},
    {"solver": {"bogus": 1}},
    {"t_final": -1},
    {"output_times": [0.5]},
    {"output_times": {"every": 0.07}},
    {"kernel": {"shape": "triangle"}},
    {"kernel": {"dimension": 2}},
    {"verify": {"checks": ["magic"]}},
    {"extra": 1},
])
def test_config_validation_exit_2(tmp_path, patch):
    assert _run(tmp_path, "solve", {**BASE, **patch}) == 2


def test_unreadable_config_exit_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["solve", "--config", str(tmp_path / "bad.json")]) == 2


def test_solver_error_exit_3(tmp_path, capsys):
    doc = {**BASE, "conductivity": {"family": "porous_medium", "m": 2}, "solver": {"max_iter": 2}}
    assert _run(tmp_path, "solve", doc) == 3
    assert "window 0 stopped at iteration 2" in capsys.readouterr().err


def test_output_dir_precedence(tmp_path, monkeypatch):
    cfg = _write(tmp_path, {**BASE, "output_dir": str(tmp_path / "from_config")})
    monkeypatch.setenv("NONLOC_OUT", str(tmp_path / "from_env"))
    assert main(["solve", "--config", cfg]) == 0
    assert (tmp_path / "from_env" / "trace.csv").exists()
    monkeypatch.delenv("NONLOC_OUT")
    assert main(["solve", "--config", cfg]) == 0
    assert (tmp_path / "from_config" / "trace.csv").exists()


def test_flat_keys():
    doc = unflatten({"grid.h": 0.0625, "grid.extent": [1.0], "conductivity.family": "linear"})
    assert doc == {"grid": {"h": 0.0625, "extent": [1.0]}, "conductivity": {"family": "linear"}}
    cfg = build_config({"grid.h": 0.125, "conductivity.family": "porous_medium", "conductivity.parameters.m": 3})
    assert str(cfg.conductivity) == "porous_medium(m=3)"
    with pytest.raises(ConfigError):
        unflatten({"grid": 1, "grid.h": 2})


# verify ----------------------------------------------------------------------

TRIVIAL_SUITE = {
    "grid": {"extent": [1.0], "h": 0.0625},
    "conductivity": {"family": "porous_medium", "m": 2},
    "t_final": 1.0,
    "output_times": {"every": 0.125},
    "verify": {"matrix": [
        {"name": f"pme_sign/{p}", "trivial": {"kind": "pme_sign", "pattern": p}}
        for p in ("sgn_sin_inv", "sgn_x", "checkerboard", "seeded_random")
    ], "vacuous_pass": False},
}


def test_verify_trivial_suite(tmp_path):
    assert _run(tmp_path, "verify", TRIVIAL_SUITE) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["passed"]
    stat = [c for r in report["runs"] for c in r["checks"] if c["name"] == "stationarity"]
    assert len(stat) == 4 and all(c["max_violation"] == 0 for c in stat)
    smp = [c for r in report["runs"] for c in r["checks"] if c["name"] == "smp"]
    assert smp and not any(c["vacuous"] for c in smp)


def test_verify_detects_corrupted_collar(tmp_path, capsys):
    doc = {**BASE, "verify": {"inject_fault": "mutate_collar"}}
    assert _run(tmp_path, "verify", doc) == 4
    err = capsys.readouterr().err
    assert "dirichlet_invariance" in err and "max_violation" in err


def test_verify_vacuous_policy(tmp_path):
    doc = {**BASE, "verify": {"checks": ["smp"]}}
    assert _run(tmp_path, "verify", doc, out="a") == 0
    doc["verify"]["vacuous_pass"] = False
    assert _run(tmp_path, "verify", doc, out="b") == 4


def test_verify_explicit_check_with_unmet_precondition(tmp_path):
    doc = {**BASE, "conductivity": {"family": "product_shift", "a": 1, "m": 1},
           "verify": {"checks": ["positivity"]}}
    assert _run(tmp_path, "verify", doc) == 2


def test_verify_report_is_deterministic(tmp_path):
    doc = {**BASE, "initial": {"profile": "random", "low": -1, "high": 1}, "seed": 4,
           "conductivity": {"family": "porous_medium", "m": 3}}
    assert _run(tmp_path, "verify", doc, out="a") == 0
    assert _run(tmp_path, "verify", doc, out="b") == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_default_matrix_shape():
    runs = default_matrix()
    assert len(runs) >= 12
    assert len({r["name"] for r in runs}) == len(runs)
    families = {r["conductivity"]["family"] for r in runs}
    assert families == {"linear", "porous_medium", "p_laplacian", "porous_medium_alt", "product_shift", "sin_squared"}


# trivial and weak-residual -----------------------------------------------------


def test_trivial_pme_sign(tmp_path, capsys):
    doc = {**BASE, "conductivity": {"family": "porous_medium", "m": 2},
           "trivial": {"kind": "pme_sign", "pattern": "sgn_sin_inv"}}
    assert _run(tmp_path, "trivial", doc) == 0
    assert capsys.readouterr().out.strip() == "residual 0"
    info = json.loads((tmp_path / "out" / "trivial.json").read_text())
    assert info["values"] == [-1.0, 1.0]
    rows = list(csv.DictReader(open(tmp_path / "out" / "trivial.csv")))
    assert {r["region"] for r in rows} == {"interior", "collar"}


def test_trivial_integer_field(tmp_path, capsys):
    doc = {**BASE, "conductivity": {"family": "sin_squared"},
           "trivial": {"kind": "integer_field", "pattern": "seeded_random"}}
    assert _run(tmp_path, "trivial", doc) == 0
    assert capsys.readouterr().out.strip() == "residual 0"


def test_trivial_involution_zero_exit_2(tmp_path):
    doc = {**BASE, "conductivity": {"family": "product_shift", "a": 1, "m": 1},
           "trivial": {"kind": "involution", "U": 0.0}}
    assert _run(tmp_path, "trivial", doc) == 2


def test_trivial_without_spec_exit_2(tmp_path):
    assert _run(tmp_path, "trivial", BASE) == 2


def test_weak_residual(capsys):
    assert main(["weak-residual", "--U", "1", "--m", "2", "--quad-n", "1024"]) == 0
    out = capsys.readouterr().out.split()
    assert float(out[1]) == pytest.approx(-0.7358, abs=1e-4)
    assert float(out[3]) == pytest.approx(-2 * np.exp(-1), rel=1e-9)


def test_weak_residual_zero(capsys):
    assert main(["weak-residual", "--U", "0"]) == 0
    assert capsys.readouterr().out.split() == ["residual", "0", "target", "0"]


def test_weak_residual_under_resolved():
    assert main(["weak-residual", "--quad-n", "4"]) == 5


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nonlocdiff", "weak-residual", "--quad-n", "4"],
                          capture_output=True, text=True)
    assert proc.returncode == 5
    assert "QuadratureUnderResolved" in proc.stderr
