import csv
import io
import json
import math
import os
from contextlib import redirect_stderr, redirect_stdout

import pytest

from spininterp.cli import RunConfig, main


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_estimate_beta_zero(sk_toml):
    code, out, err = run_cli(
        "estimate", "--spec", sk_toml, "--n", "6", "--seed", "1", "--beta", "0",
    )
    assert code == 0, err
    payload = json.loads(out)
    assert payload["report"]["estimate_z"] == [1.0, 0.0]
    assert payload["run"]["tool_version"]
    assert len(payload["run"]["spec_digest"]) == 64


def test_run_config_round_trip(sk_toml):
    code, out, _ = run_cli(
        "estimate", "--spec", sk_toml, "--n", "6", "--seed", "3", "--beta", "0.2",
    )
    assert code == 0
    payload = json.loads(out)
    rc = RunConfig.from_json(payload["run"])
    assert rc.subcommand == "estimate"
    assert rc.seed == 3
    assert rc.format == "json"


def test_threshold_sk(sk_toml):
    code, out, _ = run_cli("threshold", "--spec", sk_toml, "--tol", "1e-7")
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["beta_2nd"] - 1.0) <= 1e-6


def test_threshold_csv_outputs(sk_toml, tmp_path):
    phi = tmp_path / "phi.csv"
    cw = tmp_path / "cw.csv"
    code, out, _ = run_cli(
        "threshold", "--spec", sk_toml, "--phi-csv", str(phi), "--cw-csv", str(cw),
        "--n", "200", "--points", "33",
    )
    assert code == 0
    rows = list(csv.DictReader(phi.open()))
    assert len(rows) == 33
    assert set(rows[0]) == {"m", "phi"}
    rows = list(csv.DictReader(cw.open()))
    assert set(rows[0]) == {"beta", "log_zcw", "rs_bound"}
    # bound column dominates the exact value on every row
    for r in rows:
        assert float(r["log_zcw"]) <= float(r["rs_bound"]) + 1e-9


def test_exact_single_and_raster(sk_toml, tmp_path):
    code, out, _ = run_cli(
        "exact", "--spec", sk_toml, "--n", "6", "--seed", "2", "--beta", "0.4,0.1",
    )
    assert code == 0
    payload = json.loads(out)
    assert len(payload["z"]) == 2

    raster = tmp_path / "raster.csv"
    code, out, _ = run_cli(
        "exact", "--spec", sk_toml, "--n", "6", "--seed", "2",
        "--grid=-1,1,-1,1", "--resolution", "8", "--out", str(raster),
    )
    assert code == 0
    rows = list(csv.DictReader(raster.open()))
    assert len(rows) == 64
    assert set(rows[0]) == {"re", "im", "abs_z", "arg_z"}


def test_exact_cap_exit_code(sk_toml):
    code, out, err = run_cli(
        "exact", "--spec", sk_toml, "--n", "23", "--seed", "0", "--beta", "0.1",
    )
    assert code == 2
    assert json.loads(err)["error"] == "precondition"


def test_zeros_csv(sk_toml, tmp_path):
    dest = tmp_path / "zeros.csv"
    code, _, _ = run_cli(
        "zeros", "--spec", sk_toml, "--n", "8", "--seed", "11", "--radius", "1.05",
        "--format", "csv", "--out", str(dest),
    )
    assert code == 0
    text = dest.read_text().splitlines()
    assert text[0] == "re,im,multiplicity"


def test_zeros_json_includes_winding(sk_toml):
    code, out, _ = run_cli(
        "zeros", "--spec", sk_toml, "--n", "8", "--seed", "11", "--radius", "0.8",
    )
    assert code == 0
    payload = json.loads(out)
    total = sum(z["multiplicity"] for z in payload["zeros"]["zeros"])
    assert payload["zeros"]["winding_on_circle"] == total


def test_multicurve_complex_beta_refused(sk_toml):
    code, _, err = run_cli(
        "estimate", "--spec", sk_toml, "--n", "6", "--seed", "0", "--beta", "0.2,0.1",
        "--mode", "multicurve",
    )
    assert code == 2
    assert "real" in json.loads(err)["message"]


def test_strict_schedule_exit_code(sk_toml):
    code, _, err = run_cli(
        "estimate", "--spec", sk_toml, "--n", "8", "--seed", "0", "--beta", "0.3",
        "--schedule", "strict",
    )
    assert code == 2
    assert "depth" in json.loads(err)["message"]


def test_verify_jensen_five_of_five(sk_toml):
    code, out, _ = run_cli(
        "verify", "--suite", "jensen", "--spec", sk_toml, "--n", "10", "--seeds", "5",
    )
    assert code == 0
    assert "5/5 pass" in out


def test_verify_series(sk_toml):
    code, out, _ = run_cli("verify", "--suite", "series", "--seeds", "4")
    assert code == 0
    assert "4/4 pass" in out


def test_verify_moments(sk_toml):
    code, out, _ = run_cli(
        "verify", "--suite", "moments", "--spec", sk_toml, "--n", "6", "--kmax", "6",
    )
    assert code == 0


def test_curves_csv_and_certify(sk_toml, tmp_path):
    dest = tmp_path / "curves.csv"
    code, out, _ = run_cli(
        "curves", "--spec", sk_toml, "--beta-star", "0.3", "--N", "2", "--m", "16",
        "--samples", "256", "--certify", "--out", str(dest),
    )
    assert code == 0
    meta = json.loads(out)
    assert meta["certified"] is True
    rows = list(csv.DictReader(dest.open()))
    kinds = {r["kind"] for r in rows}
    assert kinds == {"path", "tube"}
    ks = {int(r["k"]) for r in rows}
    assert ks == {-2, -1, 0, 1, 2}
    # path endpoints hit 0 and beta*
    for k in sorted(ks):
        path = [r for r in rows if r["kind"] == "path" and int(r["k"]) == k]
        first, last = path[0], path[-1]
        assert abs(complex(float(first["re"]), float(first["im"]))) <= 1e-12
        assert complex(float(last["re"]), float(last["im"])) == pytest.approx(0.3, abs=1e-10)


def test_no_writes_outside_out(sk_toml, tmp_path, monkeypatch):
    workdir = tmp_path / "cwd"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    dest = tmp_path / "out.json"
    code, _, _ = run_cli(
        "estimate", "--spec", sk_toml, "--n", "6", "--seed", "0", "--beta", "0.1",
        "--out", str(dest),
    )
    assert code == 0
    assert dest.exists()
    assert list(workdir.iterdir()) == []


def test_bench_smoke(sk_toml):
    code, out, _ = run_cli("bench", "--kernel", "htable", "--n", "10", "--repeat", "1")
    assert code == 0
    assert "htable" in out
