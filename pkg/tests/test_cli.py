import json
import os
import subprocess
import sys

import pytest

from mlext.cli import main
from mlext.formats import parse_map, read_text

from cli_inputs import command_matrix, write_inputs


@pytest.fixture
def files(tmp_path):
    return write_inputs(str(tmp_path)), str(tmp_path)


def run(argv, tmp, name="report.json"):
    out = os.path.join(tmp, name)
    code = main(["--out", out] + argv)
    return code, json.loads(read_text(out))


def test_rank_reports(files):
    f, tmp = files
    code, rep = run(["rank", f["id"]], tmp)
    r = rep["results"]
    assert code == 0
    assert r["analytic_rank"]["exact"] == "2" and r["partition_rank"]["exact"] == 2
    assert r["matrix_rank"] == 2 and r["partition_rank"]["witness_verified"]
    code, rep = run(["rank", f["zero"]], tmp)
    r = rep["results"]
    assert r["bias"] == "1" and r["analytic_rank"]["exact"] == "0"
    assert (r["partition_rank"]["lower"], r["partition_rank"]["upper"]) == (0, 0)
    code, rep = run(["rank", f["diag"]], tmp)
    r = rep["results"]
    assert r["bias"] == "9/16" and r["analytic_rank"]["exact"] is None
    assert (r["partition_rank"]["lower"], r["partition_rank"]["upper"]) == (1, 2)


def test_variety_reports(files):
    f, tmp = files
    code, rep = run(["variety", f["dot_v"], "--diameter"], tmp)
    r = rep["results"]
    assert (r["count"], r["size_bound"], r["size_bound_holds"]) == (10, "4", True)
    assert r["nonvanishing_set"]["within_bound"] and r["nonvanishing_set"]["diameter_bound"] == 15
    code, rep = run(["variety", f["whole_v"]], tmp)
    assert rep["results"]["count"] == rep["results"]["space_size"] == 16


def test_extend_pipeline_and_whole_space(files):
    f, tmp = files
    cert = os.path.join(tmp, "c.json")
    code, rep = run(["extend", f["x1y1_v"], "--restrict-global", f["x2y2"], "--certificate", cert], tmp)
    assert code == 0
    a = rep["results"]["agreement"]
    assert a["verified"] and a["points"] >= 1
    assert json.loads(read_text(cert))["status"] == "complete"
    code, rep = run(["extend", f["whole_v"], "--restrict-global", f["x2y2"]], tmp)
    assert rep["results"]["final_map"] == [{"axes": [1, 2], "coeffs": [0, 0, 0, 1]}]


def test_extend_qr_writes_the_map(files):
    f, tmp = files
    out = os.path.join(tmp, "ext.map")
    code, rep = run(["extend", f["whole3_v"], "--map", f["map"], "--rho", f["dot3"],
                     "--z", "1 0 ; 1 0", "--h0", "2", "--certificate", out], tmp)
    assert code == 0
    sig, h, table = parse_map(read_text(out))
    assert len(table) == 81 and table[((1, 0), (1, 0))] == (2,)


def test_corrupted_map_names_the_pair(files, capsys):
    f, tmp = files
    code, rep = run(["extend", f["b0_v"], "--map", f["bad_map"]], tmp)
    assert code == 5
    err = rep["error"]
    assert err["type"] == "MultilinearityViolation"
    assert err["counterexample"]["kind"] in ("ominus", "scalar")
    assert "not multilinear" in capsys.readouterr().err


def test_counterexample_reports(files):
    f, tmp = files
    code, rep = run(["counterexample", "--p", "2", "--scan"], tmp)
    r = rep["results"]
    assert r["tables"] == 2 and r["extendable"] == [[0], [1]] and r["bilinear_for_every_f"]
    code, rep = run(["counterexample", "--p", "3", "--f", "0 0"], tmp)
    v = rep["results"]["verdict"]
    assert v["extendable"] and v["witness"] == [{"axes": [1, 2], "coeffs": [0, 0, 0, 0]}]


def test_exit_codes(files):
    f, tmp = files
    for name, argv, want in command_matrix(f, tmp):
        code = main(["--out", os.path.join(tmp, name + ".json")] + argv)
        assert code == want, name


def test_module_entry_point(files):
    f, tmp = files
    proc = subprocess.run([sys.executable, "-m", "mlext", "rank", f["id"]],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["matrix_rank"] == 2
