import json
import shutil
import subprocess

import pytest

from fockcc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def result(out):
    return json.loads(out)["result"]


def strip_timestamp(out):
    data = json.loads(out)
    data.pop("timestamp")
    return data


def test_analyze_flag(capsys):
    code, out, _ = run(capsys, "analyze", "--d", "2", "--n", "4", "--sigma", "1,0;1,1;0,1")
    assert code == 0
    res = result(out)
    assert (res["dimension"], res["family"], res["is_linear"]) == (8, "Flag", False)
    assert json.loads(out)["command"] == "analyze"


def test_census_level_sets_and_linear(capsys):
    code, out, _ = run(capsys, "census", "--d", "2", "--n", "4")
    res = result(out)
    assert code == 0 and (res["level_sets"], res["linear"]) == (254, 119)


def test_census_hypothesis_count(capsys):
    _, out, _ = run(capsys, "census", "--d", "2", "--n", "4")
    assert result(out)["hypothesis"] == 74


def test_cc_solve_spinor4(capsys):
    code, out, _ = run(capsys, "cc-solve", "--d", "2", "--n", "4", "--sigma", "2,0;1,1;0,2", "--seed", "7",
                       "--threads", "1")
    res = result(out)
    assert code == 0 and res["ccdeg"] == 13 and res["seeds"] == [7, 8, 9] and res["consensus"]


def test_normal_order(capsys):
    code, out, _ = run(capsys, "normal-order", "a2 a1", "--format", "text")
    assert code == 0 and out.strip() == "-a{1,2}"


def test_master(capsys):
    _, out, _ = run(capsys, "master", "--d", "2")
    assert result(out)["terms"] == 4


def test_ideal_and_param(capsys):
    _, out, _ = run(capsys, "ideal", "--d", "2", "--n", "4", "--sigma", "2,0;1,1;0,2")
    assert len(result(out)["generators"]) == 16 - 1 - 6
    _, out, _ = run(capsys, "param", "--d", "2", "--n", "4", "--sigma", "2,0;1,1;0,2")
    assert len(result(out)["coordinates"]) == 16


def test_json_is_reproducible(capsys):
    argv = ["vdegree", "--d", "2", "--n", "4", "--sigma", "2,0;1,1;0,2", "--seed", "3", "--seeds", "2"]
    _, a, _ = run(capsys, *argv, "--threads", "1")
    _, b, _ = run(capsys, *argv, "--threads", "2")
    assert strip_timestamp(a) == strip_timestamp(b)
    assert a.replace(json.loads(a)["timestamp"], "") == b.replace(json.loads(b)["timestamp"], "")
    assert result(a)["degree"] == 2


def test_csv_format(capsys):
    _, out, _ = run(capsys, "census", "--d", "2", "--n", "4", "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "d,n,level_sets,linear,hypothesis"
    assert lines[1].startswith("2,4,254,119,")


def test_malformed_level_set(capsys):
    code, out, err = run(capsys, "analyze", "--d", "2", "--n", "4", "--sigma", "1,0;x,1")
    assert code == 2 and out == ""
    assert "malformed level set" in err and "position 4" in err


def test_level_outside_grid(capsys):
    code, _, err = run(capsys, "analyze", "--d", "2", "--n", "4", "--sigma", "3,0")
    assert code == 2 and "outside the grid" in err


def test_capacity_error(capsys):
    code, _, err = run(capsys, "cc-solve", "--d", "2", "--n", "4", "--sigma", "2,0;1,1;0,2", "--seeds", "1",
                       "--method", "total-degree", "--tracker", "bezout_limit=10")
    assert code == 3 and "capacity limit exceeded" in err


def test_bad_seed_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["cc-solve", "--d", "2", "--n", "4", "--sigma", "1,1", "--seed", str(2**64)])
    assert exc.value.code == 2


def test_bad_tracker_key(capsys):
    with pytest.raises(SystemExit):
        main(["cc-solve", "--d", "2", "--n", "4", "--sigma", "1,1", "--tracker", "speed=2"])


def test_output_directory_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("FOCKCC_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "master", "--d", "3", "--format", "csv")
    assert code == 0 and out == ""
    assert (tmp_path / "master.csv").read_text().splitlines()[1].startswith("3,31,")


def test_explicit_output_file(capsys, tmp_path):
    dest = tmp_path / "sub" / "a.json"
    run(capsys, "analyze", "--d", "2", "--n", "4", "--sigma", "1,1;2,2", "--output", str(dest))
    assert json.loads(dest.read_text())["result"]["is_linear"] is True


@pytest.mark.skipif(shutil.which("fockcc") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["fockcc", "master", "--d", "2", "--format", "text"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("4 terms")
