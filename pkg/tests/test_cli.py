import json
import subprocess
import sys

import pytest

from quadcurl import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def last_line(text):
    return text.strip().splitlines()[-1]


def test_verify_element_passes(capsys):
    code, out, _ = run(capsys, "verify-element", "--order", "1", "--trials", "3", "--seed", "7")
    assert code == 0 and last_line(out) == "STATUS: ok"
    assert out.count("PASS") >= 5 and "FAIL" not in out


def test_trials_zero_vacuous(capsys, caplog):
    code, out, _ = run(capsys, "verify-element", "--trials", "0")
    assert code == 0 and last_line(out) == "STATUS: ok"
    assert "vacuous" in caplog.text


@pytest.mark.parametrize("argv", [
    ["verify-element", "--order", "3"],
    ["interp-study", "--levels", "8,8"],
    ["interp-study", "--levels", "4,2"],
    ["interp-study", "--levels", "a,b"],
    ["interp-study", "--levels", "0,2"],
    ["convergence", "--levels", "8,14"],
    ["convergence", "--tol", "1e-16", "--levels", "2"],
    ["verify-element", "--threads", "0"],
    ["verify-element", "--trials", "-1"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == 2


def test_interp_study_stdout(capsys):
    code, out, _ = run(capsys, "interp-study", "--levels", "2", "--example", "2")
    assert code == 0 and last_line(out) == "STATUS: ok"
    lines = out.splitlines()
    assert lines[0].startswith("# quadcurl")
    cfg = json.loads(lines[1].split("config: ", 1)[1])
    assert cfg["command"] == "interp-study" and cfg["levels"] == [2] and cfg["example"] == 2
    assert lines[2].startswith("N,h,E_L2")
    assert lines[3].startswith("2,8.6603e-01,") and lines[3].endswith(",")


def test_deterministic_bytes(tmp_path, capsys):
    blobs = []
    for i in range(2):
        out = tmp_path / "study.csv"
        run(capsys, "interp-study", "--levels", "2,3", "--out", str(out), "--seed", "5")
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    assert (tmp_path / "study.md").exists()


def test_convergence_outputs(tmp_path, capsys):
    out = tmp_path / "conv" / "ex2.csv"
    code, text, err = run(capsys, "convergence", "--example", "2", "--levels", "2,3",
                          "--out", str(out), "--gnuplot")
    assert code == 0 and last_line(text) == "STATUS: ok"
    assert "N=3" in err and "solver=direct" in err
    csv = out.read_text().splitlines()
    assert csv[2] == "N,h,E_L2,rate_L2,E_curl,rate_curl,E_gradcurl,rate_gc" and len(csv) == 5
    for key in ("E_L2", "E_curl", "E_gradcurl"):
        assert len((tmp_path / "conv" / f"ex2_{key}.dat").read_text().splitlines()) == 2


def test_convergence_failure_status(monkeypatch, capsys):
    from quadcurl import experiments

    def broken(*args, **kwargs):
        raise RuntimeError("no memory")

    monkeypatch.setattr(experiments, "solve_level", broken)
    code, out, err = run(capsys, "convergence", "--levels", "2")
    assert code == 1 and last_line(out) == "STATUS: fail"
    assert "no memory" in err


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv(cli.THREADS_ENV, raising=False)
    assert cli.resolve_threads(None) is None
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.resolve_threads(None) == 3
    assert cli.resolve_threads(2) == 2
    monkeypatch.setenv(cli.THREADS_ENV, "lots")
    with pytest.raises(SystemExit):
        cli.resolve_threads(None)


def test_threads_recorded(monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    _, out, _ = run(capsys, "interp-study", "--levels", "2")
    assert '"threads": 1' in out


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "quadcurl.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
