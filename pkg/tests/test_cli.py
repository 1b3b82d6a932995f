import subprocess
import sys

import pytest

from disjinv import corpus
from disjinv.cli import FAILED, OK, USAGE, main


@pytest.fixture
def bench(tmp_path):
    def put(name, text=None):
        f = tmp_path / (name + ".afl")
        f.write_text(corpus.source(name) if text is None else text)
        return str(f)
    return put


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def lines(out):
    return dict(l.split(": ", 1) for l in out.splitlines() if ": " in l)


def test_running_example(capsys, bench):
    code, out, _ = run(capsys, bench("fig1"))
    got = lines(out)
    assert code == OK
    assert got["HEAD"] == "(x=y ∧ 50≤x≤99) ∨ (y=50 ∧ 0≤x≤49)"
    assert got["EXIT"] == "x=100 ∧ y=100"
    assert "l1" in got and "l2" in got and "TIME" in got


def test_ascii_structured_with_checks(capsys, bench):
    code, out, _ = run(capsys, bench("fig1"), "--ascii", "--format", "structured", "--check", "--oracle-box", "auto")
    got = lines(out)
    assert code == OK
    assert got["head"] == r"(x=y /\ 50<=x<=99) \/ (y=50 /\ 0<=x<=49)"
    assert got["check"].startswith("PASS")
    assert got["oracle"].startswith("PASS")
    assert got["propagation"].startswith("used")


def test_summary(capsys, bench):
    code, out, _ = run(capsys, bench("cnt_cover"), "--summary", "--ascii")
    assert code == OK
    assert lines(out)["SUMMARY"] == "i=10 /\\ i0=0 /\\ c=c0+10 /\\ cnt=cnt0+10"


def test_output_is_deterministic(capsys, bench):
    f = bench("gopan07")
    strip = lambda o: [l for l in o.splitlines() if not l.startswith("TIME")]
    _, a, _ = run(capsys, f)
    _, b, _ = run(capsys, f, "--mu", "0,1")
    assert strip(a) == strip(b)


def test_dumps(capsys, bench):
    _, out, _ = run(capsys, bench("fig1"), "--dump-canonical", "--dump-ats", "--ascii")
    assert "switch{" in out and "case x>=50:" in out
    assert "rho1:" in out and "theta@l2: x=0 /\\ y=50" in out
    _, out, _ = run(capsys, bench("minver"), "--dump-paths")
    assert "path 1 (LOOP-END)" in out and "alpha_path=" in out


def test_compare_propagation(capsys, bench):
    code, out, _ = run(capsys, bench("rphase4"), "--compare-propagation")
    got = lines(out)
    assert code == OK
    assert got["ENTAILS"] == "yes" and got["SAMPLED"].endswith("PASS")
    assert "PPG" in got and "NO-PPG" in got


def test_parse_error_has_position(capsys, bench):
    f = bench("bad", "vars x;\nwhile (x < 3) { x = x * x; }\n")
    code, _, err = run(capsys, f)
    assert code == USAGE
    assert err.startswith(f"{f}:2:") and "error:" in err


@pytest.mark.parametrize("argv", [["missing.afl"], ["--mu", "x", "f.afl"], ["--rounds", "0", "f.afl"],
                                  ["--propagate", "sometimes", "f.afl"], []])
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == USAGE


def test_bad_oracle_box(capsys, bench):
    code, _, err = run(capsys, bench("fig1"), "--oracle-box", "x=9")
    assert code == USAGE and "box" in err


def test_directory_needs_suite(capsys, tmp_path):
    code, _, _ = run(capsys, str(tmp_path))
    assert code == USAGE


def test_help(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == OK and "--propagate" in out


def test_timeout_is_an_analysis_failure(capsys, bench):
    code, _, err = run(capsys, bench("janne_complex"), "--timeout", "0.3")
    assert code == FAILED and "analysis failed" in err


def test_suite(capsys, bench, tmp_path):
    bench("fig1")
    bench("popl07")
    code, out, _ = run(capsys, str(tmp_path), "--suite", "--check")
    rows = out.splitlines()
    assert code == OK
    assert rows[0].split() == ["name", "status", "time", "check", "oracle"]
    assert {r.split()[0] for r in rows[1:]} == {"fig1", "popl07"}
    assert all(r.split()[1] == "PASS" and r.split()[3] == "PASS" for r in rows[1:])


def test_module_entry_point(bench):
    r = subprocess.run([sys.executable, "-m", "disjinv", bench("fig1")], capture_output=True, text=True)
    assert r.returncode == 0 and "HEAD:" in r.stdout
