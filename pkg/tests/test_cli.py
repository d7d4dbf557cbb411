"""Golden-file tests for the command line.

Each case runs inside the corpus directory and compares exit code, stdout
and stderr against ``tests/golden/<case>.txt``. Set ``UPDATE_GOLDEN=1`` to
rewrite the files after an intended change.
"""

import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from em1real.cli import run_command

GOLDEN = Path(__file__).parent / "golden"
UPDATE = bool(os.environ.get("UPDATE_GOLDEN"))

CASES = {
    "check_p1": ["check", "P1.proof"],
    "check_p2": ["check", "P2.proof"],
    "check_p2_em1": ["check", "P2_em1.proof"],
    "check_p3": ["check", "P3.proof"],
    "check_bad": ["check", "bad.proof"],
    "check_missing": ["check", "nowhere.proof"],
    "extract_p1": ["extract", "P1.proof"],
    "extract_p2": ["extract", "P2.proof"],
    "extract_p3": ["extract", "P3.proof"],
    "normalize_chi_s1": ["normalize", "chi_geq.term", "--state", "s1.state"],
    "normalize_chi_s0": ["normalize", "chi_geq.term", "--state", "s0.state"],
    "normalize_chi_innermost": ["normalize", "chi_geq.term", "--state", "s2.state", "--strategy", "innermost"],
    "normalize_oracle_s1": ["normalize", "oracle_geq.term", "--state", "s1.state"],
    "normalize_open": ["normalize", "chi_geq.term"],
    "normalize_broken": ["normalize", "broken.form", "--kind", "term"],
    "realizes_identity": ["realizes", "identity_geq.term", "total_geq.form", "--state", "s1.state", "--depth", "5"],
    "realizes_wrong": ["realizes", "wrong_next.term", "total_next.form", "--state", "s0.state", "--depth", "3"],
    "realizes_broken_formula": ["realizes", "identity_geq.term", "broken.form", "--state", "s0.state"],
    "witness_p1": ["witness", "P1.proof", "--pred", "NEXT", "--input", "5"],
    "witness_p2": ["witness", "P2.proof", "--pred", "NEXT", "--input", "5"],
    "witness_p2_em1": ["witness", "P2_em1.proof", "--pred", "NEXT", "--input", "12"],
    "witness_identity": ["witness", "identity_geq.term", "--pred", "GEQ", "--input", "7"],
    "witness_wrong": ["witness", "wrong_next.term", "--pred", "NEXT", "--input", "4"],
    "witness_iter_cap": ["witness", "P2.proof", "--pred", "NEXT", "--input", "5", "--iter-cap", "1"],
    "witness_warm": ["witness", "P2.proof", "--pred", "NEXT", "--input", "5", "--warm-start", "s2.state"],
    "witness_no_pred": ["witness", "P2.proof", "--input", "5"],
    "converge_oracle": ["converge", "oracle_geq.term", "--chain", "s0.state", "s1.state", "s2.state"],
    "converge_bad_chain": ["converge", "oracle_geq.term", "--chain", "s1.state", "s0.state"],
    "no_prelude": ["--no-prelude", "check", "P1.proof"],
}

EXPECTED_CODES = {
    "check_bad": 1,
    "check_missing": 2,
    "normalize_broken": 2,
    "realizes_wrong": 1,
    "realizes_broken_formula": 2,
    "witness_wrong": 1,
    "witness_iter_cap": 3,
    "witness_no_pred": 2,
    "converge_bad_chain": 1,
    "no_prelude": 1,
    "normalize_open": 1,
}


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def render(code, out, err):
    return f"exit {code}\n--- stdout\n{out}--- stderr\n{err}"


def compare(name, text):
    path = GOLDEN / f"{name}.txt"
    if UPDATE:
        GOLDEN.mkdir(exist_ok=True)
        path.write_text(text)
    assert text == path.read_text()


@pytest.fixture
def in_corpus(corpus, monkeypatch):
    monkeypatch.chdir(corpus)
    monkeypatch.setenv("COLUMNS", "80")  # argparse wraps usage to the terminal width


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(in_corpus, name):
    code, out, err = run(CASES[name])
    assert code == EXPECTED_CODES.get(name, 0), err
    compare(name, render(code, out, err))


def test_spec_examples(in_corpus):
    assert run(["witness", "P2.proof", "--pred", "NEXT", "--input", "5"])[:2] == (0, "6\n")
    assert run(["normalize", "chi_geq.term", "--state", "s1.state"])[:2] == (0, "true\n")
    code, _, err = run(["check", "bad.proof"])
    assert code == 1 and err.startswith("bad.proof:2:1: error: eigenvariable-violation")


def test_witness_trace_file(in_corpus, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, out, _ = run(["witness", "P2.proof", "--pred", "NEXT", "--input", "5", "--trace", str(trace)])
    assert (code, out) == (0, "6\n")
    compare("witness_p2_trace", trace.read_text())
    rows = [json.loads(line) for line in trace.read_text().splitlines()]
    assert rows[0]["tau"] == [{"pred": "NEXT", "args": [5], "witness": 6}]
    assert rows[-1]["stable"]


def test_warm_trace_is_flagged(in_corpus, tmp_path):
    trace = tmp_path / "warm.jsonl"
    run(["witness", "P2.proof", "--pred", "NEXT", "--input", "5", "--warm-start", "s2.state", "--trace", str(trace)])
    assert all(json.loads(line)["warm_start"] for line in trace.read_text().splitlines())


def test_extract_output_file(in_corpus, tmp_path):
    target = tmp_path / "p1.term"
    code, out, _ = run(["extract", "P1.proof", "-o", str(target)])
    assert code == 0
    assert target.read_text().strip() == out.strip() == "\\a:N. (S a, empty)"
    # the written realizer is itself a valid term file
    assert run(["witness", str(target), "--pred", "NEXT", "--input", "3"])[:2] == (0, "4\n")


def test_extra_definitions(in_corpus, tmp_path):
    defs = tmp_path / "extra.defs"
    defs.write_text("def TWICE : N -> N -> Bool = \\x:N. \\y:N. eq y (plus x x)\n")
    term = tmp_path / "double.term"
    term.write_text("\\a:N. (plus a a, empty)\n")
    code, out, _ = run(["--defs", str(defs), "witness", str(term), "--pred", "TWICE", "--input", "4"])
    assert (code, out) == (0, "8\n")


def test_module_entry_point(corpus):
    proc = subprocess.run(
        [sys.executable, "-m", "em1real", "witness", "P2.proof", "--pred", "NEXT", "--input", "9"],
        cwd=corpus, capture_output=True, text=True,
    )
    assert (proc.returncode, proc.stdout) == (0, "10\n")
