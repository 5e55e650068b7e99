import io
import sys

import pytest

from polyprov.cli import main


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_bundled(capsys):
    code, out, _ = run(["check", "lemma20"], capsys)
    assert code == 0 and "Lemma19Interp" in out


def test_check_file(tmp_path, capsys):
    p = tmp_path / "ident.script"
    p.write_text("script: ident\natoms: p\ngoal: p |- p\nsteps:\n1. p |- p ; id\n")
    code, out, _ = run(["check", str(p)], capsys)
    assert code == 0 and "ident: ok" in out


def test_check_failure_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.script"
    p.write_text("script: bad\natoms: p q\ngoal: p |- q\nsteps:\n1. p |- q ; id\n")
    code, out, _ = run(["check", str(p)], capsys)
    assert code == 1 and "failed at step 1" in out


def test_usage_errors(capsys):
    assert run(["check"], capsys)[0] == 2
    assert run(["nonsense"], capsys)[0] == 2
    assert run(["check", "/no/such/file.script"], capsys)[0] == 2


def test_corpus(capsys):
    code, out, _ = run(["corpus"], capsys)
    assert code == 0 and "8/8 entries ok" in out


def test_translate(capsys):
    code, out, _ = run(["translate", "exists y <= x. in(y, P)", "--n", "2"], capsys)
    assert code == 0 and "P[0]" in out and "P[2]" in out


def test_compile_then_sat(capsys, monkeypatch):
    for n, expect, word in [(4, 0, "SAT"), (5, 1, "UNSAT")]:
        code, dimacs, _ = run(["compile-tm", "parity", "--n", str(n)], capsys)
        assert code == 0 and dimacs.startswith(("c", "p"))
        code, out, _ = run(["sat"], capsys, stdin=dimacs, monkeypatch=monkeypatch)
        assert code == expect and out.split()[0] == word


def test_sat_from_file(tmp_path, capsys):
    p = tmp_path / "x.cnf"
    p.write_text("p cnf 2 2\n1 2 0\n-1 0\n")
    code, out, _ = run(["sat", str(p)], capsys)
    assert code == 0 and out.startswith("SAT")


def test_pair_separate_tsv(capsys):
    code, out, _ = run(["pair-separate", "parity", "odds", "--n-range", "1..4",
                        "--format", "tsv"], capsys)
    assert code == 0
    rows = [l.split("\t") for l in out.strip().splitlines() if l[0].isdigit()]
    assert [r[-1] for r in rows] == ["C", "-", "C", "-"]


def test_pair_select_covering_violation(capsys):
    code, out, err = run(["pair-select", "mult2", "always_reject", "--n", "1"], capsys)
    assert code == 1


def test_budget_exit_code(capsys):
    code, _, _ = run(["compile-tm", "parity", "--n", "30", "--budget-atoms", "50"], capsys)
    assert code == 3


@pytest.mark.parametrize("argv", [
    ["corpus"],
    ["compile-tm", "mod4nz", "--n", "3"],
    ["pair-separate", "parity", "odds", "--n-range", "1..5"],
])
def test_output_is_deterministic(argv, capsys):
    assert run(argv, capsys) == run(argv, capsys)
