from __future__ import annotations

import json

import pytest

from nmforge.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_canonical(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "all", "--scenario", "canonical")
    assert code == 0
    assert "checks passed" in out


def test_verify_writes_tsv_and_figure(capsys, tmp_path):
    code, _, err = run(capsys, "verify", "--suite", "doob", "--seeds", "1..3",
                       "--out", str(tmp_path), "--timings")
    assert code == 0
    assert (tmp_path / "verify.tsv").read_text().startswith("suite\tinstance")
    assert (tmp_path / "verify.png").stat().st_size > 0
    assert "doob" in err


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "dual", "--scenario", "canonical", "--format", "json")
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_rep(capsys):
    code, out, _ = run(capsys, "rep", "--scenario", "canonical", "--function", "f", "--chain", "cX")
    assert code == 0
    assert "a\t1\t1" in out and "b\t3\t1" in out
    assert "# stabilization_level\t1" in out


def test_rep_p_shows_level_proxy(capsys):
    code, out, _ = run(capsys, "rep", "--scenario", "canonical", "--function", "f", "--chain", "cX", "--p", "2")
    assert code == 0
    assert "0\t2.2360679775\t2.2360679775" in out


def test_pullback(capsys):
    code, out, _ = run(capsys, "pullback", "--scenario", "canonical")
    assert code == 0
    assert "v\ty3\t4\t4" in out


def test_dual_and_dual_of_pullback(capsys):
    code, out, _ = run(capsys, "dual", "--scenario", "canonical")
    assert code == 0 and "(1, 4)" in out
    code, out, _ = run(capsys, "dual-of-pullback", "--scenario", "canonical")
    assert code == 0 and "(1, 0, 4)" in out


@pytest.mark.parametrize("what", ["atoms", "module", "morphism", "diagram"])
def test_lift(capsys, what):
    code, out, _ = run(capsys, "lift", "--scenario", "canonical-null", "--what", what)
    assert code == 0
    assert "FAIL" not in out


def test_lift_atoms_content(capsys):
    _, out, _ = run(capsys, "lift", "--scenario", "canonical-null", "--what", "atoms")
    assert "a\ta,c" in out
    _, out, _ = run(capsys, "lift", "--scenario", "canonical-null", "--what", "diagram")
    assert "y4\ty1" in out


def test_weakstar_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "weakstar", "--scenario", "canonical", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "weakstar.tsv").read_text().splitlines()
    assert rows[1].split("\t")[:3] == ["0", "1/4", "1/4"]
    assert rows[-1].split("\t")[:3] == ["2", "0", "0"]
    assert (tmp_path / "weakstar.png").stat().st_size > 0


def test_generate_round_trip(capsys, tmp_path):
    path = tmp_path / "g.json"
    code, _, _ = run(capsys, "generate", "--seed", "4", "--out", str(path))
    assert code == 0
    code, out, _ = run(capsys, "verify", "--suite", "pullback", "--scenario", str(path))
    assert code == 0


def test_errors_exit_two(capsys):
    code, _, err = run(capsys, "rep", "--scenario", "canonical", "--function", "zzz")
    assert code == 2
    assert "unknown function" in err
    code, _, err = run(capsys, "rep", "--scenario", "no/such/file.json")
    assert code == 2
    with pytest.raises(SystemExit):
        main(["verify", "--suite", "nope", "--scenario", "canonical"])
