import json

import pytest

from dulattice.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_elt_pyramid4(capsys):
    code, out, _ = run(capsys, "elt", "pyramid4", "--v", "0")
    assert code == 0 and out.strip() == "1/2"


def test_elt_from_reduction(capsys):
    code, out, _ = run(capsys, "elt", "fiveray", "--v", "1/3", "--from-reduction")
    assert code == 0 and out.strip() == "7/15"


def test_elt_curve(capsys):
    code, out, _ = run(capsys, "elt", "kagome", "--curve", "--samples", "3")
    assert code == 0 and out.splitlines()[0] == "v,E"


def test_reduce_twoloc_stuck(capsys):
    code, out, _ = run(capsys, "reduce", "twoloc", "--m", "3", "--n", "3")
    assert code == 0
    assert json.loads(out)["status"] == "stuck"


def test_reduce_dump_trace(capsys, tmp_path):
    path = tmp_path / "trace.json"
    code, out, _ = run(capsys, "reduce", "du", "--m", "2", "--n", "2", "--dump-trace", str(path))
    assert code == 0 and json.loads(out)["z2"] == "1/16"
    assert json.loads(path.read_text())[0]["rule"] in ("R1", "R2", "R3")


def test_usage_error(capsys):
    code, _, _ = run(capsys, "sff", "run", "--lattice", "du", "--L", "-1")
    assert code == 2


def test_domain_error(capsys):
    code, _, err = run(capsys, "elt", "unknown_cell", "--v", "0")
    assert code == 1 and "unknown lattice" in err


def test_sff_run(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DULATTICE_OUT", str(tmp_path))
    code, out, _ = run(capsys, "sff", "run", "--lattice", "du", "--L", "4", "--tmax", "3", "--reps", "10", "--seed", "1")
    assert code == 0
    rows = (tmp_path / "sff.csv").read_text().splitlines()
    assert rows[0] == "t,K,stderr,rmt_cue,rmt_coe" and len(rows) == 5


def test_seeded_commands_are_reproducible(capsys):
    args = ("oracle", "z", "twoloc", "--m", "1", "--n", "1", "--seed", "4")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


def test_knot_and_defects(capsys):
    code, out, _ = run(capsys, "knot", "du", "--m", "1", "--n", "1", "--bracket", "--pd")
    rec = json.loads(out)
    assert code == 0 and rec["unlinked"] and rec["components"] == 2 and rec["z2"] == "1/4"
    code, out, _ = run(capsys, "defects", "v0", "pyramid3")
    assert json.loads(out)["crossing"] is True
    code, out, _ = run(capsys, "defects", "scan", "twoloc", "--m", "1", "--n", "1", "--k", "1")
    assert [o["pattern"] for o in json.loads(out)] == ["one-body", "one-body"]


def test_lattice_and_gate(capsys):
    code, out, _ = run(capsys, "lattice", "show", "familyU", "--N", "5")
    assert code == 0 and json.loads(out)["N"] == 5
    code, out, _ = run(capsys, "lattice", "worldlines", "kagome")
    assert {e["v"] for e in json.loads(out)["flow"]} == {"-1/1", "0/1", "1/1"}
    code, out, _ = run(capsys, "gate", "--kind", "du", "--d", "3", "--seed", "2")
    assert json.loads(out)["dual_unitary"] is True


def test_correlate(capsys):
    code, out, _ = run(capsys, "correlate", "du", "--x", "0", "--t", "2", "--L", "8", "--seed", "1")
    assert code == 0 and abs(json.loads(out)["abs"]) < 1e-12
    code, _, err = run(capsys, "correlate", "du", "--x", "0", "--t", "2", "--L", "8", "--backend", "channel")
    assert code == 1


def test_help_per_subcommand(capsys):
    for cmd in ("reduce", "elt", "knot", "correlate"):
        assert main([cmd, "--help"]) == 0
        assert "usage: dulattice " + cmd in capsys.readouterr().out
