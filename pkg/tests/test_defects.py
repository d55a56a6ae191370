from fractions import Fraction as F

import pytest

from dulattice.defects import (
    DefectError,
    classify,
    crossing_v0,
    crossing_v0_witness,
    defect_diagram,
    family_pattern,
    has_self_loop,
    is_kbody_irreducible,
    isomorphic,
    scan_kbody,
    special_four_body,
)
from dulattice.diagram import is_completely_reducible
from dulattice.lattice import builtin


def test_twoloc_one_body():
    found = scan_kbody(builtin("twoloc"), 1, 1, 1)
    assert len(found) == 2
    assert {o.pattern for o in found} == {"one-body"}
    assert all(o.x == (F(0),) for o in found)


def test_du_has_no_obstructions():
    assert scan_kbody(builtin("du"), 2, 2, 1) == []
    assert scan_kbody(builtin("kagome"), 2, 2, 2) == []


def test_threeunsolv_two_body():
    spec = builtin("threeunsolv")
    assert scan_kbody(spec, 2, 2, 1) == []
    pats = {o.pattern for o in scan_kbody(spec, 2, 2, 2)}
    assert "two-body-i" in pats


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_ladder_is_n_body_irreducible(N):
    diag = family_pattern(N)
    assert len(diag.nodes) == N
    assert is_kbody_irreducible(diag)
    assert not has_self_loop(diag)


def test_special_four_body_is_not_a_ladder():
    diag = special_four_body()
    assert is_kbody_irreducible(diag)
    assert not isomorphic(diag, family_pattern(4))
    assert classify(diag) == "four-body-special"


def test_classify_catalogue():
    assert classify(family_pattern(1)) == "one-body"
    assert classify(family_pattern(2)) == "two-body-ii"
    assert classify(family_pattern(3)) == "ladder-3"


def test_defect_diagram_tags():
    diag = defect_diagram(builtin("twoloc"), 1, 1, [(0, 0, 0)])
    tags = [nd.tag for nd in diag.nodes.values()]
    assert tags.count("GENERIC") == 1


def test_scan_rejects_k0():
    with pytest.raises(DefectError):
        scan_kbody(builtin("du"), 1, 1, 0)


def test_crossing_v0_builtin_values():
    assert crossing_v0(builtin("twoloc"))
    assert crossing_v0(builtin("pyramid3"))
    for name in ("du", "kagome", "pyramid4", "fiveray", "threeunsolv", "nested_kagome"):
        assert not crossing_v0(builtin(name)), name


def test_crossing_implies_stuck():
    for name in ("twoloc", "pyramid3", "du3_partial"):
        assert crossing_v0(builtin(name))
        assert any(not is_completely_reducible(builtin(name), k, k) for k in range(1, 5))


def test_witness_json():
    w = crossing_v0_witness(builtin("twoloc"))
    rec = w.to_json()
    assert set(rec) == {"legs", "cut", "layers"}
    t0, t, t1 = rec["layers"]
    assert t0 <= t < t1
