from fractions import Fraction as F

import pytest

from dulattice.lattice import (
    BUILTIN_NAMES,
    LatticeError,
    Placement,
    all_builtins,
    builtin,
    check_unitary,
    compose_base_unitary,
    compress,
    family_u_bonds,
    format_dsl,
    load_lattice,
    parse_dsl,
    schmidt_rank,
    spec_from_bonds,
    swap_permutation,
    trace_worldlines,
    uncompress,
    worldline_cycles,
)


def flow(name, **kw):
    return trace_worldlines(builtin(name, **kw)).as_dict()


def test_du_flow():
    assert flow("du") == {F(-1): 1, F(1): 1}


def test_kagome_flow_has_static_line():
    assert flow("kagome") == {F(-1): 1, F(0): 2, F(1): 1}


def test_pyramid4_flow():
    assert flow("pyramid4") == {F(-1): 1, F(-1, 3): 3, F(1, 3): 3, F(1): 1}


def test_fiveray_flow():
    f = flow("fiveray")
    assert sorted(f) == [F(-1), F(-1, 3), F(0), F(1, 3), F(1)]
    assert sum(f.values()) == 10


@pytest.mark.parametrize("N", range(4, 9))
def test_family_flows(N):
    inner = F(N - 3, N - 1)
    for fam in ("familyU", "familyV"):
        f = flow(fam, N=N)
        assert set(f) == {F(-1), -inner, inner, F(1)}
        assert trace_worldlines(builtin(fam, N=N)).is_mirror_symmetric()


def test_family_u4_is_pyramid4():
    assert family_u_bonds(4) == [[0, 2, 4, 6], [1, 3, 5], [2, 4], [3]]


def test_permutation_is_bijection():
    for spec in all_builtins(family_range=range(4, 6)):
        pi = swap_permutation(spec)
        assert sorted(pi) == list(range(uncompress(spec).legs))


def test_worldlines_cover_all_legs():
    for name in ("pyramid4", "rocket4", "twoloc", "threeunsolv"):
        cycles = worldline_cycles(builtin(name))
        legs = sorted(leg for w in cycles for leg in w.legs)
        assert legs == list(range(builtin(name).legs))


def test_dsl_roundtrip():
    for name in ("pyramid4", "kagome_chm", "twoloc"):
        spec = builtin(name)
        back = parse_dsl(format_dsl(spec), name)
        assert back.layers == spec.layers
        assert (back.d, back.N) == (spec.d, spec.N)


def test_dsl_errors():
    with pytest.raises(LatticeError):
        parse_dsl("dim 2\nlegs 4\nlayer: (0) bogus\n")
    with pytest.raises(LatticeError):
        parse_dsl("legs 4\nlayer: (0)\n")
    with pytest.raises(LatticeError):
        parse_dsl("dim 2\nlegs 4\nlayer: (0) (1)\n")  # overlapping gates


def test_load_lattice_from_file(tmp_path):
    path = tmp_path / "cell.dsl"
    path.write_text("# test\ndim 2\nlegs 4\nlayer: (0) (2)\nlayer: (1)\n")
    spec = load_lattice(str(path))
    assert spec.layers == builtin("kagome").layers


def test_compression_roundtrip():
    for name in ("kagome", "pyramid4", "rocket4", "nested_kagome"):
        spec = builtin(name)
        c = compress(spec)
        assert c.is_compressed and c.N == spec.N // 2
        assert uncompress(c).layers == spec.layers


def test_compress_needs_even_N():
    with pytest.raises(LatticeError):
        compress(builtin("pyramid3"))


def test_unknown_and_family_errors():
    with pytest.raises(LatticeError):
        builtin("nope")
    with pytest.raises(LatticeError):
        builtin("familyU", N=3)
    assert builtin("familyV6").N == 6


def test_placement_validation():
    with pytest.raises(LatticeError):
        Placement("bogus", 0)
    with pytest.raises(LatticeError):
        spec_from_bonds(2, [[3]])


def test_composed_gates_are_unitary():
    for name in ("du", "kagome", "pyramid4", "twoloc", "pyramid4_chm", "kagome_chm"):
        assert check_unitary(builtin(name), seed=1)


def test_swap_substitution_is_permutation():
    u = compose_base_unitary(builtin("pyramid4"), gates="swap").entries
    assert set(abs(u).ravel().round(12)) <= {0.0, 1.0}


def test_schmidt_rank_matches_worldlines():
    # rank d^(sum n_i |v_i|): du 4, kagome 4, pyramid4 16
    assert schmidt_rank(builtin("du"), seed=0) == 4
    assert schmidt_rank(builtin("kagome"), seed=0) == 4
    assert schmidt_rank(builtin("pyramid4"), seed=0) == 16


def test_builtin_names_all_load():
    for name in BUILTIN_NAMES:
        if name in ("familyU", "familyV"):
            continue
        assert builtin(name).placements
