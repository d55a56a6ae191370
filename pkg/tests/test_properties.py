from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from dulattice.diagram import build_zalpha, reduce_boundary
from dulattice.elt import elt_curve, elt_point
from dulattice.lattice import FlowSpectrum, format_dsl, parse_dsl, spec_from_bonds, trace_worldlines


@st.composite
def cells(draw):
    """Random base cells: N <= 3, up to four layers of non-overlapping bonds."""
    N = draw(st.integers(1, 3))
    layers = []
    for _ in range(draw(st.integers(1, 4))):
        free = list(range(2 * N - 1))
        layer = []
        for b in draw(st.lists(st.sampled_from(free), max_size=N, unique=True)):
            if all(abs(b - c) > 1 for c in layer):
                layer.append(b)
        if layer:
            layers.append(sorted(layer))
    if not layers:
        layers = [[0]]
    return spec_from_bonds(N, layers)


@st.composite
def flows(draw):
    """Mirror-symmetric flows, as produced by worldlines of physical cells."""
    N = draw(st.integers(1, 6))
    counts = {}
    for v in draw(st.lists(st.fractions(0, 1, max_denominator=7), min_size=N, max_size=N)):
        for s in (v, -v):
            counts[s] = counts.get(s, 0) + 1
    return FlowSpectrum(N, tuple(sorted(counts.items())))


@given(flows(), st.fractions(-2, 2, max_denominator=9))
def test_curve_agrees_with_pointwise_formula(flow, v):
    curve = elt_curve(flow)
    assert curve.is_convex()
    assert curve(v) == elt_point(flow, v)
    assert curve(v) >= abs(v)  # never below the light-cone bound
    if abs(v) >= 1:
        assert curve(v) == abs(v)


@given(cells())
def test_dsl_roundtrip_random_cells(spec):
    back = parse_dsl(format_dsl(spec))
    assert back.layers == spec.layers and back.N == spec.N


@given(cells())
def test_flow_multiplicities_cover_every_leg(spec):
    flow = trace_worldlines(spec)
    assert sum(n for _, n in flow.entries) == 2 * spec.N
    assert sum((v * n for v, n in flow.entries), F(0)) == 0


@settings(max_examples=30, deadline=None)
@given(cells(), st.integers(1, 3), st.integers(1, 3), st.integers(0, 50))
def test_scan_order_never_changes_the_outcome(spec, m, n, seed):
    diag = build_zalpha(spec, m, n)
    a = reduce_boundary(diag)
    b = reduce_boundary(diag, seed=seed)
    assert a.fully_reduced == b.fully_reduced
    if a.fully_reduced:
        assert a.overlaps == b.overlaps
