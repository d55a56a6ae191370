import warnings
from fractions import Fraction as F

import pytest

from dulattice.elt import (
    ELTError,
    FlowDensity,
    as_fraction,
    continuous_elt,
    curvature_check,
    elt_curve,
    elt_point,
    otoc_rate,
    schmidt_rank_prediction,
    v_butterfly,
    v_entanglement,
    vE_from_schmidt,
)
from dulattice.lattice import FlowSpectrum, builtin, trace_worldlines


def flow(name, **kw):
    return trace_worldlines(builtin(name, **kw))


def test_du_is_flat_inside_light_cone():
    f = flow("du")
    assert all(elt_point(f, v) == 1 for v in (0, F(1, 2), -1, 1))
    assert elt_point(f, F(3, 2)) == F(3, 2)


def test_velocities():
    assert v_entanglement(flow("pyramid4")) == F(1, 2)
    assert v_butterfly(flow("pyramid4")) == 1
    assert v_entanglement(flow("nested_kagome")) == F(1, 4)


def test_curve_matches_point_evaluation():
    for name in ("pyramid4", "fiveray", "rocket4"):
        f = flow(name)
        curve = elt_curve(f)
        assert curve.is_convex()
        for v in (F(-3, 2), F(-1, 2), 0, F(1, 5), F(1, 3), F(2, 3), 1, 2):
            assert curve(v) == elt_point(f, v)


def test_curve_csv():
    text = elt_curve(flow("kagome")).to_csv(5)
    lines = text.strip().splitlines()
    assert lines[0] == "v,E" and len(lines) == 6


def test_floats_rejected():
    with pytest.raises(ELTError):
        as_fraction(0.5)
    assert as_fraction("2/3") == F(2, 3)


def test_otoc_rate():
    f = flow("kagome")
    assert otoc_rate(f, F(1, 2)) == F(1, 4)
    with pytest.raises(ELTError):
        otoc_rate(f, 1)


def test_asymmetric_flow_warns():
    f = FlowSpectrum(1, ((F(0), 1), (F(1), 1)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        elt_point(f, 0)
    assert caught


def test_schmidt_relation():
    for name in ("du", "kagome", "pyramid4", "fiveray"):
        assert vE_from_schmidt(builtin(name), seed=4) == pytest.approx(float(v_entanglement(flow(name))), abs=1e-9)
    assert schmidt_rank_prediction(flow("pyramid4"), 2) == 16


def test_uniform_density():
    dens = FlowDensity.uniform()
    for v in (0.0, 0.3, 0.9):
        assert continuous_elt(dens, v) == pytest.approx((1 + v * v) / 2, abs=1e-8)
    assert curvature_check(dens, 0.4) == pytest.approx(1.0, abs=1e-3)


def test_bumps_reproduce_discrete_tension():
    dens = FlowDensity.bumps([-1 / 3, 1 / 3, -1.0, 1.0], [3 / 8, 3 / 8, 1 / 8, 1 / 8], 1e-4)
    assert continuous_elt(dens, 0.0) == pytest.approx(0.5, abs=1e-4)


def test_density_normalisation_checked():
    with pytest.raises(ELTError):
        FlowDensity(lambda u: 1.0)
    with pytest.raises(ELTError):
        continuous_elt(FlowDensity.uniform(), 1.5)
