from fractions import Fraction as F

import numpy as np
import pytest

from dulattice.diagram import reduce_lattice
from dulattice.lattice import builtin
from dulattice.numeric import (
    NumericError,
    brickwork_circuit,
    contract_z_numeric,
    correlation,
    correlation_brute,
    correlation_channel,
    evolve_reduced,
    flat_spectrum_check,
    floquet_unitary,
    form_factor,
    rmt,
    sff,
    traceless_basis,
    worldline_path,
    worldline_velocity,
)

Z = np.diag([1.0, -1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_du_z_values():
    assert contract_z_numeric(builtin("du"), 2, 2, 2, seed=0) == pytest.approx(2**-4, abs=1e-10)
    assert contract_z_numeric(builtin("du"), 1, 1, 3, seed=0) == pytest.approx(2**-4, abs=1e-10)


def test_swap_gates_give_same_value():
    a = contract_z_numeric(builtin("du"), 2, 2, 2, seed=1)
    b = contract_z_numeric(builtin("du"), 2, 2, 2, gates="swap")
    assert a == pytest.approx(b, abs=1e-10)


def test_compressed_cell_value():
    assert contract_z_numeric(builtin("pyramid4_chm"), 1, 1, 2, seed=3) == pytest.approx(1 / 4, abs=1e-10)


def test_oracle_matches_reduction():
    for name, m, n in [("kagome", 1, 2), ("rocket4_chm", 2, 1), ("coord_du", 1, 1)]:
        spec = builtin(name)
        expected = 2.0 ** -reduce_lattice(spec, m, n).overlaps
        for seed in range(3):
            assert contract_z_numeric(spec, m, n, 2, seed=seed) == pytest.approx(expected, abs=1e-10)


def test_twoloc_depends_on_gates():
    vals = [contract_z_numeric(builtin("twoloc"), 1, 1, 2, seed=s) for s in range(3)]
    assert max(vals) - min(vals) > 1e-4 * max(vals)


def test_z_argument_checks():
    with pytest.raises(NumericError):
        contract_z_numeric(builtin("du"), 1, 1, 4)
    with pytest.raises(NumericError):
        contract_z_numeric(builtin("pyramid4"), 3, 3, 2)  # memory budget


def test_du_correlations_vanish_inside_cone():
    circ = brickwork_circuit(builtin("du"), 8, 3, 5)
    vals = correlation_brute(circ, Z, X, 4, 3)
    assert all(abs(v) < 1e-12 for x, v in vals.items() if abs(x) < 3)


def test_channel_matches_brute_on_light_ray():
    circ = brickwork_circuit(builtin("du"), 8, 2, 6)
    x = worldline_path(circ, 3, 2)[-1][2] - 3
    assert abs(x) == 2
    for s in traceless_basis(2):
        for r in traceless_basis(2):
            a = correlation_brute(circ, s, r, 3, 2)[x]
            b = correlation_channel(circ, s, r, 3, x, 2)
            assert abs(a - b) < 1e-10


def test_channel_refuses_points_off_the_worldline():
    circ = brickwork_circuit(builtin("du"), 8, 2, 6)
    with pytest.raises(NumericError):
        correlation_channel(circ, Z, Z, 3, 0, 2)


def test_swap_circuit_correlations_do_not_decay():
    spec = builtin("kagome")
    circ = brickwork_circuit(spec, 8, 3, 0)
    for legs_mats in circ.ops:
        for k, (legs, _, p) in enumerate(legs_mats):
            legs_mats[k] = (legs, np.eye(4)[[0, 2, 1, 3]].astype(complex), p)
    vals = [abs(correlation_channel(circ, Z, Z, 4, worldline_path(circ, 4, t)[-1][2] - 4, t)) for t in (1, 2, 3)]
    assert vals == pytest.approx([1.0, 1.0, 1.0])


def test_traceless_check_and_cone_check():
    circ = brickwork_circuit(builtin("du"), 6, 4, 0)
    with pytest.raises(NumericError):
        evolve_reduced(circ, np.eye(2), 3, 1)
    with pytest.raises(NumericError):
        evolve_reduced(circ, Z, 3, 4)  # the cone reaches the chain ends
    with pytest.raises(NumericError):
        correlation(builtin("du"), Z, Z, 0, 1, L=12)


def test_worldline_velocity():
    spec = builtin("pyramid4")
    speeds = {abs(worldline_velocity(spec, leg, 1)) for leg in range(8)}
    assert speeds == {F(1, 3), F(1)}


def test_floquet_unitary_and_k0():
    U = floquet_unitary(builtin("du"), 4, 0)
    assert np.allclose(U @ U.conj().T, np.eye(16))
    phases = np.angle(np.linalg.eigvals(U))
    assert form_factor(phases, np.array([0]))[0, 0] == pytest.approx(256)
    K3 = abs(np.trace(np.linalg.matrix_power(U, 3))) ** 2
    assert form_factor(phases, np.array([3]))[0, 0] == pytest.approx(K3)


def test_sff_pipeline_is_consistent_and_seeded():
    res = sff(builtin("du"), 4, 6, 12, seed=3)
    again = sff(builtin("du"), 4, 6, 12, seed=3)
    assert np.array_equal(res.K, again.K)
    recomputed = form_factor(res.phases, res.t).mean(axis=0)
    assert np.array_equal(recomputed, res.K)
    assert np.all(res.K >= 0) and res.K[0] == pytest.approx(16**2)
    assert res.to_csv().splitlines()[0] == "t,K,stderr,rmt_cue,rmt_coe"


def test_sff_parallel_matches_serial():
    a = sff(builtin("du"), 4, 4, 10, seed=1, jobs=1)
    b = sff(builtin("du"), 4, 4, 10, seed=1, jobs=2)
    assert np.array_equal(a.K, b.K)


def test_sff_rejects_small_ensembles():
    with pytest.raises(NumericError):
        sff(builtin("du"), 4, 4, 5)


def test_rmt_predictions():
    assert rmt("CUE", 100, 30) == 30
    assert rmt("CUE", 100, 300) == 100
    assert rmt("COE", 100, 50) == pytest.approx(100 - 50 * np.log(2))
    # continuous at t = D
    assert rmt("COE", 100, 100) == pytest.approx(rmt("COE", 100, 100 + 1e-9), abs=1e-6)
    with pytest.raises(NumericError):
        rmt("GUE", 10, 1)


def test_flat_spectra():
    assert flat_spectrum_check(builtin("pyramid4"), trials=3)
    assert not flat_spectrum_check(builtin("twoloc"), trials=3)
    assert flat_spectrum_check(builtin("kagome_chm"), trials=3)
