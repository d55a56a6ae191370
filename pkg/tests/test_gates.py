import numpy as np
import pytest

from dulattice.gates import (
    ComplexHadamard,
    Label,
    TwoSiteGate,
    controlled_phase,
    fourier_matrix,
    identity,
    is_dual_unitary,
    is_unitary,
    operator_schmidt_spectrum,
    random_chm,
    random_dual_unitary,
    random_unitary_gate,
    realign,
    schmidt_rank_of,
    swap,
    unrealign,
)


def test_label_flip():
    assert Label.CIRCLE.flip() is Label.SQUARE
    assert Label.SQUARE.flip().flip() is Label.SQUARE


@pytest.mark.parametrize("d", [2, 3, 4])
def test_swap_is_dual_unitary(d):
    s = swap(d)
    assert is_unitary(s) and is_dual_unitary(s)
    assert schmidt_rank_of(operator_schmidt_spectrum(s)) == d * d


def test_identity_is_not_dual_unitary():
    assert is_unitary(identity(2))
    assert not is_dual_unitary(identity(2))
    assert schmidt_rank_of(operator_schmidt_spectrum(identity(3))) == 1


@pytest.mark.parametrize("d", [2, 3, 5])
def test_random_dual_unitary(d):
    g = random_dual_unitary(d, seed=11)
    assert is_unitary(g, 1e-10)
    assert is_dual_unitary(g, 1e-10)
    spec = operator_schmidt_spectrum(g)
    np.testing.assert_allclose(spec, np.ones(d * d), atol=1e-9)


def test_random_dual_unitary_is_seeded():
    a = random_dual_unitary(3, seed=5).entries
    b = random_dual_unitary(3, seed=5).entries
    assert np.array_equal(a, b)


def test_haar_gate_is_generically_not_dual_unitary():
    g = random_unitary_gate(2, seed=1)
    assert is_unitary(g)
    assert not is_dual_unitary(g)


def test_realign_roundtrip():
    g = random_unitary_gate(3, seed=2)
    np.testing.assert_allclose(unrealign(realign(g), 3), g.entries)


def test_controlled_phase_diagonal():
    g = controlled_phase(np.zeros((2, 2)))
    assert np.allclose(g.entries, np.eye(4))


def test_fourier_is_complex_hadamard():
    for d in (2, 3, 6):
        assert ComplexHadamard(d, fourier_matrix(d)).is_valid()
        assert random_chm(d, seed=d).is_valid()


def test_gate_json_roundtrip():
    g = random_dual_unitary(2, seed=3)
    back = TwoSiteGate.from_json(g.to_json())
    np.testing.assert_allclose(back.entries, g.entries)


def test_gate_shape_validation():
    with pytest.raises(ValueError):
        TwoSiteGate(2, np.eye(3))
    with pytest.raises(ValueError):
        random_dual_unitary(1)
