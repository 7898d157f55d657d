import numpy as np
import pytest

from subwave import greens
from subwave.core import (EmitterArray, FreeSpace, SceneValidationError,
                          Waveguide1D, chain_positions, dipole_vector)
from subwave.greens import (coupling_matrix, greens_freespace, greens_waveguide,
                            waveguide_pair_coupling)

K0 = 2 * np.pi


def test_waveguide_self_term():
    assert greens_waveguide(0.0) == pytest.approx(0.5j)
    c = waveguide_pair_coupling(0.0)
    assert c.real == pytest.approx(0.0)       # J = 0
    assert -2 * c.imag == pytest.approx(1.0)  # Gamma = 1


@pytest.mark.parametrize("x,j_expected,g_expected", [
    (0.25, 0.5, 0.0),
    (0.5, 0.0, -1.0),
])
def test_waveguide_pair_coupling_values(x, j_expected, g_expected):
    c = waveguide_pair_coupling(x, 1.0)
    assert c.real == pytest.approx(j_expected, abs=1e-15)
    assert -2 * c.imag == pytest.approx(g_expected, abs=1e-15)


def test_freespace_tensor_parity(rng):
    for _ in range(5):
        r = rng.uniform(-2, 2, 3)
        assert np.allclose(greens_freespace(r), greens_freespace(-r))


def test_freespace_tensor_rejects_zero():
    with pytest.raises(SceneValidationError):
        greens_freespace([0.0, 0.0, 0.0])


def test_far_field_inverse_distance_decay():
    d = np.array([1.0, 0.0, 0.0])
    def contracted(r):
        g = greens_freespace([0.0, 0.0, r])       # transverse dipole
        return abs(d @ g @ d)
    ratio = contracted(10.0) / contracted(20.0)
    assert ratio == pytest.approx(2.0, rel=0.05)


def _scalar_oracle(r, cos2):
    """Independent scalar form: transverse and longitudinal radial factors."""
    kr = K0 * r
    exp = np.exp(1j * kr)
    g_perp = exp / (4 * np.pi * r) * (1 + 1j / kr - 1 / kr**2)
    g_par = exp / (4 * np.pi * r) * (-2j / kr + 2 / kr**2)
    return cos2 * g_par + (1 - cos2) * g_perp


def test_contraction_matches_scalar_oracle(rng):
    # random separations and real dipole orientations against the
    # angle-decomposed closed form
    for _ in range(8):
        rvec = rng.uniform(-1, 1, 3)
        rvec /= np.linalg.norm(rvec)
        rvec *= rng.uniform(0.05, 3.0)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        r = np.linalg.norm(rvec)
        cos2 = (d @ rvec / r) ** 2
        direct = d @ greens_freespace(rvec) @ d
        assert direct == pytest.approx(_scalar_oracle(r, cos2), rel=1e-12)


def test_pair_coupling_at_tenth_wavelength():
    # parallel transverse dipoles at 0.1 wavelengths, against the scalar oracle
    rvec = np.array([0.0, 0.0, 0.1])
    d = dipole_vector("x")
    coup = greens.freespace_pair_coupling(rvec, d)
    oracle = -(3 * np.pi / K0) * _scalar_oracle(0.1, 0.0)
    assert coup == pytest.approx(oracle, rel=1e-12)


def test_waveguide_coupling_matrix_dicke():
    arr = EmitterArray(chain_positions(2, 1.0), np.zeros(2), Waveguide1D())
    cm = coupling_matrix(arr)
    assert np.allclose(cm.Gamma, 1.0, atol=1e-12)
    assert np.allclose(cm.J, 0.0, atol=1e-12)


def test_single_atom_coupling_matrix():
    arr = EmitterArray(chain_positions(1, 0.0), np.zeros(1), Waveguide1D())
    cm = coupling_matrix(arr)
    assert cm.J.shape == (1, 1) and cm.J[0, 0] == 0.0
    assert cm.Gamma[0, 0] == 1.0


def test_distant_freespace_pair_is_weakly_coupled():
    pos = np.array([[0.0, 0.0, 0.0], [0.0, 5.0, 0.0]])
    arr = EmitterArray(pos, np.zeros(2), FreeSpace(), dipole_vector("x"))
    cm = coupling_matrix(arr)
    assert abs(cm.J[0, 1]) < 0.05
    assert abs(cm.Gamma[0, 1]) < 0.05


def test_symmetry_and_psd(rng):
    for _ in range(5):
        n = int(rng.integers(2, 7))
        pos = rng.uniform(-1.5, 1.5, (n, 3))
        d = rng.normal(size=3) + 1j * rng.normal(size=3)
        d /= np.linalg.norm(d)
        arr = EmitterArray(pos, np.zeros(n), FreeSpace(), d)
        cm = coupling_matrix(arr)
        assert np.array_equal(cm.J, cm.J.T)
        assert np.array_equal(cm.Gamma, cm.Gamma.T)
        assert np.linalg.eigvalsh(cm.Gamma).min() >= -1e-10


def test_waveguide_periodicity():
    for a in (0.13, 0.42):
        arr1 = EmitterArray(chain_positions(3, a), np.zeros(3), Waveguide1D())
        arr2 = EmitterArray(chain_positions(3, a + 1.0), np.zeros(3), Waveguide1D())
        cm1, cm2 = coupling_matrix(arr1), coupling_matrix(arr2)
        assert np.allclose(cm1.J, cm2.J, atol=5e-15)
        assert np.allclose(cm1.Gamma, cm2.Gamma, atol=5e-15)


def test_dissipative_coupling_continuity_at_small_separation():
    d = dipole_vector("x")
    for sep in (1e-1, 1e-2, 1e-3):
        pos = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, sep]])
        arr = EmitterArray(pos, np.zeros(2), FreeSpace(), d)
        cm = coupling_matrix(arr)
        assert cm.Gamma[0, 1] == pytest.approx(1.0, abs=5 * sep**2 * K0**2)
    pos = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1e-3]])
    arr = EmitterArray(pos, np.zeros(2), FreeSpace(), d)
    assert coupling_matrix(arr).Gamma[0, 1] == pytest.approx(1.0, abs=1e-3)


def test_coincident_emitters_rejected():
    pos = np.array([[0.0, 0.0, 0.0], [1e-12, 0.0, 0.0]])
    arr = EmitterArray(pos, np.zeros(2), Waveguide1D())
    with pytest.raises(SceneValidationError):
        coupling_matrix(arr)
