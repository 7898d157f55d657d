import numpy as np
import pytest
from scipy.special import wofz

from subwave.core import EmitterArray, Waveguide1D, chain_positions
from subwave.greens import coupling_matrix
from subwave.modes import two_atom_eigenvalues
from subwave.spectra import assemble
from subwave.steady import (ExcitationLimitError, ExcitationWarning, MotionModel,
                            SingularSystemError, averaged_guided_phase,
                            motion_averaged_inputs, motion_quadrature_diagnostic,
                            remove_atoms, solve_steady_state,
                            solve_steady_state_grid)

from scenehelpers import lattice_scene

K = 2 * np.pi


def _pair(a, detunings=(0.0, 0.0), gamma_prime=0.0):
    arr = EmitterArray(chain_positions(2, a), np.asarray(detunings, dtype=float),
                       Waveguide1D(), gamma_prime=gamma_prime)
    return arr, coupling_matrix(arr)


def _guided_drive(arr, amp=1e-3):
    return amp * np.exp(1j * K * arr.axial)


class TestSolve:
    def test_single_atom_on_resonance(self):
        arr = EmitterArray(chain_positions(1, 0.0), np.zeros(1), Waveguide1D())
        cm = coupling_matrix(arr)
        st = solve_steady_state(cm, arr.detunings, [1e-3], 0.0)
        assert st.coherences[0] == pytest.approx(2j * 1e-3, rel=1e-12)
        assert st.residual <= 1e-10

    def test_mode_projection_matches_closed_form(self, rng):
        # symmetric/antisymmetric amplitudes against their Lorentzian forms
        for a in rng.uniform(0.03, 0.45, 5):
            arr, cm = _pair(float(a))
            omega = _guided_drive(arr)
            for delta_l in rng.uniform(-2, 2, 3):
                st = solve_steady_state(cm, arr.detunings, omega, float(delta_l))
                lam_s, lam_a = two_atom_eigenvalues(float(a))
                sym = 0.5 * (st.coherences[0] + st.coherences[1])
                anti = 0.5 * (st.coherences[0] - st.coherences[1])
                omega_s = 0.5 * (omega[0] + omega[1])
                omega_a = 0.5 * (omega[0] - omega[1])
                assert sym == pytest.approx(omega_s / (lam_s - delta_l), rel=1e-10)
                assert anti == pytest.approx(omega_a / (lam_a - delta_l), rel=1e-10)

    def test_bright_dark_amplitudes_at_dicke(self):
        delta0 = 0.1
        arr, cm = _pair(1.0, detunings=(delta0, -delta0))
        omega = _guided_drive(arr)
        lam_b, lam_d = -1j, 0.0
        for delta_l in (0.03, -0.21, 0.1):
            st = solve_steady_state(cm, arr.detunings, omega, delta_l)
            bright = 0.5 * (st.coherences[0] + st.coherences[1])
            dark = 0.5 * (st.coherences[0] - st.coherences[1])
            omega_b = 0.5 * (omega[0] + omega[1])
            den = (lam_b - delta_l) * (lam_d - delta_l) - delta0**2
            assert bright == pytest.approx(omega_b * (lam_d - delta_l) / den, rel=1e-10)
            assert dark == pytest.approx(omega_b * delta0 / den, rel=1e-10)

    def test_linearity_exact(self):
        arr, cm = _pair(0.2)
        omega = _guided_drive(arr)
        st1 = solve_steady_state(cm, arr.detunings, omega, 0.4)
        c = 0.7 - 0.2j
        st2 = solve_steady_state(cm, arr.detunings, c * omega, 0.4)
        assert np.allclose(st2.coherences, c * st1.coherences, rtol=1e-13)

    def test_global_shift_covariance(self, rng):
        arr, cm = _pair(0.17)
        omega = _guided_drive(arr)
        det = rng.uniform(-0.3, 0.3, 2)
        c = 0.29
        a_side = solve_steady_state(cm, det + c, omega, 0.1)
        b_side = solve_steady_state(cm, det, omega, 0.1 + c)
        assert np.allclose(a_side.coherences, b_side.coherences, atol=1e-10)

    def test_loss_keeps_system_regular(self):
        arr, cm = _pair(1.0, gamma_prime=0.05)
        omega = _guided_drive(arr)
        st = solve_steady_state(cm, arr.detunings, omega, 0.0)
        assert st.residual <= 1e-10

    def test_singular_at_ideal_dark_resonance(self):
        arr, cm = _pair(1.0)
        omega = _guided_drive(arr)
        with pytest.raises(SingularSystemError, match="detuning"):
            solve_steady_state(cm, arr.detunings, omega, 0.0)

    def test_excitation_warning_and_error(self):
        arr = EmitterArray(chain_positions(1, 0.0), np.zeros(1), Waveguide1D())
        cm = coupling_matrix(arr)
        with pytest.warns(ExcitationWarning):
            solve_steady_state(cm, arr.detunings, [0.1], 0.0)   # p = 0.04
        with pytest.raises(ExcitationLimitError):
            solve_steady_state(cm, arr.detunings, [0.3], 0.0)   # p = 0.36

    def test_grid_solver_matches_pointwise(self, rng):
        arr, cm = _pair(0.23, detunings=(0.1, -0.05))
        omega = _guided_drive(arr)
        grid = np.sort(rng.uniform(-2, 2, 17))
        batch = solve_steady_state_grid(cm, arr.detunings, omega, grid)
        for i, delta in enumerate(grid):
            st = solve_steady_state(cm, arr.detunings, omega, float(delta))
            assert np.allclose(batch[i], st.coherences, rtol=1e-12, atol=1e-18)


class TestMotion:
    def test_zero_spread_is_identity(self):
        arr, cm = _pair(0.13)
        avg = motion_averaged_inputs(arr, MotionModel(0.0))
        assert np.allclose(avg.couplings.J, cm.J, atol=1e-14)
        assert np.allclose(avg.couplings.Gamma, cm.Gamma, atol=1e-14)
        assert avg.drive_attenuation == pytest.approx(1.0)

    def test_free_space_rejected(self):
        scene = lattice_scene(3, 0.5)
        with pytest.raises(Exception):
            motion_averaged_inputs(scene.array, MotionModel(0.01))

    def test_phase_average_matches_faddeeva_closed_form(self):
        # oracle: E[e^{ik|s|}] for s ~ N(mu, tau^2) via the complex erfc
        def closed_form(mu, tau, k):
            def half(m):
                z = -(m + 1j * k * tau**2) / (np.sqrt(2) * tau)
                erfc = np.exp(-z * z) * wofz(1j * z)
                return 0.5 * np.exp(1j * k * m - 0.5 * (k * tau) ** 2) * erfc
            return half(mu) + half(-mu)

        gh = MotionModel(0.02, "gauss_hermite", order=40)
        tau = 0.02 * np.sqrt(2)
        for mu in (0.3, 0.1, 0.02, 0.004):
            got = averaged_guided_phase(mu, tau, K, gh)
            want = closed_form(mu, tau, K)
            assert got == pytest.approx(want, abs=5e-9)

    def test_monte_carlo_agrees_within_three_standard_errors(self):
        mu, sigma = 0.3, 0.02
        tau = sigma * np.sqrt(2)
        mc = MotionModel(sigma, "monte_carlo", samples=10**6, seed=77)
        got = averaged_guided_phase(mu, tau, K, mc)
        gh = averaged_guided_phase(mu, tau, K, MotionModel(sigma, order=40))
        draws = np.exp(1j * K * np.abs(
            mu + tau * np.random.Generator(np.random.Philox(key=77)).standard_normal(10**6)))
        se = np.sqrt(draws.real.var() + draws.imag.var()) / np.sqrt(10**6)
        assert abs(got - gh) < 3 * se

    def test_quadrature_diagnostic_passes(self):
        arr, _ = _pair(0.1)
        for sigma in (0.01, 0.05):
            worst = motion_quadrature_diagnostic(arr, MotionModel(sigma), seed=5)
            assert worst < 1e-3

    def test_averaging_broadens_the_dark_mode(self):
        arr, cm = _pair(0.04)
        avg = motion_averaged_inputs(arr, MotionModel(0.05))
        # static dark-mode rate 2 sin^2(ka/2); averaging must broaden it
        static_dark = 2 * np.sin(np.pi * 0.04) ** 2
        averaged_dark = 1.0 - avg.couplings.Gamma[0, 1]
        assert averaged_dark > 2 * static_dark

    def test_monte_carlo_requires_seed(self):
        with pytest.raises(Exception):
            MotionModel(0.01, "monte_carlo", samples=100)


class TestRemoveAtoms:
    def test_zero_fraction_identity(self):
        scene = lattice_scene(4, 0.5)
        out = remove_atoms(scene.array, 0.0, seed=1)
        assert out is scene.array

    def test_five_percent_of_hundred(self):
        scene = lattice_scene(10, 0.5)
        out = remove_atoms(scene.array, 0.05, seed=9)
        assert out.n == 95

    def test_seed_determinism(self):
        scene = lattice_scene(6, 0.5)
        a1 = remove_atoms(scene.array, 0.2, seed=4, realization=3)
        a2 = remove_atoms(scene.array, 0.2, seed=4, realization=3)
        a3 = remove_atoms(scene.array, 0.2, seed=4, realization=4)
        assert np.array_equal(a1.positions, a2.positions)
        assert not np.array_equal(a1.positions, a3.positions)

    def test_full_removal_rejected(self):
        scene = lattice_scene(2, 0.5)
        with pytest.raises(Exception):
            remove_atoms(scene.array, 0.9, seed=0)   # round(0.9*4)=4 = N
        with pytest.raises(Exception):
            remove_atoms(scene.array, 1.0, seed=0)


def test_assemble_applies_missing_atoms():
    scene = lattice_scene(5, 0.5, missing_fraction=0.2, missing_seed=3)
    asm = assemble(scene, realization=1)
    assert asm.array.n == 20
