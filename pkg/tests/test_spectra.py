import numpy as np
import pytest

from subwave import spectra, steady
from subwave.core import (EmitterArray, GuidedDrive, SceneValidationError,
                          Waveguide1D, build_scene, chain_positions)
from subwave.modes import BrightDarkModel, dicke_pair_model
from subwave.spectra import (DetectionLayout, assemble, bright_dark_transmission,
                             disk_layout, freespace_transmittance, guided_field,
                             max_slope, perfect_transmission_detuning,
                             point_on_axis, sweep_spectrum, two_atom_transmission,
                             waveguide_transmission)

from scenehelpers import chain_scene, lattice_scene, random_chain_scene


def _numeric_t_r(scene, delta_l, realization=0):
    asm = assemble(scene, realization)
    sigma = steady.solve_steady_state(asm.couplings, asm.array.detunings,
                                      asm.omega, delta_l).coherences
    t = 1.0 + (0.5j / asm.amplitude) * (sigma @ asm.v_fwd)
    r = (0.5j / asm.amplitude) * (sigma @ asm.v_bwd)
    return complex(t), complex(r)


class TestWaveguideTransmission:
    @pytest.mark.parametrize("a", [0.04, 0.1, 0.2])
    def test_perfect_transmission_point(self, a):
        scene = chain_scene(2, a)
        t, _ = _numeric_t_r(scene, perfect_transmission_detuning(a))
        assert abs(t) ** 2 == pytest.approx(1.0, abs=1e-9)

    def test_dicke_pair_with_antisymmetric_detuning(self):
        delta0 = 0.1
        scene = chain_scene(2, 1.0, detuning={"profile": "antisymmetric",
                                              "amplitude": delta0})
        t, _ = _numeric_t_r(scene, 0.0)
        assert t == pytest.approx(1.0, abs=1e-10)
        for root in (+delta0, -delta0):
            t, _ = _numeric_t_r(scene, root)
            assert abs(t) ** 2 <= 1e-10

    def test_two_atom_analytic_equals_numeric_on_grid(self):
        a = 0.13
        scene = chain_scene(2, a)
        grid = np.linspace(-3, 3, 1000)
        for delta in grid[::37]:
            t_num, r_num = _numeric_t_r(scene, float(delta))
            t_ana, r_ana = two_atom_transmission(a, 1.0, float(delta))
            assert abs(t_num - t_ana) < 1e-10
            assert abs(r_num - r_ana) < 1e-10

    def test_fast_path_dispatch(self):
        scene = chain_scene(2, 0.13)
        t, r = waveguide_transmission(scene.array, scene.drive, 0.4)
        t2, r2 = two_atom_transmission(0.13, 1.0, 0.4)
        assert t == t2 and r == r2

    def test_two_atom_analytic_with_loss_matches_numeric(self):
        a, gp = 0.09, 0.07
        scene = chain_scene(2, a, gamma_prime=gp)
        for delta in (-0.6, 0.02, 0.4):
            t_num, r_num = _numeric_t_r(scene, delta)
            t_ana, r_ana = two_atom_transmission(a, 1.0, delta, gamma_prime=gp)
            assert abs(t_num - t_ana) < 1e-10
            assert abs(r_num - r_ana) < 1e-10

    def test_energy_and_reciprocity(self, rng):
        for _ in range(20):
            scene = random_chain_scene(rng)
            delta = float(rng.uniform(-2, 2))
            t, r = _numeric_t_r(scene, delta)
            assert abs(t) ** 2 + abs(r) ** 2 == pytest.approx(1.0, abs=1e-9)
            scene_left = build_scene({**scene.config,
                                      "drive": {"kind": "guided", "amplitude": 1e-3,
                                                "direction": "left"}})
            t_left, _ = _numeric_t_r(scene_left, delta)
            assert abs(t - t_left) < 1e-10

    def test_loss_breaks_energy_conservation(self):
        scene = chain_scene(2, 0.2, gamma_prime=0.1)
        t, r = _numeric_t_r(scene, 0.1)
        assert abs(t) ** 2 + abs(r) ** 2 < 1.0 - 1e-4

    def test_drive_amplitude_independence(self):
        for amp in (1e-3, 3e-3, 1e-4):
            scene = chain_scene(3, 0.21, amplitude=amp)
            t, r = _numeric_t_r(scene, 0.3)
            if amp == 1e-3:
                t0, r0 = t, r
            else:
                assert t == pytest.approx(t0, rel=1e-13)

    def test_spectrum_shift_covariance(self, rng):
        # uniform detuning shifts rigidly translate the spectrum: detunings
        # and laser detuning enter the system diagonal with the same sign,
        # so T with detunings+c at Delta equals T at Delta+c without
        det = list(rng.uniform(-0.2, 0.2, 3))
        c = 0.31
        base = chain_scene(3, 0.17, detuning={"profile": "per_site", "values": det})
        shifted = chain_scene(3, 0.17, detuning={
            "profile": "per_site", "values": [d + c for d in det]})
        for delta in rng.uniform(-1, 1, 5):
            t0, _ = _numeric_t_r(base, float(delta) + c)
            t1, _ = _numeric_t_r(shifted, float(delta))
            assert abs(abs(t1) ** 2 - abs(t0) ** 2) < 1e-10


class TestGuidedField:
    def test_zero_coherences_leave_incident_field(self):
        arr = EmitterArray(chain_positions(2, 0.3), np.zeros(2), Waveguide1D())
        drive = GuidedDrive(amplitude=1e-3)
        k = arr.environment.wavenumber
        for x in (-3.0, 4.2):
            field = guided_field(arr, np.zeros(2, complex), x, drive)
            assert field == pytest.approx(1e-3 * np.exp(1j * k * x), rel=1e-14)

    def test_single_resonant_atom_blocks_transmission(self):
        arr = EmitterArray(chain_positions(1, 0.0), np.zeros(1), Waveguide1D())
        drive = GuidedDrive(amplitude=1e-3)
        asm = assemble(build_scene({
            "array": {"kind": "chain", "n": 1, "spacing": 0.0,
                      "environment": "waveguide"},
            "drive": {"kind": "guided", "amplitude": 1e-3}}))
        sigma = steady.solve_steady_state(asm.couplings, arr.detunings,
                                          asm.omega, 0.0).coherences
        field = guided_field(arr, sigma, 5.0, drive)
        assert abs(field) < 1e-18

    def test_field_left_of_pair_is_reflected_wave(self):
        a, delta = 0.2, 0.35
        scene = chain_scene(2, a)
        asm = assemble(scene)
        sigma = steady.solve_steady_state(asm.couplings, scene.array.detunings,
                                          asm.omega, delta).coherences
        _, r = two_atom_transmission(a, 1.0, delta)
        k = scene.array.environment.wavenumber
        x = -7.3
        expected = 1e-3 * (np.exp(1j * k * x) + r * np.exp(-1j * k * x))
        got = guided_field(scene.array, sigma, x, scene.drive)
        assert got == pytest.approx(expected, rel=1e-10)


class TestBrightDark:
    def test_unity_at_dark_resonance(self):
        model = BrightDarkModel(0.4 - 0.6j, -0.2 + 0j, 0.1)
        assert bright_dark_transmission(model, model.j_dark) == pytest.approx(1.0)

    def test_zeros_at_dressed_resonances(self):
        for model in (dicke_pair_model(0.1),
                      BrightDarkModel(0.4 - 0.6j, -0.2 + 0j, 0.1)):
            for root in model.transmission_zeros():
                t = bright_dark_transmission(model, root)
                assert abs(t) ** 2 <= 1e-20

    def test_uncoupled_bright_resonance_reflects(self):
        model = BrightDarkModel(0.3 - 1.0j, 0.0j, 1e-9)
        t = bright_dark_transmission(model, model.j_bright)
        assert abs(t) < 1e-6


class TestFreeSpace:
    def test_no_atoms_transmit_everything(self):
        from subwave.core import FreeSpace, GaussianBeamDrive
        arr = EmitterArray(np.zeros((0, 3)), np.zeros(0), FreeSpace(),
                           np.array([1.0, 0, 0], dtype=complex))
        drive = GaussianBeamDrive(waist=1.0)
        assert freespace_transmittance(arr, drive, None, 0.0) == 1.0

    def test_checkerboard_lattice_has_narrow_peak_near_dark_shift(self):
        from subwave.modes import lattice_two_mode_model
        from subwave.core import dipole_vector
        scene = lattice_scene(10, 0.55)
        model = lattice_two_mode_model(0.55, dipole_vector("x"), 0.1, "sweep")
        rec = sweep_spectrum(scene, np.linspace(-2.0, 1.5, 201), refine=True)
        near = np.abs(rec.grid - model.j_dark) < 0.4
        assert rec.transmittance[near].max() > 0.75
        assert rec.transmittance.min() < 0.05

    def test_missing_atoms_reduce_sensitivity(self):
        from subwave import sense
        intact = lattice_scene(6, 0.5)
        damaged = lattice_scene(6, 0.5, missing_fraction=0.1, missing_seed=5)
        s_int = sense.max_sensitivity(intact)[1]
        vals = [sense.max_sensitivity(damaged, realization=r)[1] for r in range(6)]
        assert np.mean(vals) < s_int

    def test_scattered_field_zero_coherences_is_incident(self):
        scene = lattice_scene(3, 0.5)
        point = np.array([0.4, -0.2, 1.1])

        def incident(p):
            return scene.drive.amplitude * scene.drive.profile([p])[0], np.array([1.0, 0, 0])

        total = spectra.scattered_field(scene.array, np.zeros(9, complex), point, incident)
        amp, pol = incident(point)
        assert np.allclose(total, amp * pol)

    def test_scattered_field_consistent_with_transmittance_path(self):
        from subwave import steady
        scene = lattice_scene(3, 0.5)
        asm = assemble(scene)
        sigma = steady.solve_steady_state(asm.couplings, scene.array.detunings,
                                          asm.omega, 0.1).coherences
        point = asm.layout.points[0]

        def incident(p):
            return scene.drive.amplitude * scene.drive.profile([p])[0], np.array([1.0, 0, 0])

        total = spectra.scattered_field(scene.array, sigma, point, incident)
        amp, _ = incident(point)
        t_point = total[0] / amp      # x-projected field ratio
        t_ref = 1.0 + (asm.det_matrix[0] @ sigma) / asm.amplitude
        assert t_point == pytest.approx(t_ref, rel=1e-12)

    def test_detection_behind_array_rejected(self):
        scene = lattice_scene(3, 0.5)
        layout = DetectionLayout(np.array([[0.0, 0.0, -1.0]]), "behind")
        with pytest.raises(SceneValidationError):
            freespace_transmittance(scene.array, scene.drive, layout, 0.0)

    def test_near_field_layout_warns(self):
        scene = lattice_scene(3, 0.5)
        layout = point_on_axis(0.3)
        with pytest.warns(spectra.NearFieldWarning):
            freespace_transmittance(scene.array, scene.drive, layout, 0.0)


class TestDetectionLayouts:
    def test_sunflower_is_deterministic(self):
        a = disk_layout(1.2, 31, 1.1)
        b = disk_layout(1.2, 31, 1.1)
        assert np.array_equal(a.points, b.points)
        assert a.points.shape == (31, 3)
        assert np.all(a.points[:, 2] == 1.1)
        assert np.hypot(a.points[:, 0], a.points[:, 1]).max() <= 1.2

    def test_random_layout_needs_seed(self):
        with pytest.raises(SceneValidationError):
            disk_layout(1.0, 10, 1.1, layout="random")
        l1 = disk_layout(1.0, 10, 1.1, layout="random", seed=3)
        l2 = disk_layout(1.0, 10, 1.1, layout="random", seed=3)
        assert np.array_equal(l1.points, l2.points)


class TestSweepSpectrum:
    def test_narrow_feature_is_resolved(self):
        a = 0.04
        scene = chain_scene(2, a)
        rec = sweep_spectrum(scene, np.linspace(-3, 3, 151), refine=True)
        gamma_dark = 2 * np.sin(np.pi * a) ** 2
        d_star = perfect_transmission_detuning(a)
        inside = np.abs(rec.grid - d_star) <= 2 * gamma_dark
        assert np.count_nonzero(inside) >= 20
        jumps = np.abs(np.diff(rec.transmittance))[inside[:-1] & inside[1:]]
        assert jumps.max() <= 0.1 + 1e-12
        assert rec.metadata["refine_levels_used"] >= 1
        assert np.all(np.diff(rec.grid) > 0)

    def test_flat_spectrum_needs_no_refinement(self):
        from subwave.core import FreeSpace, GaussianBeamDrive, Scene
        arr = EmitterArray(np.zeros((0, 3)), np.zeros(0), FreeSpace(),
                           np.array([1.0, 0, 0], dtype=complex))
        scene = Scene(array=arr, drive=GaussianBeamDrive(waist=1.0),
                      detection=point_on_axis(1.1))
        rec = sweep_spectrum(scene, np.linspace(-1, 1, 21), refine=True)
        assert rec.metadata["refine_points_added"] == 0
        assert np.allclose(rec.transmittance, 1.0)

    def test_refined_matches_dense_grid_slope(self):
        scene = chain_scene(2, 0.1)
        coarse = sweep_spectrum(scene, np.linspace(-2, 2, 201), refine=True)
        dense = sweep_spectrum(scene, np.linspace(-2, 2, 2001), refine=False)
        _, s_ref = max_slope(coarse)
        _, s_dense = max_slope(dense)
        assert s_ref == pytest.approx(s_dense, rel=0.01)

    def test_energy_columns_consistent(self):
        scene = chain_scene(3, 0.22)
        rec = sweep_spectrum(scene, np.linspace(-2, 2, 41), refine=False)
        assert np.allclose(rec.transmittance + rec.reflectance, 1.0, atol=1e-9)
        assert rec.metadata["scene_hash"] == scene.scene_hash

    def test_two_mode_scene_spectrum(self):
        scene = build_scene({"array": {"kind": "two_mode_model", "j_bright": 0.0,
                                       "gamma_bright": 2.0, "j_dark": 0.0},
                             "detuning": {"amplitude": 0.1}})
        rec = sweep_spectrum(scene, np.linspace(-0.5, 0.5, 101), refine=True)
        i = np.argmin(np.abs(rec.grid))
        assert rec.transmittance[i] == pytest.approx(1.0, abs=1e-6)
        header, _ = rec.columns()
        assert header == "Delta_L,T"
