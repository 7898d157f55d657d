"""Collective light scattering from arrays of two-level emitters.

Forward simulation of transmission spectra for waveguide-coupled chains and
free-space 2D lattices, sensitivity and Jacobian analysis for global and
site-resolved sensing, imperfection models, and frequency-precision
estimates.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    AntisymmetricDetuning, EmitterArray, FreeSpace, GaussianBeamDrive,
    GuidedDrive, LinearDetuning, PerSiteDetuning, PlaneWaveDetuning, Scene,
    SceneValidationError, SinusoidalDetuning, TwoModeScene, UniformDetuning,
    Units, Waveguide1D, build_array, build_scene, chain_positions,
    dipole_vector, load_scene, mirror, square_lattice_positions,
)
from .greens import (
    CouplingMatrices, coupling_matrix, greens_freespace, greens_waveguide,
)
from .modes import (
    BrightDarkModel, LatticeMode, ModeSet, dressed_resonances, eigenmodes,
    infinite_lattice_mode, lattice_two_mode_model, two_atom_eigenvalues,
)
from .precision import PrecisionInputs, fractional_precision, frequency_uncertainty
from .sense import (
    JacobianReport, ReconstructionResult, SensitivityCurve, dT_dDelta,
    gradient_T, integrated_sensitivity, jacobian, max_sensitivity, reconstruct,
    sensitivity_curve,
)
from .spectra import (
    DetectionLayout, SpectrumRecord, bright_dark_transmission, disk_layout,
    freespace_transmittance, perfect_transmission_detuning, scattered_field,
    sweep_spectrum, two_atom_transmission, waveguide_transmission,
)
from .steady import (
    MotionModel, SteadyState, motion_averaged_inputs, remove_atoms,
    solve_steady_state,
)

__version__ = "0.1.0"
