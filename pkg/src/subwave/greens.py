"""Electromagnetic propagators and the collective coupling matrices.

The pair of real symmetric matrices (J, Gamma) encodes coherent and
dissipative light-mediated interactions.  Sign convention:

    J_ij - i Gamma_ij / 2 = -(reference prefactor) d^* . G(r_i - r_j) . d

so that the diagonal dissipative term is +1 in rate units.  Guided drive and
detection phases use absolute axial coordinates; chains built by the core
module are centred on the origin, which makes the two-emitter analytic
expressions hold literally (centroid phase gauge).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import EmitterArray, FreeSpace, SceneValidationError, Waveguide1D

K0 = _kernels.K0

MIN_SEPARATION = 1e-9


@dataclass(frozen=True)
class CouplingMatrices:
    """Symmetric N x N coherent (J) and dissipative (Gamma) coupling matrices."""
    J: np.ndarray
    Gamma: np.ndarray
    gamma_prime: float = 0.0

    def __post_init__(self):
        self.J.setflags(write=False)
        self.Gamma.setflags(write=False)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    def h_eff(self) -> np.ndarray:
        """Non-Hermitian coupling block J - i Gamma / 2 (no detunings, no loss)."""
        return self.J - 0.5j * self.Gamma


def greens_waveguide(x: float, k_p: float = 1.0):
    """Contracted guided-mode propagator (i/2) e^{i k_p |x|} in rate units.

    x is the axial separation in wavelength units; k_p the guided wavenumber
    in units of 2*pi per wavelength.
    """
    if k_p <= 0:
        raise SceneValidationError("guided-mode wavenumber must be positive")
    return 0.5j * np.exp(1j * K0 * k_p * np.abs(x))


def waveguide_pair_coupling(x, k_p: float = 1.0):
    """J - i Gamma / 2 between two guided emitters separated by x.

    Equals (1/2) sin(k|x|) - (i/2) cos(k|x|) in rate units.
    """
    return -greens_waveguide(x, k_p)


def greens_freespace(r, k0: float = K0) -> np.ndarray:
    """Free-space dyadic propagator tensor at displacement r (3-vector).

    Valid for |r| > 0; the self term is handled separately (J_jj = 0 by the
    renormalisation convention, Gamma_jj = 1 in rate units).
    """
    rvec = np.asarray(r, dtype=float)
    dist = np.linalg.norm(rvec)
    if dist <= 0:
        raise SceneValidationError("free-space propagator tensor undefined at zero separation")
    kr = k0 * dist
    pref = np.exp(1j * kr) / (4.0 * np.pi * k0**2 * dist**3)
    rr = np.outer(rvec, rvec) / dist**2
    return pref * ((kr**2 + 1j * kr - 1.0) * np.eye(3) + (-kr**2 - 3j * kr + 3.0) * rr)


def freespace_pair_coupling(rvec, dipole):
    """J - i Gamma / 2 between two free-space emitters (contracted tensor)."""
    rvec = np.asarray(rvec, dtype=float)
    return complex(_kernels.pair_coupling(rvec[0], rvec[1], rvec[2],
                                          np.asarray(dipole, dtype=complex)))


def coupling_matrix(array: EmitterArray) -> CouplingMatrices:
    """Assemble the coupling matrices for every emitter pair of the array."""
    n = array.n
    pos = array.positions
    if n > 1:
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        iu = np.triu_indices(n, k=1)
        if np.any(dist[iu] < MIN_SEPARATION):
            raise SceneValidationError(
                f"coincident emitters (separation below {MIN_SEPARATION} wavelengths)")
    if isinstance(array.environment, Waveguide1D):
        k = array.environment.wavenumber
        sep = np.abs(pos[:, None, 0] - pos[None, :, 0])
        j_mat = 0.5 * np.sin(k * sep)
        g_mat = np.cos(k * sep)
        np.fill_diagonal(j_mat, 0.0)
        np.fill_diagonal(g_mat, 1.0)
    else:
        j_mat, g_mat = _kernels.coupling_matrices(pos, array.dipole)
    return CouplingMatrices(j_mat, g_mat, array.gamma_prime)


def coupling_csv_rows(couplings: CouplingMatrices):
    """Row-major (i, j, J, Gamma) rows for the CLI dump command."""
    n = couplings.n
    for i in range(n):
        for j in range(n):
            yield i, j, couplings.J[i, j], couplings.Gamma[i, j]
