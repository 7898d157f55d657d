"""Weak-drive steady state of the coupled-emitter system.

The coherences solve the linear system A sigma = Omega with

    A = (J - i Gamma/2) - diag(detunings) - (Delta_L + i gamma_prime / 2) I,

which is the frequency-domain form of the low-excitation equations of
motion.  The module also provides motion-averaged couplings for guided
chains (high-velocity limit: every position-dependent magnitude is replaced
by its Gaussian average) and seeded removal of lattice sites.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lapack, lu_factor, lu_solve

from .core import EmitterArray, SceneValidationError, Waveguide1D
from .greens import CouplingMatrices
from .modes import effective_hamiltonian

RESIDUAL_TOL = 1e-10
EXCITATION_WARN = 0.01
EXCITATION_ERROR = 0.1


class SingularSystemError(RuntimeError):
    """The steady-state system is (numerically) singular.

    This can only happen at an exact dark-mode resonance with zero
    non-guided loss and zero drive overlap; offsetting the laser detuning by
    any finite amount regularises the solve.
    """


class ExcitationLimitError(RuntimeError):
    """Predicted single-site excitation leaves the low-excitation regime."""


class ExcitationWarning(UserWarning):
    pass


class MotionDiagnosticError(RuntimeError):
    """Quadrature and Monte Carlo motion averages disagree beyond tolerance."""


@dataclass(frozen=True)
class SteadyState:
    coherences: np.ndarray
    laser_detuning: float
    residual: float


def _check_excitation(coherences: np.ndarray) -> None:
    if coherences.size == 0:
        return
    p = float(np.max(np.abs(coherences) ** 2))
    if p > EXCITATION_ERROR:
        raise ExcitationLimitError(
            f"max single-site excitation {p:.3g} exceeds the weak-drive validity limit; "
            "reduce the drive amplitude")
    if p > EXCITATION_WARN:
        warnings.warn(
            f"max single-site excitation {p:.3g} is outside the strictly linear regime",
            ExcitationWarning, stacklevel=3)


def system_matrix(couplings: CouplingMatrices, detunings, delta_l: float) -> np.ndarray:
    a = effective_hamiltonian(couplings, detunings)
    idx = np.arange(couplings.n)
    a[idx, idx] -= delta_l
    return a


def solve_steady_state(couplings: CouplingMatrices, detunings, drive,
                       delta_l: float) -> SteadyState:
    """Solve for the steady-state coherences at one laser detuning.

    drive: per-site complex Rabi amplitudes.  Dense LU with partial pivoting
    plus one step of iterative refinement; the relative backward error is
    returned and must meet RESIDUAL_TOL.
    """
    omega = np.asarray(drive, dtype=complex)
    a = system_matrix(couplings, detunings, delta_l)
    if a.shape[0] == 0:
        return SteadyState(np.zeros(0, dtype=complex), delta_l, 0.0)
    try:
        lu = lu_factor(a)
        anorm = np.linalg.norm(a, 1)
        rcond, info = lapack.zgecon(lu[0], anorm)
        if info < 0 or rcond < 1e-14:
            raise SingularSystemError(
                f"steady-state system singular at laser detuning {delta_l} "
                f"(reciprocal condition {rcond:.2e}); this happens only at an exact "
                "dark-mode resonance with zero loss; offset the laser detuning")
        sigma = lu_solve(lu, omega)
        sigma = sigma + lu_solve(lu, omega - a @ sigma)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(
            f"steady-state system singular at laser detuning {delta_l}: {exc}; "
            "offset the laser detuning") from exc
    residual = _relative_residual(a, sigma, omega)
    if not np.all(np.isfinite(sigma)) or residual > RESIDUAL_TOL:
        raise SingularSystemError(
            f"steady-state solve lost accuracy at laser detuning {delta_l} "
            f"(relative residual {residual:.3e}); offset the laser detuning")
    _check_excitation(sigma)
    return SteadyState(sigma, delta_l, residual)


def _relative_residual(a, sigma, omega) -> float:
    r = omega - a @ sigma
    scale = np.linalg.norm(a, np.inf) * np.linalg.norm(sigma, np.inf) + np.linalg.norm(omega, np.inf)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(r, np.inf) / scale)


# Grid block size targeting ~64 MB of stacked system matrices.
def _grid_block(n: int) -> int:
    return max(1, int(64e6 / (16 * max(n, 1) ** 2)))


def solve_steady_state_grid(couplings: CouplingMatrices, detunings, drive,
                            delta_grid, extra_rhs: Optional[np.ndarray] = None):
    """Vectorised steady-state solve over a grid of laser detunings.

    Returns coherences of shape (G, N); when extra_rhs (N, R) is given, also
    returns the solutions A^{-1} extra_rhs of shape (G, N, R) -- the adjoint
    solves needed by analytic derivatives (the system matrix is symmetric).
    """
    omega = np.asarray(drive, dtype=complex)
    grid = np.asarray(delta_grid, dtype=float)
    n = couplings.n
    base = effective_hamiltonian(couplings, detunings)
    rhs_cols = 1 if extra_rhs is None else 1 + extra_rhs.shape[1]
    rhs = np.empty((n, rhs_cols), dtype=complex)
    rhs[:, 0] = omega
    if extra_rhs is not None:
        rhs[:, 1:] = extra_rhs
    out = np.empty((grid.size, n), dtype=complex)
    out_extra = (np.empty((grid.size, n, rhs_cols - 1), dtype=complex)
                 if extra_rhs is not None else None)
    idx = np.arange(n)
    block = _grid_block(n)
    for start in range(0, grid.size, block):
        sub = grid[start:start + block]
        mats = np.broadcast_to(base, (sub.size, n, n)).copy()
        mats[:, idx, idx] -= sub[:, None]
        try:
            sol = np.linalg.solve(mats, np.broadcast_to(rhs, (sub.size, n, rhs_cols)))
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                f"steady-state system singular inside detuning block starting at "
                f"{sub[0]}: {exc}; offset the laser detuning") from exc
        resid = rhs[None] - mats @ sol
        sol = sol + np.linalg.solve(mats, resid)
        out[start:start + block] = sol[:, :, 0]
        if out_extra is not None:
            out_extra[start:start + block] = sol[:, :, 1:]
    _check_excitation(out)
    if extra_rhs is not None:
        return out, out_extra
    return out


def solve_grid_rhs(couplings: CouplingMatrices, detunings, delta_grid, rhs_grid):
    """Solve A(delta_g) y_g = rhs_g for a per-grid-point right-hand side."""
    grid = np.asarray(delta_grid, dtype=float)
    rhs = np.asarray(rhs_grid, dtype=complex)
    n = couplings.n
    base = effective_hamiltonian(couplings, detunings)
    out = np.empty((grid.size, n), dtype=complex)
    idx = np.arange(n)
    block = _grid_block(n)
    for start in range(0, grid.size, block):
        sub = grid[start:start + block]
        mats = np.broadcast_to(base, (sub.size, n, n)).copy()
        mats[:, idx, idx] -= sub[:, None]
        b = rhs[start:start + block][:, :, None]
        try:
            sol = np.linalg.solve(mats, b)
            sol = sol + np.linalg.solve(mats, b - mats @ sol)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                f"steady-state system singular inside detuning block starting at "
                f"{sub[0]}: {exc}; offset the laser detuning") from exc
        out[start:start + block] = sol[:, :, 0]
    return out


# ---------------------------------------------------------------------------
# Atomic motion (high-velocity limit)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MotionModel:
    """Independent isotropic Gaussian position spread per emitter.

    sigma: zero-point spread in wavelength units.  quadrature selects how
    Gaussian averages are evaluated: 'gauss_hermite' (deterministic nodes,
    integral split at the separation sign change) or 'monte_carlo'
    (counter-based PRNG, seed recorded).
    """
    sigma: float
    quadrature: str = "gauss_hermite"
    order: int = 40
    samples: int = 100_000
    seed: Optional[int] = None

    def __post_init__(self):
        if self.sigma < 0:
            raise SceneValidationError("position spread must be >= 0")
        if self.quadrature not in ("gauss_hermite", "monte_carlo"):
            raise SceneValidationError(f"unknown quadrature {self.quadrature!r}")
        if self.quadrature == "gauss_hermite" and self.order < 5:
            raise SceneValidationError("quadrature order must be >= 5")
        if self.quadrature == "monte_carlo" and self.seed is None:
            raise SceneValidationError("Monte Carlo averaging requires a seed")


@dataclass(frozen=True)
class AveragedInputs:
    """Motion-averaged system inputs for a guided chain.

    The averaged system is solved exactly like the static one; drive and
    detection propagators each pick up one single-site Gaussian phase factor.
    """
    couplings: CouplingMatrices
    drive_attenuation: float
    detection_attenuation: float
    sigma: float


def _phase_kernel_integral(mean: float, tau: float, k: float, order: int) -> complex:
    """integral_0^inf e^{i k s} Normal(mean, tau^2)(s) ds by Gauss-Legendre.

    Substituting s = mean + sqrt(2) tau u maps the half-line onto
    u in [-mean/(sqrt(2) tau), inf); the Gaussian factor confines the
    integrand to a finite window which is integrated panel-free.
    """
    u_lo = -mean / (math.sqrt(2.0) * tau)
    u_hi = 8.5
    if u_lo >= u_hi:
        return 0.0 + 0.0j
    nodes, weights = leggauss(order)
    u = 0.5 * (u_hi - u_lo) * nodes + 0.5 * (u_hi + u_lo)
    w = 0.5 * (u_hi - u_lo) * weights
    phase = k * (mean + math.sqrt(2.0) * tau * u)
    vals = np.exp(1j * phase) * np.exp(-u * u) / math.sqrt(math.pi)
    return complex(np.sum(w * vals))


def averaged_guided_phase(mean: float, tau: float, k: float,
                          motion: MotionModel) -> complex:
    """< e^{i k |s|} > for s ~ Normal(mean, tau^2), by the configured method.

    This is the building block of every motion average: pair couplings use
    the pair-separation fluctuation tau = sigma * sqrt(2); drive/detection
    factors use the single-site tau = sigma with no folding (their separation
    never changes sign).
    """
    if tau == 0.0:
        return complex(np.exp(1j * k * abs(mean)))
    if motion.quadrature == "monte_carlo":
        rng = np.random.Generator(np.random.Philox(key=motion.seed))
        s = mean + tau * rng.standard_normal(motion.samples)
        return complex(np.mean(np.exp(1j * k * np.abs(s))))
    # fold |s| at the sign change: E[e^{ik|s|}] over the positive half-line
    # collects both the original and the reflected Gaussian
    return (_phase_kernel_integral(mean, tau, k, motion.order)
            + _phase_kernel_integral(-mean, tau, k, motion.order))


def averaged_plane_phase(tau: float, k: float, motion: MotionModel) -> complex:
    """< e^{i k s} > for s ~ Normal(0, tau^2) (no absolute value)."""
    if tau == 0.0:
        return 1.0 + 0.0j
    if motion.quadrature == "monte_carlo":
        rng = np.random.Generator(np.random.Philox(key=motion.seed))
        s = tau * rng.standard_normal(motion.samples)
        return complex(np.mean(np.exp(1j * k * s)))
    return complex(np.exp(-0.5 * (k * tau) ** 2))


def motion_averaged_inputs(array: EmitterArray, motion: MotionModel) -> AveragedInputs:
    """Gaussian-average couplings, drive phases and detection propagators.

    Only guided chains are supported; each emitter fluctuates independently,
    so a pair separation is Gaussian with spread sigma * sqrt(2).
    """
    if not isinstance(array.environment, Waveguide1D):
        raise SceneValidationError("motion averaging is implemented for waveguide chains only")
    k = array.environment.wavenumber
    n = array.n
    x = array.axial
    tau_pair = motion.sigma * math.sqrt(2.0)
    j_mat = np.zeros((n, n))
    g_mat = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            avg = averaged_guided_phase(abs(x[i] - x[j]), tau_pair, k, motion)
            coup = -0.5j * avg            # averaged J - i Gamma / 2
            j_mat[i, j] = j_mat[j, i] = coup.real
            g_mat[i, j] = g_mat[j, i] = -2.0 * coup.imag
    # single-site phase factor, common to drive and detection propagators
    atten = averaged_plane_phase(motion.sigma, k, motion)
    couplings = CouplingMatrices(j_mat, g_mat, array.gamma_prime)
    return AveragedInputs(couplings, float(abs(atten)), float(abs(atten)), motion.sigma)


def motion_quadrature_diagnostic(array: EmitterArray, motion: MotionModel,
                                 mc_samples: int = 1_000_000, seed: int = 0,
                                 tolerance: float = 1e-3) -> float:
    """Cross-check the quadrature averages against Monte Carlo.

    Returns the maximum absolute disagreement over all averaged phase
    factors; raises MotionDiagnosticError beyond `tolerance`.  The sample
    default keeps the Monte Carlo standard error a few times below the
    tolerance for spreads up to ~0.05 wavelengths.
    """
    gh = MotionModel(motion.sigma, "gauss_hermite", order=max(motion.order, 40))
    mc = MotionModel(motion.sigma, "monte_carlo", samples=mc_samples, seed=seed)
    k = array.environment.wavenumber
    x = array.axial
    tau_pair = motion.sigma * math.sqrt(2.0)
    worst = abs(averaged_plane_phase(motion.sigma, k, gh)
                - averaged_plane_phase(motion.sigma, k, mc))
    for i in range(array.n):
        for j in range(i + 1, array.n):
            d = abs(averaged_guided_phase(abs(x[i] - x[j]), tau_pair, k, gh)
                    - averaged_guided_phase(abs(x[i] - x[j]), tau_pair, k, mc))
            worst = max(worst, d)
    if worst > tolerance:
        raise MotionDiagnosticError(
            f"quadrature and Monte Carlo motion averages differ by {worst:.3e}")
    return worst


# ---------------------------------------------------------------------------
# Missing atoms
# ---------------------------------------------------------------------------

def realization_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent counter-based stream for one disorder realization."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def remove_atoms(array: EmitterArray, fraction: float, seed: int,
                 realization: int = 0) -> EmitterArray:
    """Remove a seeded pseudo-random subset of round(fraction * N) emitters."""
    if not 0.0 <= fraction < 1.0:
        raise SceneValidationError("missing fraction must lie in [0, 1)")
    n = array.n
    count = int(round(fraction * n))
    if count >= n:
        raise SceneValidationError("cannot remove every emitter")
    if count == 0:
        return array
    rng = realization_rng(seed, realization)
    removed = rng.choice(n, size=count, replace=False)
    keep = np.setdiff1d(np.arange(n), removed)
    return EmitterArray(array.positions[keep], array.detunings[keep],
                        array.environment, array.dipole, array.gamma_prime)
