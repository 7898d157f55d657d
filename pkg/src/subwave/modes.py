"""Collective-mode analysis: non-Hermitian eigendecomposition, analytic
two-emitter eigenvalues, the bright/dark two-mode model, and infinite-lattice
mode eigenvalues.

Lattice eigenvalues are computed from a real-space sum of the pair coupling
with an exponential convergence factor e^{-eps r}, polynomial extrapolation
eps -> 0 (Neville scheme on a geometric ladder of eps values), and a cosine
taper on the outer quarter of the radial cutoff to suppress the oscillatory
truncation error.  The decay rate additionally has an exact closed form as a
sum over open diffraction channels of the lattice, which is used for the
reported rate (the real-space extrapolation of the rate degrades near the
light-cone boundary); the two evaluations are cross-checked against each
other and, in the test suite, against finite-array extrapolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .greens import CouplingMatrices, K0


class EigsolverError(RuntimeError):
    """Eigendecomposition failed to converge."""


class LatticeSumError(RuntimeError):
    """Lattice-sum convergence acceleration failed to reach tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# Finite-array eigenmodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSet:
    """Eigenvalues/eigenvectors of the effective Hamiltonian, sorted by decay rate."""
    eigenvalues: np.ndarray      # complex, ascending decay rate
    eigenvectors: np.ndarray     # columns are right eigenvectors
    classification: tuple        # "superradiant" | "subradiant" per mode
    gamma_prime: float = 0.0

    @property
    def shifts(self) -> np.ndarray:
        return self.eigenvalues.real

    @property
    def decay_rates(self) -> np.ndarray:
        return -2.0 * self.eigenvalues.imag

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def effective_hamiltonian(couplings: CouplingMatrices, detunings) -> np.ndarray:
    """H = (J - i Gamma/2) - diag(detunings) - i (gamma_prime/2) I."""
    det = np.asarray(detunings, dtype=float)
    h = couplings.h_eff().astype(complex)
    idx = np.arange(couplings.n)
    h[idx, idx] -= det + 0.5j * couplings.gamma_prime
    return h


def eigenmodes(couplings: CouplingMatrices, detunings) -> ModeSet:
    """Eigendecomposition of the effective Hamiltonian including detunings.

    Modes are sorted by ascending decay rate, ties broken by ascending shift;
    a mode is superradiant when its decay rate exceeds the single-emitter
    total (guided plus non-guided) rate.
    """
    h = effective_hamiltonian(couplings, detunings)
    try:
        lam, vec = np.linalg.eig(h)
    except np.linalg.LinAlgError as exc:
        raise EigsolverError(f"eigensolver did not converge: {exc}") from exc
    gam = -2.0 * lam.imag
    order = np.lexsort((lam.real, gam))
    lam = lam[order]
    vec = vec[:, order]
    single = 1.0 + couplings.gamma_prime
    cls = tuple("superradiant" if g > single else "subradiant" for g in -2.0 * lam.imag)
    return ModeSet(lam, vec, cls, couplings.gamma_prime)


def mode_window(modeset: ModeSet, pad_linewidths: float = 5.0,
                min_pad: float = 0.5) -> Tuple[float, float]:
    """Frequency window covering every mode resonance plus a linewidth margin."""
    shifts = modeset.shifts
    widths = np.maximum(modeset.decay_rates, min_pad)
    lo = float(np.min(shifts - pad_linewidths * widths))
    hi = float(np.max(shifts + pad_linewidths * widths))
    return lo, hi


# ---------------------------------------------------------------------------
# Two-emitter analytics
# ---------------------------------------------------------------------------

def two_atom_eigenvalues(a: float, k_p: float = 1.0) -> Tuple[complex, complex]:
    """Symmetric and antisymmetric eigenvalues of a guided emitter pair.

    Returns (lambda_sym, lambda_antisym) in rate units:
        lambda_sym  = (1/2) sin(ka) - i cos^2(ka/2)
        lambda_anti = -(1/2) sin(ka) - i sin^2(ka/2)
    """
    if a < 0:
        raise ValueError("spacing must be non-negative")
    half = 0.5 * K0 * k_p * a
    lam_s = 0.5 * math.sin(2.0 * half) - 1j * math.cos(half) ** 2
    lam_a = -0.5 * math.sin(2.0 * half) - 1j * math.sin(half) ** 2
    return lam_s, lam_a


def dressed_resonances(j_bright: float, j_dark: float, coupling: float) -> Tuple[float, float]:
    """Laser detunings of vanishing transmission in the two-mode model.

    Delta_pm = (1/2) [J_B + J_D +- sqrt((J_B - J_D)^2 + 4 coupling^2)].
    """
    root = math.sqrt((j_bright - j_dark) ** 2 + 4.0 * coupling**2)
    return 0.5 * (j_bright + j_dark + root), 0.5 * (j_bright + j_dark - root)


@dataclass(frozen=True)
class BrightDarkModel:
    """Two-mode (bright/dark) reduction of a system with a perfectly dark state."""
    lambda_bright: complex       # J_B - i Gamma_B / 2
    lambda_dark: complex         # J_D (real when perfectly dark)
    coupling: float              # control-detuning amplitude
    rabi_bright: float = 1.0

    def __post_init__(self):
        if self.gamma_bright <= 0:
            raise ValueError("bright-mode decay rate must be positive")

    @property
    def j_bright(self) -> float:
        return self.lambda_bright.real

    @property
    def gamma_bright(self) -> float:
        return -2.0 * complex(self.lambda_bright).imag

    @property
    def j_dark(self) -> float:
        return complex(self.lambda_dark).real

    def transmission_zeros(self) -> Tuple[float, float]:
        return dressed_resonances(self.j_bright, self.j_dark, self.coupling)


def dicke_pair_model(coupling: float) -> BrightDarkModel:
    """Two guided emitters at integer-wavelength spacing with +-coupling detuning."""
    return BrightDarkModel(lambda_bright=-1.0j, lambda_dark=0.0 + 0.0j, coupling=coupling)


# ---------------------------------------------------------------------------
# Infinite-lattice modes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeSumSettings:
    """Damping ladder and cutoff for the real-space lattice sum."""
    eps_min: float
    n_eps: int
    ratio: float
    r_max: float
    taper_frac: float = 0.25
    tolerance: float = 1e-6

    @property
    def eps_ladder(self) -> np.ndarray:
        return self.eps_min * self.ratio ** np.arange(self.n_eps)[::-1]


QUALITY_PRESETS = {
    # coarse setting for spacing sweeps: ~1e-5 shift accuracy including the
    # slowly converging spacings near the light-cone boundary
    "sweep": LatticeSumSettings(0.04, 6, 2.0, 220.0, tolerance=1e-4),
    # meets the 1e-6 tolerance contract for the protocol's k points
    "high": LatticeSumSettings(0.05, 8, 1.55, 400.0, tolerance=1e-6),
}


@dataclass(frozen=True)
class LatticeMode:
    """Collective mode of an infinite square lattice at one quasi-momentum."""
    quasi_momentum: tuple        # (kx, ky) in radians per wavelength
    eigenvalue: complex          # J_k - i Gamma_k / 2, rate units
    in_light_cone: bool
    residual: float              # extrapolation residual of the real-space sum
    gamma_realspace: float       # decay rate from the real-space path (diagnostic)

    @property
    def shift(self) -> float:
        return self.eigenvalue.real

    @property
    def decay_rate(self) -> float:
        return -2.0 * self.eigenvalue.imag


def _neville_to_zero(eps: np.ndarray, vals: np.ndarray) -> Tuple[complex, float]:
    """Polynomial extrapolation of samples (eps_i, vals_i) to eps = 0."""
    n = len(eps)
    cur = np.array(vals, dtype=complex)
    prev_best = cur[0]
    for m in range(1, n):
        nxt = np.empty(n - m, dtype=complex)
        for i in range(n - m):
            nxt[i] = (eps[i] * cur[i + 1] - eps[i + m] * cur[i]) / (eps[i] - eps[i + m])
        if m == n - 1:
            prev_best = cur[0]
        cur = nxt
    return cur[0], abs(cur[0] - prev_best)


def gamma_open_channels(k: Sequence[float], a: float, dipole) -> float:
    """Exact lattice decay rate from the open diffraction channels.

    For quasi-momentum k (radians per wavelength) on a square lattice of
    spacing a, every reciprocal vector g with |k + g| < k0 contributes a
    propagating channel; outside the light cone with no open channel the mode
    is exactly dark.
    """
    kvec = np.asarray(k, dtype=float)
    d = np.asarray(dipole, dtype=complex)
    gmax = int(math.ceil((K0 + np.linalg.norm(kvec)) * a / (2.0 * math.pi))) + 1
    total = 0.0
    for m1 in range(-gmax, gmax + 1):
        for m2 in range(-gmax, gmax + 1):
            q = kvec + 2.0 * math.pi * np.array([m1, m2]) / a
            q2 = float(q @ q)
            if q2 >= K0 * K0:
                continue
            kz2 = K0 * K0 - q2
            if kz2 < 1e-12 * K0 * K0:
                raise LatticeSumError(
                    "quasi-momentum lies on a light-cone (diffraction) edge", math.inf)
            kz = math.sqrt(kz2)
            for sgn in (1.0, -1.0):
                khat = np.array([q[0], q[1], sgn * kz]) / K0
                total += (1.0 - abs(khat @ d) ** 2) / kz
    return 3.0 * math.pi / (2.0 * a * a * K0) * total


_MODE_CACHE: dict = {}
_MODE_CACHE_MAX = 4096


def infinite_lattice_mode(k: Sequence[float], a: float, dipole,
                          quality: str = "high",
                          settings: Optional[LatticeSumSettings] = None) -> LatticeMode:
    """Eigenvalue of the infinite-square-lattice mode at quasi-momentum k.

    k is the quasi-momentum in radians per wavelength (the Brillouin-zone
    corner is (pi/a, pi/a)); a the lattice spacing; dipole the unit dipole
    orientation.  The shift comes from the damped real-space sum with
    eps -> 0 extrapolation; the decay rate from the exact open-channel
    formula.  Raises LatticeSumError when the extrapolation residual exceeds
    the settings tolerance.  Results are memoised (spacing sweeps at several
    control-detuning values revisit identical mode points).
    """
    if a <= 0:
        raise ValueError("lattice spacing must be positive")
    cfg = settings if settings is not None else QUALITY_PRESETS[quality]
    d = np.asarray(dipole, dtype=complex)
    key = (float(a), float(k[0]), float(k[1]), tuple(np.round(d, 15)), cfg)
    if key in _MODE_CACHE:
        return _MODE_CACHE[key]
    eps = np.asarray(cfg.eps_ladder, dtype=float)
    sums = _kernels.lattice_mode_sums(float(a), float(k[0]), float(k[1]), d,
                                      eps, cfg.r_max, cfg.taper_frac)
    s0, resid = _neville_to_zero(eps, sums)
    if not np.isfinite(s0) or resid > cfg.tolerance:
        raise LatticeSumError("lattice-sum extrapolation did not converge", float(resid))
    lam_realspace = s0 - 0.5j
    gamma_exact = gamma_open_channels(k, a, d)
    eigenvalue = complex(lam_realspace.real, -0.5 * gamma_exact)
    in_cone = bool(np.linalg.norm(np.asarray(k, dtype=float)) <= K0 * (1.0 + 1e-12))
    mode = LatticeMode(
        quasi_momentum=(float(k[0]), float(k[1])),
        eigenvalue=eigenvalue,
        in_light_cone=in_cone,
        residual=float(resid),
        gamma_realspace=float(-2.0 * lam_realspace.imag),
    )
    if len(_MODE_CACHE) > _MODE_CACHE_MAX:
        _MODE_CACHE.clear()
    _MODE_CACHE[key] = mode
    return mode


def lattice_two_mode_model(a: float, dipole, coupling: float,
                           quality: str = "sweep") -> BrightDarkModel:
    """Bright/dark model of an infinite lattice driven at normal incidence.

    Bright mode: zero quasi-momentum.  Dark mode: the Brillouin-zone corner
    (pi/a, pi/a), perfectly dark for spacings below 1/sqrt(2) wavelengths.
    """
    bright = infinite_lattice_mode((0.0, 0.0), a, dipole, quality)
    corner = math.pi / a
    dark = infinite_lattice_mode((corner, corner), a, dipole, quality)
    return BrightDarkModel(lambda_bright=bright.eigenvalue,
                           lambda_dark=dark.eigenvalue,
                           coupling=coupling)
