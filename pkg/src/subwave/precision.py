"""Frequency-precision estimate from a subradiant linewidth.

Order-of-magnitude tool: shot-noise-limited detection of the transmitted
power through the steepest spectral feature gives

    delta_omega = Gamma_sub / (C * sqrt(eta_eff * p * N * Gamma_0 * tau))

with p the per-atom excitation, N the atom number, tau the photon-collection
time, and eta_eff / C order-unity efficiency and contrast factors.  The
weak-drive condition also caps the usable incident power at
p * N * hbar * omega_0 * Gamma_0, which is reported alongside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

HBAR = 1.054_571_817e-34      # J s
C_LIGHT = 299_792_458.0       # m / s

DISCLAIMER = "order-of-magnitude estimate; trust to within one decade"


@dataclass(frozen=True)
class PrecisionInputs:
    """Operating point of the estimate; rates are angular (1/s)."""
    gamma_sub: float          # subradiant linewidth
    gamma_0: float            # single-emitter decay rate
    omega_0: float            # transition angular frequency
    n_atoms: int
    excitation: float         # max per-atom excited population p
    tau: float                # measurement (photon-collection) time, s
    eta_eff: float = 1.0
    contrast: float = 1.0

    def __post_init__(self):
        for name in ("gamma_sub", "gamma_0", "omega_0", "excitation", "tau",
                     "eta_eff", "contrast"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        if self.excitation > 0.1:
            raise ValueError("excitation must stay within the weak-drive regime (p <= 0.1)")


@dataclass(frozen=True)
class Preset:
    name: str
    gamma_0: float
    wavelength: float

    @property
    def omega_0(self) -> float:
        return 2.0 * math.pi * C_LIGHT / self.wavelength


PRESETS = {
    # D2 line of 87Rb, the workhorse of subwavelength-lattice experiments
    "rb87_d2": Preset("rb87_d2", 2.0 * math.pi * 6.0666e6, 780.241e-9),
    # millihertz-class ultranarrow optical transition (Sr clock line scale)
    "ultranarrow_mhz": Preset("ultranarrow_mhz", 2.0 * math.pi * 1.0e-3, 698.4e-9),
}


def inputs_from_preset(preset: str, gamma_sub_ratio: float, n_atoms: int,
                       excitation: float, tau: float, eta_eff: float = 1.0,
                       contrast: float = 1.0) -> PrecisionInputs:
    """Build inputs with the subradiant linewidth given as a fraction of gamma_0."""
    p = PRESETS[preset]
    return PrecisionInputs(
        gamma_sub=gamma_sub_ratio * p.gamma_0, gamma_0=p.gamma_0,
        omega_0=p.omega_0, n_atoms=n_atoms, excitation=excitation, tau=tau,
        eta_eff=eta_eff, contrast=contrast)


def frequency_uncertainty(inputs: PrecisionInputs) -> float:
    """Smallest resolvable angular-frequency shift (1/s)."""
    snr_scale = inputs.contrast * math.sqrt(
        inputs.eta_eff * inputs.excitation * inputs.n_atoms * inputs.gamma_0 * inputs.tau)
    return inputs.gamma_sub / snr_scale


def fractional_precision(inputs: PrecisionInputs) -> float:
    """Fractional (Allan-deviation-style) instability at measurement time tau."""
    return frequency_uncertainty(inputs) / inputs.omega_0


def power_cap(inputs: PrecisionInputs) -> float:
    """Maximum incident power (W) compatible with the weak-drive regime."""
    return inputs.excitation * inputs.n_atoms * HBAR * inputs.omega_0 * inputs.gamma_0


@dataclass(frozen=True)
class PrecisionReport:
    inputs: PrecisionInputs
    frequency_uncertainty: float
    fractional_precision: float
    power_cap: float
    disclaimer: str = DISCLAIMER


def estimate(inputs: PrecisionInputs) -> PrecisionReport:
    return PrecisionReport(
        inputs=inputs,
        frequency_uncertainty=frequency_uncertainty(inputs),
        fractional_precision=fractional_precision(inputs),
        power_cap=power_cap(inputs))
