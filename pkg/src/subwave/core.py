"""Shared domain types: units, emitter geometry, drives, detuning profiles,
and scene configuration.

Conventions used throughout the package:

* lengths are dimensionless in units of the transition wavelength, so the
  free-space wavenumber is exactly 2*pi;
* rates (detunings, Rabi amplitudes, decay rates) are dimensionless in units
  of the single-emitter reference decay rate -- the guided-mode rate for
  waveguide scenes, the free-space rate for lattice scenes;
* waveguide chains live on the x axis (transverse coordinates must vanish);
  free-space lattices live in the z = 0 plane and are probed along +z.

All types are immutable value objects and safe to share between workers.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

TWO_PI = 2.0 * math.pi


class SceneValidationError(ValueError):
    """A configuration or geometry constraint was violated."""


# ---------------------------------------------------------------------------
# Units
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Units:
    """Physical anchors for the dimensionless internal quantities.

    rate_unit: reference decay rate in angular frequency units (1/s).
    length_unit: transition wavelength in meters.
    """
    rate_unit: float
    length_unit: float

    def __post_init__(self):
        if self.rate_unit <= 0 or self.length_unit <= 0:
            raise SceneValidationError("units must be positive")

    def rate_to_physical(self, x):
        return np.asarray(x) * self.rate_unit

    def rate_from_physical(self, x):
        return np.asarray(x) / self.rate_unit

    def length_to_physical(self, x):
        return np.asarray(x) * self.length_unit

    def length_from_physical(self, x):
        return np.asarray(x) / self.length_unit


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Waveguide1D:
    """Single-mode 1D waveguide; k_p in units of 2*pi / wavelength."""
    k_p: float = 1.0

    def __post_init__(self):
        if self.k_p <= 0:
            raise SceneValidationError("guided-mode wavenumber must be positive")

    @property
    def wavenumber(self) -> float:
        """Guided wavenumber in radians per wavelength unit."""
        return TWO_PI * self.k_p


@dataclass(frozen=True)
class FreeSpace:
    pass


Environment = Union[Waveguide1D, FreeSpace]


# ---------------------------------------------------------------------------
# Detuning profiles
# ---------------------------------------------------------------------------

def _chain_coordinate(positions: np.ndarray) -> np.ndarray:
    """Axial coordinate measured from the first (leftmost) site."""
    x = positions[:, 0]
    return x - x.min()


@dataclass(frozen=True)
class UniformDetuning:
    value: float = 0.0

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        return np.full(len(positions), float(self.value))


@dataclass(frozen=True)
class AntisymmetricDetuning:
    """(+amplitude, -amplitude) on a two-emitter chain."""
    amplitude: float

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        if len(positions) != 2:
            raise SceneValidationError("antisymmetric detuning requires exactly 2 emitters")
        return np.array([self.amplitude, -self.amplitude], dtype=float)


@dataclass(frozen=True)
class SinusoidalDetuning:
    """amplitude * sin(q * r) along the chain, r measured from the first site.

    If the spatial frequency q is omitted it defaults to pi / (N * a) with a
    the mean nearest-neighbour spacing.
    """
    amplitude: float
    spatial_frequency: Optional[float] = None

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        r = _chain_coordinate(positions)
        q = self.spatial_frequency
        if q is None:
            n = len(positions)
            if n < 2:
                raise SceneValidationError("sinusoidal detuning needs at least 2 emitters")
            a = (r.max() - r.min()) / (n - 1)
            q = math.pi / (n * a)
        return self.amplitude * np.sin(q * r)


@dataclass(frozen=True)
class LinearDetuning:
    """slope * r along the chain; alternatively a total span across the chain.

    With span s on an N-site chain of spacing a, the slope is s / ((N-1) a),
    giving detunings from 0 at the first site to s at the last.
    """
    slope: Optional[float] = None
    span: Optional[float] = None

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        r = _chain_coordinate(positions)
        if (self.slope is None) == (self.span is None):
            raise SceneValidationError("linear detuning takes exactly one of slope or span")
        if self.slope is not None:
            return self.slope * r
        length = r.max() - r.min()
        if length <= 0:
            raise SceneValidationError("linear detuning span needs a chain of finite length")
        return self.span * r / length


@dataclass(frozen=True)
class PlaneWaveDetuning:
    """amplitude * cos(k . r) over the lattice plane; k in radians per wavelength."""
    amplitude: float
    k: tuple

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        kx, ky = float(self.k[0]), float(self.k[1])
        return self.amplitude * np.cos(kx * positions[:, 0] + ky * positions[:, 1])


@dataclass(frozen=True)
class PerSiteDetuning:
    values: tuple

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.values, dtype=float)
        if len(vals) != len(positions):
            raise SceneValidationError("per-site detuning length must match emitter count")
        return vals


DetuningProfile = Union[
    UniformDetuning, AntisymmetricDetuning, SinusoidalDetuning,
    LinearDetuning, PlaneWaveDetuning, PerSiteDetuning,
]


# ---------------------------------------------------------------------------
# Emitter array
# ---------------------------------------------------------------------------

_DIPOLE_PRESETS = {
    "x": np.array([1.0, 0.0, 0.0], dtype=complex),
    "y": np.array([0.0, 1.0, 0.0], dtype=complex),
    "z": np.array([0.0, 0.0, 1.0], dtype=complex),
    "circular": np.array([1.0, 1.0j, 0.0], dtype=complex) / math.sqrt(2.0),
}


def dipole_vector(spec) -> np.ndarray:
    """Resolve a dipole orientation spec (preset name or 3-vector) to a unit vector."""
    if isinstance(spec, str):
        try:
            return _DIPOLE_PRESETS[spec].copy()
        except KeyError:
            raise SceneValidationError(f"unknown dipole preset {spec!r}") from None
    vec = np.asarray(spec, dtype=complex)
    if vec.shape != (3,):
        raise SceneValidationError("dipole must be a 3-vector")
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        raise SceneValidationError("dipole vector has zero norm")
    return vec / norm


@dataclass(frozen=True)
class EmitterArray:
    """Positions, dipole orientation, per-site detunings, and environment."""
    positions: np.ndarray          # (N, 3), wavelength units
    detunings: np.ndarray          # (N,), rate units
    environment: Environment
    dipole: Optional[np.ndarray] = None   # unit complex 3-vector (free space)
    gamma_prime: float = 0.0

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        det = np.atleast_1d(np.asarray(self.detunings, dtype=float))
        if pos.shape[1] != 3:
            raise SceneValidationError("positions must be 3-vectors")
        if det.shape[0] != pos.shape[0]:
            raise SceneValidationError("detunings length must equal emitter count")
        if self.gamma_prime < 0:
            raise SceneValidationError("non-guided loss rate must be >= 0")
        if isinstance(self.environment, Waveguide1D):
            if pos.shape[0] and np.max(np.abs(pos[:, 1:])) > 1e-12:
                raise SceneValidationError(
                    "waveguide emitters must lie on the axis (zero transverse coordinates)")
        else:
            if self.dipole is None:
                raise SceneValidationError("free-space arrays require a dipole orientation")
        if self.dipole is not None:
            d = np.asarray(self.dipole, dtype=complex)
            if abs(np.linalg.norm(d) - 1.0) > 1e-9:
                raise SceneValidationError("dipole must have unit norm")
            object.__setattr__(self, "dipole", d)
        pos.setflags(write=False)
        det.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "detunings", det)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def axial(self) -> np.ndarray:
        """Axial coordinates of a waveguide chain."""
        return self.positions[:, 0]

    def with_detunings(self, detunings) -> "EmitterArray":
        return EmitterArray(self.positions, np.asarray(detunings, dtype=float),
                            self.environment, self.dipole, self.gamma_prime)

    def is_chain(self) -> bool:
        return self.n == 0 or float(np.max(np.abs(self.positions[:, 1:]))) <= 1e-12


def chain_positions(n: int, spacing: float) -> np.ndarray:
    """n sites on the x axis, centred on the origin."""
    x = (np.arange(n) - 0.5 * (n - 1)) * spacing
    pos = np.zeros((n, 3))
    pos[:, 0] = x
    return pos


def square_lattice_positions(rows: int, cols: int, spacing: float) -> np.ndarray:
    """rows x cols square lattice in the z = 0 plane, centred on the origin."""
    ix = np.arange(cols) - 0.5 * (cols - 1)
    iy = np.arange(rows) - 0.5 * (rows - 1)
    gx, gy = np.meshgrid(ix, iy, indexing="ij")
    pos = np.zeros((rows * cols, 3))
    pos[:, 0] = spacing * gx.ravel()
    pos[:, 1] = spacing * gy.ravel()
    return pos


def mirror(array: EmitterArray) -> EmitterArray:
    """Reflect a 1D chain about its centre and reverse the detuning list."""
    if not array.is_chain():
        raise SceneValidationError("mirror is defined for 1D chains only")
    x = array.positions[:, 0]
    centre = 0.5 * (x.min() + x.max())
    new_pos = array.positions.copy()
    new_pos[:, 0] = (2.0 * centre - x)[::-1]
    return EmitterArray(new_pos, array.detunings[::-1].copy(), array.environment,
                        array.dipole, array.gamma_prime)


# ---------------------------------------------------------------------------
# Drives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GuidedDrive:
    """Plane wave in the guided mode; direction is the propagation direction."""
    amplitude: float = 1e-3
    laser_detuning: float = 0.0
    direction: str = "right"

    def __post_init__(self):
        if self.direction not in ("right", "left"):
            raise SceneValidationError("guided drive direction must be 'right' or 'left'")
        if self.amplitude <= 0:
            raise SceneValidationError("drive amplitude must be positive")


@dataclass(frozen=True)
class GaussianBeamDrive:
    """Fundamental Gaussian beam propagating along +z, normally incident."""
    waist: float
    amplitude: float = 1e-3
    laser_detuning: float = 0.0
    focus: tuple = (0.0, 0.0, 0.0)
    polarization: Optional[np.ndarray] = None   # defaults to the array dipole

    def __post_init__(self):
        if self.waist <= 0:
            raise SceneValidationError("beam waist must be positive")
        if self.amplitude <= 0:
            raise SceneValidationError("drive amplitude must be positive")
        if self.polarization is not None:
            object.__setattr__(self, "polarization", dipole_vector(self.polarization))

    def profile(self, points: np.ndarray) -> np.ndarray:
        """Complex scalar beam amplitude at the given points (unit peak)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.focus, dtype=float)
        zr = 0.5 * TWO_PI * self.waist**2
        z = pts[:, 2]
        rho2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        wz = self.waist * np.sqrt(1.0 + (z / zr) ** 2)
        gouy = np.arctan2(z, zr)
        inv_r = z / (z**2 + zr**2)
        phase = TWO_PI * z + 0.5 * TWO_PI * rho2 * inv_r - gouy
        return (self.waist / wz) * np.exp(-rho2 / wz**2) * np.exp(1j * phase)


Drive = Union[GuidedDrive, GaussianBeamDrive]


# ---------------------------------------------------------------------------
# Scene assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scene:
    """A fully resolved simulation scene."""
    array: EmitterArray
    drive: Drive
    detection: object = None        # spectra.DetectionLayout for free-space scenes
    motion: object = None           # steady.MotionModel when position spread > 0
    missing_fraction: float = 0.0
    missing_seed: Optional[int] = None
    config: dict = field(default_factory=dict)

    @property
    def scene_hash(self) -> str:
        return config_hash(self.config) if self.config else ""


@dataclass(frozen=True)
class TwoModeScene:
    """Analytic bright/dark two-mode scene (no explicit emitters).

    Either carries explicit mode parameters or derives them from an infinite
    square lattice with the given spacing and dipole orientation.
    """
    coupling: float                       # control-detuning amplitude
    j_bright: Optional[float] = None
    gamma_bright: Optional[float] = None
    j_dark: Optional[float] = None
    from_lattice: bool = False
    spacing: Optional[float] = None
    dipole: Optional[np.ndarray] = None
    quality: str = "sweep"
    config: dict = field(default_factory=dict)

    @property
    def scene_hash(self) -> str:
        return config_hash(self.config) if self.config else ""


def config_hash(config: dict) -> str:
    """Deterministic short hash of a scene configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def detuning_profile_from_config(cfg: dict) -> DetuningProfile:
    profile = cfg.get("profile", "none")
    if profile in ("none", "zero"):
        return UniformDetuning(0.0)
    if profile == "uniform":
        return UniformDetuning(float(cfg["value"]))
    if profile == "antisymmetric":
        return AntisymmetricDetuning(float(cfg["amplitude"]))
    if profile == "sinusoidal":
        q = cfg.get("spatial_frequency")
        return SinusoidalDetuning(float(cfg["amplitude"]),
                                  None if q is None else float(q))
    if profile == "linear":
        slope = cfg.get("slope")
        span = cfg.get("span")
        return LinearDetuning(None if slope is None else float(slope),
                              None if span is None else float(span))
    if profile == "plane_wave":
        amp = float(cfg["amplitude"])
        if "k_over_pi_a" in cfg:
            spacing = cfg["_spacing"]
            k = tuple(float(c) * math.pi / spacing for c in cfg["k_over_pi_a"])
        else:
            k = tuple(float(c) for c in cfg["k"])
        return PlaneWaveDetuning(amp, k)
    if profile == "per_site":
        return PerSiteDetuning(tuple(float(v) for v in cfg["values"]))
    raise SceneValidationError(f"unknown detuning profile {profile!r}")


def build_array(config: dict) -> EmitterArray:
    """Construct a fully resolved EmitterArray from an [array]/[detuning] config."""
    arr_cfg = config.get("array", {})
    kind = arr_cfg.get("kind", "chain")
    env_name = arr_cfg.get("environment", "waveguide")
    if env_name == "waveguide":
        env: Environment = Waveguide1D(float(arr_cfg.get("k_p", 1.0)))
    elif env_name == "free_space":
        env = FreeSpace()
    else:
        raise SceneValidationError(f"unknown environment {env_name!r}")

    spacing = float(arr_cfg.get("spacing", 0.0))
    if kind == "chain":
        n = int(arr_cfg["n"])
        if n < 1:
            raise SceneValidationError("emitter count must be >= 1")
        if n > 1 and spacing <= 0:
            raise SceneValidationError("chain spacing must be positive")
        positions = chain_positions(n, spacing)
    elif kind == "lattice":
        side = arr_cfg.get("side")
        rows = int(arr_cfg.get("rows", side or 0))
        cols = int(arr_cfg.get("cols", side or 0))
        if rows < 1 or cols < 1:
            raise SceneValidationError("lattice needs rows/cols or side >= 1")
        if spacing <= 0:
            raise SceneValidationError("lattice spacing must be positive")
        positions = square_lattice_positions(rows, cols, spacing)
    elif kind == "explicit":
        positions = np.asarray(arr_cfg["positions"], dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3 or positions.shape[0] < 1:
            raise SceneValidationError("explicit positions must be an (N, 3) list, N >= 1")
    else:
        raise SceneValidationError(f"unknown array kind {kind!r}")

    dipole = None
    if isinstance(env, FreeSpace):
        if "dipole" not in arr_cfg:
            raise SceneValidationError(
                "free-space scenes require an explicit dipole orientation")
        dipole = dipole_vector(arr_cfg["dipole"])

    det_cfg = dict(config.get("detuning", {}))
    if spacing > 0:
        det_cfg.setdefault("_spacing", spacing)
    profile = detuning_profile_from_config(det_cfg)
    detunings = profile.evaluate(positions)

    gamma_prime = float(config.get("imperfections", {}).get("gamma_prime", 0.0))
    return EmitterArray(positions, detunings, env, dipole, gamma_prime)


def build_drive(config: dict, array: EmitterArray) -> Drive:
    drv = config.get("drive", {})
    kind = drv.get("kind", "guided" if isinstance(array.environment, Waveguide1D) else "gaussian")
    amplitude = float(drv.get("amplitude", 1e-3))
    delta_l = float(drv.get("laser_detuning", 0.0))
    if kind == "guided":
        if not isinstance(array.environment, Waveguide1D):
            raise SceneValidationError("guided drive requires a waveguide environment")
        return GuidedDrive(amplitude, delta_l, drv.get("direction", "right"))
    if kind == "gaussian":
        waist = drv.get("waist", "auto")
        if waist == "auto":
            spacing = float(config.get("array", {}).get("spacing", 0.0))
            if spacing <= 0:
                raise SceneValidationError("auto waist needs a lattice spacing")
            waist = 0.3 * math.sqrt(array.n) * spacing
        pol = drv.get("polarization")
        return GaussianBeamDrive(float(waist), amplitude, delta_l,
                                 tuple(drv.get("focus", (0.0, 0.0, 0.0))),
                                 pol)
    raise SceneValidationError(f"unknown drive kind {kind!r}")


def build_scene(config: dict) -> Union[Scene, TwoModeScene]:
    """Resolve a configuration mapping into a Scene (or analytic TwoModeScene)."""
    arr_cfg = config.get("array", {})
    if arr_cfg.get("kind") == "two_mode_model":
        det = config.get("detuning", {})
        coupling = float(det.get("amplitude", 0.0))
        if arr_cfg.get("from_lattice", False):
            if "dipole" not in arr_cfg:
                raise SceneValidationError(
                    "lattice-derived two-mode scenes require an explicit dipole orientation")
            return TwoModeScene(
                coupling=coupling, from_lattice=True,
                spacing=float(arr_cfg["spacing"]),
                dipole=dipole_vector(arr_cfg["dipole"]),
                quality=arr_cfg.get("quality", "sweep"),
                config=config)
        return TwoModeScene(
            coupling=coupling,
            j_bright=float(arr_cfg.get("j_bright", 0.0)),
            gamma_bright=float(arr_cfg.get("gamma_bright", 2.0)),
            j_dark=float(arr_cfg.get("j_dark", 0.0)),
            config=config)

    array = build_array(config)
    drive = build_drive(config, array)

    imp = config.get("imperfections", {})
    motion = None
    sigma = float(imp.get("sigma", 0.0))
    if sigma > 0:
        from . import steady
        quad = imp.get("quadrature", "gauss_hermite")
        motion = steady.MotionModel(
            sigma=sigma, quadrature=quad,
            order=int(imp.get("gh_order", 40)),
            samples=int(imp.get("mc_samples", 100_000)),
            seed=imp.get("mc_seed"))

    detection = None
    if isinstance(array.environment, FreeSpace):
        from . import spectra
        det_cfg = config.get("detection", {})
        if isinstance(drive, GaussianBeamDrive):
            detection = spectra.detection_from_config(det_cfg, drive.waist)

    return Scene(
        array=array, drive=drive, detection=detection, motion=motion,
        missing_fraction=float(imp.get("missing_fraction", 0.0)),
        missing_seed=imp.get("missing_seed"),
        config=config)


def load_scene(path) -> Union[Scene, TwoModeScene]:
    """Load a TOML scene file and resolve it."""
    raw = Path(path).read_bytes()
    try:
        config = tomllib.loads(raw.decode())
    except tomllib.TOMLDecodeError as exc:
        raise SceneValidationError(f"cannot parse scene file {path}: {exc}") from exc
    return build_scene(config)
