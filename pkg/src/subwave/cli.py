"""Command-line interface.

Commands emit plain CSV files with a leading '#' comment block summarising
the run, plus a JSON manifest listing resolved parameters, seeds, and every
output file.  Exit codes: 0 success, 2 validation error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, precision, sense, spectra
from .core import (Scene, SceneValidationError, TwoModeScene, build_scene,
                   config_hash, dipole_vector, load_scene)
from .greens import coupling_csv_rows
from .modes import (EigsolverError, LatticeSumError, eigenmodes,
                    infinite_lattice_mode)
from .sense import NonConvergenceError, RankDeficiencyError
from .steady import ExcitationLimitError, SingularSystemError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (LatticeSumError, SingularSystemError, NonConvergenceError,
                    RankDeficiencyError, EigsolverError, ExcitationLimitError,
                    np.linalg.LinAlgError)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: str, rows, comments: dict) -> None:
    lines = [f"# {key}: {val}" for key, val in comments.items()]
    lines.append(header)
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


class Manifest:
    def __init__(self, command: str, args: argparse.Namespace, scene_config=None):
        self.data = {
            "command": command,
            "tool_version": __version__,
            "scene_hash": config_hash(scene_config) if scene_config else None,
            "scene_config": scene_config,
            "parameters": {k: v for k, v in vars(args).items() if k != "func"},
            "seeds": {},
            "notes": {},
            "outputs": [],
            "timestamps": {"started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())},
        }

    def comment_block(self) -> dict:
        block = {"command": self.data["command"], "tool_version": self.data["tool_version"]}
        if self.data["scene_hash"]:
            block["scene_hash"] = self.data["scene_hash"]
        for key, val in self.data["seeds"].items():
            block[f"seed_{key}"] = val
        for key, val in self.data["notes"].items():
            block[key] = val
        return block

    def add_output(self, path: Path) -> Path:
        self.data["outputs"].append(str(path))
        return path

    def write(self, out_dir: Path) -> Path:
        self.data["timestamps"]["finished"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        path = out_dir / f"{self.data['command']}_manifest.json"
        path.write_text(json.dumps(self.data, indent=2, default=str) + "\n")
        return path


def parse_grid(spec: str) -> np.ndarray:
    try:
        start, stop, num = spec.split(":")
        grid = np.linspace(float(start), float(stop), int(num))
    except ValueError as exc:
        raise SceneValidationError(f"bad grid spec {spec!r}; expected start:stop:n") from exc
    if grid.size < 2:
        raise SceneValidationError("grid needs at least 2 points")
    return grid


def parse_sweep(spec: str):
    try:
        var, rng = spec.split("=")
        start, stop, num = rng.split(":")
        return var, np.linspace(float(start), float(stop), int(num))
    except ValueError as exc:
        raise SceneValidationError(
            f"bad sweep spec {spec!r}; expected var=start:stop:n") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    scene = load_scene(args.scene)
    return scene


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    scene = _load(args)
    out = _out_dir(args)
    manifest = Manifest("spectrum", args, scene.config)
    grid = parse_grid(args.grid)
    record = spectra.sweep_spectrum(scene, grid, refine=args.refine)
    manifest.data["notes"].update(record.metadata.get("model_flags", {}))
    header, cols = record.columns()
    rows = zip(*cols)
    comments = manifest.comment_block()
    comments.update({k: v for k, v in record.metadata.items() if k.startswith("refine")})
    path = manifest.add_output(out / "spectrum.csv")
    write_csv(path, header, rows, comments)
    manifest.write(out)
    return EXIT_OK


_SWEEP_KEYS = {
    "spacing": ("array", "spacing", float),
    "delta0": ("detuning", None, float),
    "gamma_prime": ("imperfections", "gamma_prime", float),
    "sigma": ("imperfections", "sigma", float),
    "missing_fraction": ("imperfections", "missing_fraction", float),
    "n": ("array", None, int),
}

# which detuning-profile field a delta0 sweep drives
_AMPLITUDE_KEYS = {
    "uniform": "value",
    "antisymmetric": "amplitude",
    "sinusoidal": "amplitude",
    "plane_wave": "amplitude",
    "linear": "span",
}


def _scene_with(config: dict, var: str, value) -> Scene:
    if var not in _SWEEP_KEYS:
        raise SceneValidationError(
            f"unknown sweep variable {var!r}; choose from {sorted(_SWEEP_KEYS)}")
    section, key, cast = _SWEEP_KEYS[var]
    cfg = copy.deepcopy(config)
    cfg.setdefault(section, {})
    if var == "n":
        arr = cfg["array"]
        if arr.get("kind", "chain") == "lattice":
            arr["side"] = int(round(value))
            arr.pop("rows", None)
            arr.pop("cols", None)
        else:
            arr["n"] = int(round(value))
    elif var == "delta0":
        det = cfg["detuning"]
        if cfg.get("array", {}).get("kind") == "two_mode_model":
            det["amplitude"] = cast(value)
        else:
            profile = det.get("profile", "none")
            if profile not in _AMPLITUDE_KEYS:
                raise SceneValidationError(
                    f"detuning profile {profile!r} has no amplitude to sweep")
            if profile == "linear":
                det.pop("slope", None)
            det[_AMPLITUDE_KEYS[profile]] = cast(value)
    else:
        cfg[section][key] = cast(value)
    return build_scene(cfg)


def _metric_fn(metric: str):
    if metric == "smax":
        return lambda scene, realization: sense.max_sensitivity(
            scene, realization=realization)[1]
    if metric in ("integrated_detunings", "integrated_positions"):
        wrt = metric.split("_")[1]
        return lambda scene, realization: sense.integrated_sensitivity(
            scene, wrt, realization=realization).value
    raise SceneValidationError(f"unknown metric {metric!r}")


def cmd_sweep(args) -> int:
    scene = _load(args)
    out = _out_dir(args)
    manifest = Manifest("sweep", args, scene.config)
    var, values = parse_sweep(args.sweep)
    metric = _metric_fn(args.metric)
    config = scene.config

    stochastic = var == "missing_fraction" or float(
        config.get("imperfections", {}).get("missing_fraction", 0.0)) > 0
    realizations = args.realizations
    if stochastic:
        if args.seed is None and config.get("imperfections", {}).get("missing_seed") is None:
            raise SceneValidationError(
                "stochastic sweeps need an explicit seed (--seed or imperfections.missing_seed)")
        if realizations < 1:
            raise SceneValidationError("stochastic sweeps need --realizations >= 1")
        manifest.data["seeds"]["missing"] = (
            args.seed if args.seed is not None
            else config["imperfections"]["missing_seed"])

    rows = []
    per_real = []
    for value in values:
        cfg = copy.deepcopy(config)
        if args.seed is not None:
            cfg.setdefault("imperfections", {})["missing_seed"] = args.seed
        scene_v = _scene_with(cfg, var, value)
        is_stochastic_point = (getattr(scene_v, "missing_fraction", 0.0) or 0.0) > 0
        if is_stochastic_point and realizations > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                vals = list(pool.map(lambda r: metric(scene_v, r), range(realizations)))
            vals = np.asarray(vals)
            stderr = float(vals.std(ddof=1) / math.sqrt(realizations)) if realizations > 1 else 0.0
            rows.append((value, float(vals.mean()), stderr))
            per_real.extend((value, r, v) for r, v in enumerate(vals))
        else:
            rows.append((value, metric(scene_v, 0), 0.0 if stochastic else ""))
    header = "x,S_max,stderr" if args.metric == "smax" else f"x,{args.metric},stderr"
    path = manifest.add_output(out / "sweep.csv")
    write_csv(path, header, rows, {**manifest.comment_block(), "sweep_variable": var,
                                   "metric": args.metric})
    if per_real and args.keep_realizations:
        path2 = manifest.add_output(out / "sweep_realizations.csv")
        write_csv(path2, "x,realization,value", per_real, manifest.comment_block())
    manifest.write(out)
    return EXIT_OK


def cmd_modes(args) -> int:
    scene = _load(args)
    if isinstance(scene, TwoModeScene):
        raise SceneValidationError("mode dump needs an emitter scene")
    out = _out_dir(args)
    manifest = Manifest("modes", args, scene.config)
    asm = spectra.assemble(scene)
    modeset = eigenmodes(asm.couplings, asm.array.detunings)
    rows = [(i, s, g, c) for i, (s, g, c) in enumerate(
        zip(modeset.shifts, modeset.decay_rates, modeset.classification))]
    path = manifest.add_output(out / "modes.csv")
    write_csv(path, "alpha,J_alpha,Gamma_alpha,class", rows, manifest.comment_block())
    manifest.write(out)
    return EXIT_OK


def cmd_lattice(args) -> int:
    out = _out_dir(args)
    manifest = Manifest("lattice", args)
    grid = parse_grid(args.grid)
    dipole = dipole_vector(args.polarization)
    rows = []
    for a in grid:
        bright = infinite_lattice_mode((0.0, 0.0), a, dipole, args.quality)
        corner = math.pi / a
        dark = infinite_lattice_mode((corner, corner), a, dipole, args.quality)
        rows.append((a, bright.shift, bright.decay_rate, dark.shift,
                     abs(bright.shift - dark.shift), dark.decay_rate))
    diffs = np.array([r[1] - r[3] for r in rows])
    spacings = np.array([r[0] for r in rows])
    crossing = None
    flips = np.nonzero(np.diff(np.sign(diffs)) != 0)[0]
    if flips.size:
        i = int(flips[0])
        x0, x1 = spacings[i], spacings[i + 1]
        y0, y1 = diffs[i], diffs[i + 1]
        crossing = float(x0 - y0 * (x1 - x0) / (y1 - y0))
        manifest.data["notes"]["mode_crossing_spacing"] = crossing
    comments = manifest.comment_block()
    comments["polarization"] = args.polarization
    if crossing is not None:
        comments["mode_crossing_spacing"] = crossing
    path = manifest.add_output(out / "lattice.csv")
    write_csv(path, "a,J_B,Gamma_B,J_D,abs_JB_minus_JD,Gamma_D",
              [r for r in rows], comments)
    manifest.write(out)
    if crossing is not None:
        print(f"bright/dark shift crossing at spacing a = {crossing:.5f}")
    return EXIT_OK


def cmd_sense(args) -> int:
    scene = _load(args)
    out = _out_dir(args)
    manifest = Manifest("sense", args, scene.config)
    grid = parse_grid(args.grid) if args.grid else None
    outputs = {}
    if grid is not None:
        curve = sense.sensitivity_curve(scene, grid)
        path = manifest.add_output(out / "sense.csv")
        write_csv(path, "Delta_L,S", zip(curve.grid, curve.values),
                  manifest.comment_block())
        outputs["curve"] = path
    if args.max or grid is None:
        delta_star, s_star = sense.max_sensitivity(scene)
        path = manifest.add_output(out / "sense_max.csv")
        write_csv(path, "Delta_star,S_star", [(delta_star, s_star)],
                  manifest.comment_block())
        outputs["max"] = path
    manifest.write(out)
    return EXIT_OK


def cmd_jacobian(args) -> int:
    scene = _load(args)
    out = _out_dir(args)
    manifest = Manifest("jacobian", args, scene.config)
    freqs = parse_grid(args.samples) if args.samples else None
    report = sense.jacobian(scene, freqs, args.wrt)
    rows = [(i, j, report.matrix[i, j])
            for i in range(report.matrix.shape[0])
            for j in range(report.matrix.shape[1])]
    path = manifest.add_output(out / "jacobian.csv")
    write_csv(path, "i,j,dT_dp", rows, {**manifest.comment_block(), "wrt": args.wrt})
    summary = manifest.add_output(out / "jacobian_summary.csv")
    write_csv(summary, "rank,kappa",
              [(report.rank, report.condition_number)],
              {**manifest.comment_block(),
               "singular_values": " ".join(repr(float(s)) for s in report.singular_values),
               "frequencies": " ".join(repr(float(f)) for f in report.frequencies)})
    manifest.write(out)
    print(f"rank={report.rank}, kappa={report.condition_number:.6g}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    scene = _load(args)
    out = _out_dir(args)
    manifest = Manifest("reconstruct", args, scene.config)
    manifest.data["seeds"]["perturbation"] = args.seed
    asm = spectra.assemble(scene)
    modeset = eigenmodes(asm.couplings, asm.array.detunings)
    freqs = (parse_grid(args.samples) if args.samples
             else sense.default_frequencies(modeset))

    rng = np.random.Generator(np.random.Philox(key=args.seed))
    direction = rng.standard_normal(asm.array.n)
    true_q = args.perturbation_norm * direction / np.linalg.norm(direction)
    if args.wrt == "detunings":
        arr = asm.array.with_detunings(asm.array.detunings + true_q)
    else:
        pos = asm.array.positions.copy()
        pos[:, 0] = pos[:, 0] + true_q
        from .core import EmitterArray
        arr = EmitterArray(pos, asm.array.detunings, asm.array.environment,
                           asm.array.dipole, asm.array.gamma_prime)
    measured = np.array([abs(spectra.waveguide_transmission(arr, scene.drive, f)[0]) ** 2
                         for f in freqs])
    if args.noise > 0:
        measured = measured + args.noise * rng.standard_normal(measured.size)
    result = sense.reconstruct(scene, measured, freqs, args.wrt)
    err = result.perturbation - true_q
    rows = [(j, true_q[j], result.perturbation[j], err[j]) for j in range(true_q.size)]
    path = manifest.add_output(out / "reconstruct.csv")
    write_csv(path, "site,true,recovered,error", rows,
              {**manifest.comment_block(), "wrt": args.wrt,
               "iterations": result.iterations,
               "kappa": result.condition_number,
               "residual_norm": result.residual_norm,
               "max_abs_error": float(np.max(np.abs(err)))})
    manifest.write(out)
    print(f"recovered perturbation, max componentwise error {np.max(np.abs(err)):.3e} "
          f"in {result.iterations} iterations")
    return EXIT_OK


def cmd_precision(args) -> int:
    out = _out_dir(args)
    manifest = Manifest("precision", args)
    inputs = precision.inputs_from_preset(
        args.preset, args.gamma_sub_ratio, args.n, args.p, args.tau,
        args.eta, args.contrast)
    report = precision.estimate(inputs)
    rows = [(args.preset, inputs.gamma_sub, inputs.gamma_0, inputs.omega_0,
             args.n, args.p, args.tau, report.frequency_uncertainty,
             report.fractional_precision, report.power_cap)]
    path = manifest.add_output(out / "precision.csv")
    write_csv(path, "preset,gamma_sub,gamma_0,omega_0,N,p,tau,"
                    "delta_omega,fractional,power_cap_W", rows,
              {**manifest.comment_block(), "disclaimer": report.disclaimer})
    text = (
        f"preset:                {args.preset}\n"
        f"subradiant linewidth:  {inputs.gamma_sub:.6g} 1/s\n"
        f"single-atom rate:      {inputs.gamma_0:.6g} 1/s\n"
        f"atoms:                 {args.n}\n"
        f"excitation p:          {args.p}\n"
        f"measurement time:      {args.tau} s\n"
        f"frequency uncertainty: {report.frequency_uncertainty:.3e} 1/s\n"
        f"fractional precision:  {report.fractional_precision:.3e}\n"
        f"power cap:             {report.power_cap:.3e} W\n"
        f"note: {report.disclaimer}\n")
    txt_path = manifest.add_output(out / "precision.txt")
    txt_path.write_text(text)
    manifest.write(out)
    print(text, end="")
    return EXIT_OK


def cmd_dump(args) -> int:
    scene = _load(args)
    if isinstance(scene, TwoModeScene):
        raise SceneValidationError("coupling dump needs an emitter scene")
    out = _out_dir(args)
    manifest = Manifest("dump", args, scene.config)
    asm = spectra.assemble(scene)
    path = manifest.add_output(out / "couplings.csv")
    write_csv(path, "i,j,J,Gamma", coupling_csv_rows(asm.couplings),
              manifest.comment_block())
    manifest.write(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

SCENE_REFERENCE = """\
scene file reference (TOML):

  [array]
    kind         chain | lattice | explicit | two_mode_model
    n            chain emitter count          side/rows/cols  lattice size
    spacing      in wavelengths               positions       explicit (N,3) list
    environment  waveguide | free_space
    k_p          guided wavenumber, units of 2*pi/wavelength (default 1.0)
    dipole       x | y | z | circular | 3-vector (required for free space)
    two_mode_model: j_bright, gamma_bright, j_dark  or  from_lattice = true
                    with spacing, dipole, quality (sweep | high)

  [drive]
    kind             guided | gaussian
    amplitude        Rabi scale in rate units (default 1e-3)
    laser_detuning   base detuning in rate units
    direction        right | left (guided)
    waist            beam waist in wavelengths or "auto" = 0.3 sqrt(N) a
    focus            [x, y, z] focal point (gaussian)
    polarization     defaults to the array dipole

  [detuning]
    profile  none | uniform | antisymmetric | sinusoidal | linear
             | plane_wave | per_site
    value/amplitude/slope/span/values  per profile
    spatial_frequency  (sinusoidal, rad per wavelength; default pi/(N a))
    k or k_over_pi_a   (plane_wave quasi-momentum)

  [imperfections]
    gamma_prime       non-guided loss rate
    sigma             position spread (waveguide motion averaging)
    quadrature        gauss_hermite | monte_carlo ; gh_order, mc_samples, mc_seed
    missing_fraction  fraction of removed sites ; missing_seed

  [detection]          (free space)
    kind      disk | point
    radius    "auto" = 1.2 * waist ; count (default 31) ; distance (default 1.1)
    layout    sunflower | random (+ seed)
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subwave",
        description="Collective-scattering spectra and sensing analysis for emitter arrays",
        epilog=SCENE_REFERENCE,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scene=True):
        if scene:
            p.add_argument("--scene", required=True, help="TOML scene file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker cap")

    p = sub.add_parser("spectrum", help="transmittance spectrum over a detuning grid")
    common(p)
    p.add_argument("--grid", required=True, help="start:stop:n laser detunings")
    p.add_argument("--refine", action="store_true", help="adaptively refine sharp features")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="sweep a scene variable and record a metric")
    common(p)
    p.add_argument("--sweep", required=True, help="var=start:stop:n")
    p.add_argument("--metric", default="smax",
                   choices=["smax", "integrated_detunings", "integrated_positions"])
    p.add_argument("--realizations", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--keep-realizations", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("modes", help="dump collective eigenmodes")
    common(p)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("lattice", help="infinite-lattice bright/dark mode sweep")
    common(p, scene=False)
    p.add_argument("--grid", required=True, help="start:stop:n lattice spacings")
    p.add_argument("--polarization", default="x")
    p.add_argument("--quality", default="sweep", choices=["sweep", "high"])
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("sense", help="sensitivity curve and/or maximum")
    common(p)
    p.add_argument("--grid", default=None, help="start:stop:n laser detunings")
    p.add_argument("--max", action="store_true", help="also search the maximum")
    p.set_defaults(func=cmd_sense)

    p = sub.add_parser("jacobian", help="site-resolved sensing Jacobian")
    common(p)
    p.add_argument("--wrt", default="detunings", choices=["detunings", "positions"])
    p.add_argument("--samples", default=None, help="start:stop:n sample frequencies")
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("reconstruct", help="synthetic round-trip reconstruction")
    common(p)
    p.add_argument("--wrt", default="detunings", choices=["detunings", "positions"])
    p.add_argument("--perturbation-norm", type=float, default=0.005)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("precision", help="frequency-precision estimate")
    common(p, scene=False)
    p.add_argument("--preset", default="rb87_d2", choices=sorted(precision.PRESETS))
    p.add_argument("--gamma-sub-ratio", type=float, default=0.01,
                   help="subradiant linewidth as a fraction of gamma_0")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--contrast", type=float, default=1.0)
    p.set_defaults(func=cmd_precision)

    p = sub.add_parser("dump", help="dump coupling matrices as CSV")
    common(p)
    p.set_defaults(func=cmd_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SceneValidationError, ValueError, KeyError, OSError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
