"""Generate every figure input once per session by running the subwave CLI.

The figures package consumes the simulator exclusively through its
command-line interface and CSV outputs; nothing here imports subwave.
"""
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

PAIR = """
[array]
kind = "chain"
n = 2
spacing = 0.04
environment = "waveguide"

[drive]
kind = "guided"
amplitude = 1e-3

[detuning]
profile = "none"
"""

PAIR_SHIFTED = PAIR.replace('profile = "none"', 'profile = "uniform"\nvalue = 0.2')

SINGLE = """
[array]
kind = "chain"
n = 1
spacing = 0.0
environment = "waveguide"

[drive]
kind = "guided"
amplitude = 1e-3
"""

DICKE_BARE = PAIR.replace("spacing = 0.04", "spacing = 1.0")
DICKE_DETUNED = DICKE_BARE.replace(
    'profile = "none"', 'profile = "antisymmetric"\namplitude = 0.1')

TWO_MODE = """
[array]
kind = "two_mode_model"
from_lattice = true
spacing = 0.55
dipole = "x"
quality = "sweep"

[detuning]
amplitude = {amplitude}
"""

CHAIN4 = """
[array]
kind = "chain"
n = 4
spacing = 0.25
environment = "waveguide"

[drive]
kind = "guided"
amplitude = 1e-3

[detuning]
{detuning}
"""

LATTICE = """
[array]
kind = "lattice"
side = 6
spacing = 0.5
environment = "free_space"
dipole = "x"

[drive]
kind = "gaussian"
waist = "auto"
amplitude = 1e-3

[detuning]
profile = "plane_wave"
amplitude = 0.1
k_over_pi_a = [1.0, 1.0]
"""

LATTICE_055 = LATTICE.replace("spacing = 0.5", "spacing = 0.55")


def run_cli(*args):
    proc = subprocess.run([sys.executable, "-m", "subwave.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, f"subwave {' '.join(args)} failed:\n{proc.stderr}"
    return proc


def _collect(workdir: Path, produced: str, dest: Path):
    shutil.copyfile(workdir / produced, dest)


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("figure_inputs")
    scenes = root / "scenes"
    scratch = root / "scratch"
    scenes.mkdir()
    data = root / "data"
    data.mkdir()

    def scene(name, text):
        path = scenes / name
        path.write_text(text)
        return str(path)

    def out(name):
        d = scratch / name
        return d, str(d)

    pair = scene("pair.toml", PAIR)

    d, ds = out("pair_spec")
    run_cli("spectrum", "--scene", pair, "--out", ds, "--grid=-3:3:201", "--refine")
    _collect(d, "spectrum.csv", data / "pair_spectrum.csv")

    d, ds = out("pair_spec_shifted")
    run_cli("spectrum", "--scene", scene("pair_shift.toml", PAIR_SHIFTED),
            "--out", ds, "--grid=-3.2:2.8:201", "--refine")
    _collect(d, "spectrum.csv", data / "pair_spectrum_shifted.csv")

    d, ds = out("pair_sweep")
    run_cli("sweep", "--scene", pair, "--out", ds, "--sweep", "spacing=0.02:0.22:9")
    _collect(d, "sweep.csv", data / "pair_smax_sweep.csv")

    d, ds = out("single_max")
    run_cli("sense", "--scene", scene("single.toml", SINGLE), "--out", ds, "--max")
    _collect(d, "sense_max.csv", data / "single_emitter_max.csv")

    d, ds = out("dicke_bare")
    run_cli("spectrum", "--scene", scene("dicke_bare.toml", DICKE_BARE),
            "--out", ds, "--grid=-1.5:1.5:300", "--refine")
    _collect(d, "spectrum.csv", data / "dicke_pair_bare.csv")

    d, ds = out("dicke_detuned")
    run_cli("spectrum", "--scene", scene("dicke_detuned.toml", DICKE_DETUNED),
            "--out", ds, "--grid=-1.5:1.5:301", "--refine")
    _collect(d, "spectrum.csv", data / "dicke_pair_detuned.csv")

    d, ds = out("lattice_model_spec")
    run_cli("spectrum", "--scene",
            scene("two_mode_01.toml", TWO_MODE.format(amplitude=0.1)),
            "--out", ds, "--grid=-1:0.5:301", "--refine")
    _collect(d, "spectrum.csv", data / "lattice_model_spectrum.csv")

    for tag, amp in (("d005", 0.05), ("d010", 0.1), ("d020", 0.2)):
        d, ds = out(f"lattice_smax_{tag}")
        run_cli("sweep", "--scene",
                scene(f"two_mode_{tag}.toml", TWO_MODE.format(amplitude=amp)),
                "--out", ds, "--sweep", "spacing=0.25:0.57:8")
        _collect(d, "sweep.csv", data / f"lattice_smax_{tag}.csv")

    controls = {
        "none": 'profile = "none"',
        "sinusoidal": 'profile = "sinusoidal"\namplitude = 0.1',
        "linear": 'profile = "linear"\nspan = 0.1',
    }
    for key, det in controls.items():
        chain = scene(f"chain4_{key}.toml", CHAIN4.format(detuning=det))
        for wrt, metric in (("det", "integrated_detunings"),
                            ("pos", "integrated_positions")):
            d, ds = out(f"site_{wrt}_{key}")
            run_cli("sweep", "--scene", chain, "--out", ds,
                    "--sweep", "spacing=0.1:0.45:8", "--metric", metric)
            _collect(d, "sweep.csv", data / f"site_{wrt}_{key}.csv")

    for tag, gp in (("gp0", 0.0), ("gp001", 0.01), ("gp01", 0.1)):
        text = PAIR + f"\n[imperfections]\ngamma_prime = {gp}\n"
        d, ds = out(f"loss_{tag}")
        run_cli("sweep", "--scene", scene(f"pair_{tag}.toml", text), "--out", ds,
                "--sweep", "spacing=0.02:0.25:10")
        _collect(d, "sweep.csv", data / f"loss_{tag}.csv")

    for tag, sig in (("sigma0", 0.0), ("sigma001", 0.01), ("sigma005", 0.05)):
        text = PAIR + f"\n[imperfections]\nsigma = {sig}\n"
        d, ds = out(f"motion_{tag}")
        run_cli("sweep", "--scene", scene(f"pair_{tag}.toml", text), "--out", ds,
                "--sweep", "spacing=0.02:0.25:10")
        _collect(d, "sweep.csv", data / f"motion_{tag}.csv")

    d, ds = out("missing")
    run_cli("sweep", "--scene", scene("lattice.toml", LATTICE), "--out", ds,
            "--sweep", "missing_fraction=0:0.1:3", "--realizations", "8",
            "--seed", "7", "--threads", "2")
    _collect(d, "sweep.csv", data / "missing_sweep.csv")

    d, ds = out("crossing")
    run_cli("lattice", "--out", ds, "--grid", "0.24:0.33:10",
            "--polarization", "x", "--quality", "sweep")
    _collect(d, "lattice.csv", data / "lattice.csv")

    d, ds = out("size")
    run_cli("sweep", "--scene", scene("lattice055.toml", LATTICE_055),
            "--out", ds, "--sweep", "n=4:10:7")
    _collect(d, "sweep.csv", data / "size_sweep.csv")

    d, ds = out("infinite_ref")
    run_cli("sense", "--scene",
            scene("two_mode_ref.toml", TWO_MODE.format(amplitude=0.1)),
            "--out", ds, "--max")
    _collect(d, "sense_max.csv", data / "infinite_reference.csv")

    return data
