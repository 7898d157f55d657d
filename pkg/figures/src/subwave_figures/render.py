"""Rendering driver: load a figure's CSV inputs, draw SVG/PNG panels, run
the qualitative checklist, and write a report file.

A nonzero exit code means a missing input or a failed check.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .csvio import MissingInputError, read_table  # noqa: E402
from .specs import REGISTRY, FigureSpec  # noqa: E402


def render(figure_id: str, in_dir, out_dir) -> int:
    spec: FigureSpec = REGISTRY[figure_id]
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / f"{figure_id}.report.txt"

    try:
        tables = {name: read_table(in_dir / fname)
                  for name, fname in spec.inputs.items()}
    except MissingInputError as exc:
        report_path.write_text(f"{figure_id}: ERROR {exc}\n")
        print(f"{figure_id}: ERROR {exc}", file=sys.stderr)
        return 2

    fig = plt.figure(figsize=(7.0, 3.2) if figure_id in
                     ("site_resolved_sensitivity", "imperfection_sensitivity",
                      "mode_crossing") else (4.6, 3.2), constrained_layout=True)
    spec.draw(tables, fig)
    svg = out_dir / f"{figure_id}.svg"
    png = out_dir / f"{figure_id}.png"
    fig.savefig(svg)
    fig.savefig(png, dpi=160)
    plt.close(fig)

    results = spec.checklist(tables)
    lines = [f"figure: {figure_id}", f"description: {spec.description}",
             f"inputs: {', '.join(str(in_dir / f) for f in spec.inputs.values())}",
             f"images: {svg.name}, {png.name}", ""]
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        ok = ok and res.passed
        detail = f"  [{res.detail}]" if res.detail else ""
        lines.append(f"CHECK {res.name}: {status}{detail}")
    lines.append("")
    lines.append(f"result: {'PASS' if ok else 'FAIL'}")
    report_path.write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if ok else 1


def _main(figure_id: str, argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog=f"fig-{figure_id.replace('_', '-')}",
        description=REGISTRY[figure_id].description)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the input CSV files")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for images and the check report")
    args = parser.parse_args(argv)
    return render(figure_id, args.in_dir, args.out_dir)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="subwave-figures",
        description="Render a figure from subwave CSV output and check its features")
    parser.add_argument("figure", choices=sorted(REGISTRY))
    parser.add_argument("--in", dest="in_dir", required=True)
    parser.add_argument("--out", dest="out_dir", required=True)
    args = parser.parse_args(argv)
    return render(args.figure, args.in_dir, args.out_dir)


def main_two_emitter_spectrum(argv=None):
    return _main("two_emitter_spectrum", argv)


def main_two_emitter_sensitivity(argv=None):
    return _main("two_emitter_sensitivity", argv)


def main_dark_state_spectrum(argv=None):
    return _main("dark_state_spectrum", argv)


def main_lattice_sensitivity(argv=None):
    return _main("lattice_sensitivity", argv)


def main_site_resolved_sensitivity(argv=None):
    return _main("site_resolved_sensitivity", argv)


def main_imperfection_sensitivity(argv=None):
    return _main("imperfection_sensitivity", argv)


def main_missing_atoms(argv=None):
    return _main("missing_atoms", argv)


def main_mode_crossing(argv=None):
    return _main("mode_crossing", argv)


def main_size_scaling(argv=None):
    return _main("size_scaling", argv)


if __name__ == "__main__":
    sys.exit(main())
