import numpy as np
import pytest

from subwave_figures import REGISTRY
from subwave_figures.csvio import MissingInputError, read_table
from subwave_figures.render import render


@pytest.mark.parametrize("figure_id", sorted(REGISTRY))
def test_figure_renders_and_checks_pass(figure_id, data_dir, tmp_path):
    out = tmp_path / figure_id
    code = render(figure_id, data_dir, out)
    report = (out / f"{figure_id}.report.txt").read_text()
    assert code == 0, report
    assert (out / f"{figure_id}.svg").exists()
    assert (out / f"{figure_id}.png").exists()
    assert "result: PASS" in report
    assert "FAIL" not in report


def test_missing_input_is_an_error(tmp_path):
    out = tmp_path / "out"
    code = render("missing_atoms", tmp_path / "nowhere", out)
    assert code == 2
    assert "ERROR" in (out / "missing_atoms.report.txt").read_text()


def test_empty_csv_is_an_error(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    (src / "missing_sweep.csv").write_text("")
    code = render("missing_atoms", src, tmp_path / "out")
    assert code == 2


def test_failed_checklist_gives_nonzero_exit(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    rows = ["# command: sweep", "x,S_max,stderr",
            "0.0,1.0,0.0", "0.05,2.0,0.001", "0.1,3.0,0.001"]
    (src / "missing_sweep.csv").write_text("\n".join(rows) + "\n")
    out = tmp_path / "out"
    code = render("missing_atoms", src, out)
    assert code == 1
    report = (out / "missing_atoms.report.txt").read_text()
    assert "result: FAIL" in report


def test_read_table_round_trip(data_dir):
    tab = read_table(data_dir / "pair_spectrum.csv")
    assert tab.comments["command"] == "spectrum"
    assert {"Delta_L", "T"} <= set(tab.columns)
    assert np.all(np.diff(tab["Delta_L"]) > 0)


def test_read_table_requires_manifest_block(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(MissingInputError):
        read_table(path)
