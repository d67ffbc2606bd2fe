"""Command-line front end, driven in-process through main(argv)."""

import json

import numpy as np
import pytest

from sbs_workbench.cli import main
from sbs_workbench.loops import Loop, make_pair
from sbs_workbench.sections import Section
from sbs_workbench.serialize import (loop_to_doc, pair_to_doc, section_to_doc,
                                     write_json)
from sbs_workbench.sphere import SphereConfig


@pytest.fixture
def files(tmp_path):
    """Loop, section, pair and series documents on disk."""
    paths = {}

    def put(name, doc):
        p = tmp_path / name
        write_json(p, doc)
        paths[name] = str(p)
        return paths[name]

    cfg = SphereConfig.calibrated(2)
    equator = Loop.circle(1.0)
    put("equator.json", loop_to_doc(equator))
    put("z1.json", section_to_doc(Section.monomial(1)))
    put("pair.json", pair_to_doc(make_pair(equator, Section.monomial(1), cfg)))
    put("seed.json", loop_to_doc(Loop.circle(1.05)))
    put("delta.json", {"f0": [[1, 0, 0.5, 0.0], [0, 1, 0.5, 0.0]],
                       "g0": [[0, 0, 0.1, 0.0]]})
    put("series.json", {"n": 1, "Np": 4, "Nq": 4,
                        "terms": [[2, 1, "cos", 3.0]]})
    paths["dir"] = str(tmp_path)
    return paths


def run(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_bs_check_pass_and_fail(capsys, files):
    code, doc = run(capsys, ["bs-check", "--level", "2",
                             "--loop", files["equator.json"]])
    assert code == 0
    assert doc["is_bs"] is True

    code, doc = run(capsys, ["bs-check", "--level", "1",
                             "--loop", files["equator.json"]])
    assert code == 2
    assert abs(abs(doc["defect"]) - np.pi) < 1e-9


def test_verify_axioms_exit_zero(capsys):
    code, doc = run(capsys, ["verify-axioms", "--level", "1"])
    assert code == 0
    assert doc["all_pass"] is True


def test_sbs_residual_pair(capsys, files):
    code, doc = run(capsys, ["sbs-residual", "--level", "2",
                             "--pair", files["pair.json"]])
    assert code == 0
    assert doc["sbs_residual"] < 1e-10


def test_sbs_residual_needs_inputs(capsys, files):
    code, doc = run(capsys, ["sbs-residual", "--level", "2",
                             "--loop", files["equator.json"]])
    assert code == 2
    assert doc["error"]["type"] == "ValueError"


def test_find_sbs_recovers_latitude(capsys, files):
    code, doc = run(capsys, ["find-sbs", "--level", "2",
                             "--section", files["z1.json"],
                             "--seed-loop", files["seed.json"]])
    assert code == 0
    assert doc["found"] is True
    assert doc["sbs_residual"] < 1e-6
    assert abs(doc["enclosed_area"] - 1.0) < 1e-6


def test_flow_writes_artifacts(capsys, files, tmp_path):
    out = tmp_path / "artifacts"
    argv = ["flow", "--level", "2", "--pair", files["pair.json"],
            "--hamiltonian", "Z", "--t", "0.25", "--steps", "200",
            "--out", str(out)]
    code, doc = run(capsys, argv)
    assert code == 0
    assert doc["sbs_residual"] < 1e-8
    on_disk = json.loads((out / "flow.json").read_text())
    assert on_disk == doc


def test_lift(capsys, files):
    code, doc = run(capsys, ["lift", "--level", "2",
                             "--loop", files["equator.json"],
                             "--delta", files["delta.json"]])
    assert code == 0
    assert doc["coherence"] < 1e-12


def test_euler_solve(capsys, files):
    code, doc = run(capsys, ["euler-solve", "--series", files["series.json"]])
    assert code == 0
    assert doc["series"]["terms"] == [[2, 1, "cos", 1.0]]


def test_enumerate_fibers_with_csv(capsys, files, tmp_path):
    out = tmp_path / "fibers_out"
    code, doc = run(capsys, ["enumerate-fibers", "--level", "3",
                             "--out", str(out)])
    assert code == 0
    assert doc["count"] == 2
    lines = (out / "fibers.csv").read_text().splitlines()
    assert lines[0] == "level,r2,area,defect"
    assert len(lines) == 3


def test_export_plot_loop_trace(capsys, files, tmp_path):
    out = tmp_path / "plots"
    code, doc = run(capsys, ["export-plot", "--loop", files["equator.json"],
                             "--out", str(out)])
    assert code == 0
    text = (out / "loop_trace.csv").read_bytes().decode()
    assert text == doc["csv"]
    assert text.splitlines()[0] == "theta,x,y,Z"


def test_export_plot_field_scan(capsys, files):
    code, doc = run(capsys, ["export-plot", "--expression", "Z",
                             "--n", "5"])
    assert code == 0
    assert doc["csv"].splitlines()[0] == "x,y,value"
    assert len(doc["csv"].splitlines()) == 26


def test_missing_file_reports_error(capsys, files):
    code, doc = run(capsys, ["bs-check", "--level", "2",
                             "--loop", files["dir"] + "/absent.json"])
    assert code == 2
    assert doc["error"]["type"] == "FileNotFoundError"


def test_bad_expression_reports_offset(capsys, files):
    code, doc = run(capsys, ["export-plot", "--expression", "X + "])
    assert code == 2
    assert doc["error"]["type"] == "ExpressionSyntaxError"
    assert "offset 4" in doc["error"]["message"]


def test_output_is_deterministic(capsys, files):
    argv = ["enumerate-fibers", "--level", "4"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second
