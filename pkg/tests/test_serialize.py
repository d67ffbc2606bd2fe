"""Round trips for the JSON document shapes and CSV plot exports."""

import csv
import io

import numpy as np
import pytest

from sbs_workbench import serialize
from sbs_workbench.dw import QPSeries
from sbs_workbench.loops import Loop, make_pair
from sbs_workbench.quantize import (MomentMap, ScanOptions,
                                    enumerate_bs_fibers)
from sbs_workbench.sections import RhoTangent, Section
from sbs_workbench.structure import lift
from sbs_workbench.tables import PolyTable
from sbs_workbench.verify import random_section


def test_section_roundtrip(rng):
    sec = random_section(rng)
    doc = serialize.section_to_doc(sec)
    back = serialize.section_from_doc(doc)
    assert back.is_global == sec.is_global
    assert back.region_radius == sec.region_radius
    assert (back.table + (-sec.table)).sup_bound(2.0) == 0.0


def test_section_doc_shape():
    doc = serialize.section_to_doc(Section.monomial(2))
    assert set(doc) == {"degree", "global", "coeffs", "region_radius"}
    assert doc["degree"] == 2
    assert doc["global"] is True
    assert doc["coeffs"] == [[2, 0, 1.0, 0.0]]


def test_section_degree_mismatch_rejected():
    doc = serialize.section_to_doc(Section.monomial(1))
    doc["degree"] = 3
    with pytest.raises(ValueError, match="degree"):
        serialize.section_from_doc(doc)


def test_loop_roundtrip():
    loop = Loop.circle(1.3)
    coeffs = loop.coeffs.copy()
    coeffs[loop.J + 3] = 0.05 + 0.02j
    deformed = Loop(coeffs, loop.n_samples)
    back = serialize.loop_from_doc(serialize.loop_to_doc(deformed))
    assert back.J == deformed.J
    assert back.n_samples == deformed.n_samples
    assert np.allclose(back.coeffs, deformed.coeffs)


def test_loop_doc_rejects_out_of_band_mode():
    doc = serialize.loop_to_doc(Loop.circle(1.0))
    doc["coeffs"].append([doc["J"] + 1, 0.1, 0.0])
    with pytest.raises(ValueError, match="mode"):
        serialize.loop_from_doc(doc)


def test_pair_roundtrip_recomputes_certificates(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    doc = serialize.pair_to_doc(pair)
    back = serialize.pair_from_doc(doc, cfg2)
    assert abs(back.bs_defect - pair.bs_defect) < 1e-14
    assert abs(back.sbs_residual - pair.sbs_residual) < 1e-14


def test_qpseries_roundtrip():
    series = QPSeries.harmonic(1, 6, 8, 2, 3, "sin", 1.5) \
        + QPSeries.harmonic(1, 6, 8, 0, 0, "cos", -0.25)
    back = serialize.qpseries_from_doc(serialize.qpseries_to_doc(series))
    assert back.n == series.n and back.Np == series.Np and back.Nq == series.Nq
    assert sorted(back.to_terms()) == sorted(series.to_terms())


def test_lifted_roundtrip(cfg2):
    loop = Loop.circle(1.0)
    delta = RhoTangent(PolyTable.coord_x(), PolyTable.constant(0.5))
    v = lift(delta, loop, cfg2)
    doc = serialize.lifted_to_doc(v, loop)
    back, back_loop = serialize.lifted_from_doc(doc, cfg2)
    assert np.allclose(back_loop.coeffs, loop.coeffs)
    assert (back.delta.f0 + (-delta.f0)).sup_bound(1.5) == 0.0
    assert back.loop_component.norm() == pytest.approx(v.loop_component.norm())


def test_dumps_is_deterministic():
    doc = {"b": 1, "a": [1, 2], "c": {"y": 0.5, "x": None}}
    assert serialize.dumps(doc) == serialize.dumps(dict(reversed(doc.items())))
    assert serialize.dumps(doc).endswith("\n")


def test_loop_trace_csv_columns():
    text = serialize.csv_text(serialize.loop_trace_csv, Loop.circle(1.0))
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["theta", "x", "y", "Z"]
    assert len(rows) == 1 + Loop.circle(1.0).n_samples
    first = [float(v) for v in rows[1]]
    assert abs(first[1] - 1.0) < 1e-12 and abs(first[3]) < 1e-12


def test_field_scan_csv_columns():
    xs = ys = np.linspace(-1, 1, 5)
    text = serialize.csv_text(serialize.field_scan_csv,
                              lambda z: abs(z) ** 2, xs, ys)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["x", "y", "value"]
    assert len(rows) == 1 + 25
    x, y, v = (float(c) for c in rows[1])
    assert abs(v - (x * x + y * y)) < 1e-12


def test_fiber_report_csv_and_doc(cfg3):
    report = enumerate_bs_fibers(cfg3, MomentMap(),
                                 ScanOptions(include_poles=True))
    text = serialize.csv_text(serialize.fiber_report_csv, report)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["level", "r2", "area", "defect"]
    assert len(rows) == 1 + report.count

    doc = serialize.fiber_report_to_doc(report)
    assert doc["count"] == report.count
    poles = [e for e in doc["entries"] if e["loop"] is None]
    assert len(poles) == 2
    assert any(e["r2"] is None for e in poles)
