"""File formats: JSON documents for the core values, CSV for plot data.

Document shapes are frozen (tests pin them):

    section  {"degree": D, "global": bool, "coeffs": [[a, b, re, im], ...],
              "region_radius": R}
    loop     {"J": J, "coeffs": [[j, re, im], ...], "samples": N}
    pair     {"loop": {...}, "section": {...}}
    series   {"n": n, "Np": Np, "Nq": Nq, "terms": [[m..., j, kind, value], ...]}
    lifted   {"f0": [[a, b, re, im], ...], "g0": [...], "loop": {...}}

JSON is emitted sorted and indented so identical values produce identical
bytes.  CSV exports carry plot columns only, no metadata.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .loops import Loop, SbsPair, make_pair
from .sections import RhoTangent, Section
from .structure import LiftedVector, lift
from .tables import PolyTable


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path, doc):
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- sections --------------------------------------------------------------------

def section_to_doc(section: Section) -> dict:
    return {
        "degree": section.table.trim().degree,
        "global": section.is_global,
        "coeffs": section.table.to_pairs(),
        "region_radius": section.region_radius,
    }


def section_from_doc(doc: dict) -> Section:
    table = PolyTable.from_pairs(doc["coeffs"])
    section = Section(table, is_global=bool(doc["global"]),
                      region_radius=float(doc["region_radius"]))
    stated = int(doc["degree"])
    if stated != table.trim().degree:
        raise ValueError(
            f"document claims degree {stated}, coefficients give "
            f"{table.trim().degree}")
    return section


# -- loops -----------------------------------------------------------------------

def loop_to_doc(loop: Loop) -> dict:
    coeffs = []
    for idx, c in enumerate(loop.coeffs):
        if c != 0:
            coeffs.append([idx - loop.J, float(c.real), float(c.imag)])
    return {"J": loop.J, "coeffs": coeffs, "samples": loop.n_samples}


def loop_from_doc(doc: dict) -> Loop:
    J = int(doc["J"])
    coeffs = np.zeros(2 * J + 1, dtype=complex)
    for j, re, im in doc["coeffs"]:
        j = int(j)
        if abs(j) > J:
            raise ValueError(f"mode {j} outside |j| <= {J}")
        coeffs[j + J] = complex(re, im)
    return Loop(coeffs, int(doc["samples"]))


# -- pairs -----------------------------------------------------------------------

def pair_to_doc(pair: SbsPair) -> dict:
    if not isinstance(pair.section, Section):
        raise ValueError("only table-backed sections serialize")
    return {"loop": loop_to_doc(pair.loop), "section": section_to_doc(pair.section)}


def pair_from_doc(doc: dict, cfg) -> SbsPair:
    """Certificates are recomputed on load rather than trusted from the file."""
    loop = loop_from_doc(doc["loop"])
    section = section_from_doc(doc["section"])
    return make_pair(loop, section, cfg)


# -- annulus series ----------------------------------------------------------------

def qpseries_to_doc(series) -> dict:
    return {"n": series.n, "Np": series.Np, "Nq": series.Nq,
            "terms": series.to_terms()}


def qpseries_from_doc(doc: dict):
    from .dw import QPSeries
    return QPSeries.from_terms(int(doc["n"]), int(doc["Np"]), int(doc["Nq"]),
                               doc["terms"])


# -- lifted vectors -----------------------------------------------------------------

def lifted_to_doc(v: LiftedVector, loop: Loop) -> dict:
    return {
        "f0": v.delta.f0.to_pairs(),
        "g0": v.delta.g0.to_pairs(),
        "loop": loop_to_doc(loop),
    }


def lifted_from_doc(doc: dict, cfg) -> tuple[LiftedVector, Loop]:
    loop = loop_from_doc(doc["loop"])
    delta = RhoTangent(PolyTable.from_pairs(doc["f0"]),
                       PolyTable.from_pairs(doc["g0"]))
    return lift(delta, loop, cfg), loop


# -- CSV plot exports ----------------------------------------------------------------

def _write_rows(target, header, rows):
    own = isinstance(target, (str, bytes))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if own:
            fh.close()


def loop_trace_csv(loop: Loop, target) -> None:
    """Columns theta, x, y, Z: chart position plus ambient height."""
    thetas = loop.thetas()
    z = loop.points()
    r2 = np.abs(z) ** 2
    Z = (1 - r2) / (1 + r2)
    rows = [[f"{t:.12g}", f"{p.real:.12g}", f"{p.imag:.12g}", f"{h:.12g}"]
            for t, p, h in zip(thetas, z, Z)]
    _write_rows(target, ["theta", "x", "y", "Z"], rows)


def field_scan_csv(fn, xs, ys, target) -> None:
    """Scan a callable over a chart grid; columns x, y, value."""
    rows = []
    for x in xs:
        for y in ys:
            rows.append([f"{x:.12g}", f"{y:.12g}", f"{fn(complex(x, y)):.12g}"])
    _write_rows(target, ["x", "y", "value"], rows)


def fiber_report_csv(report, target) -> None:
    rows = [[f"{e.level:.12g}", f"{e.r2:.12g}", f"{e.area:.12g}",
             f"{e.defect:.12g}"] for e in report.entries]
    _write_rows(target, ["level", "r2", "area", "defect"], rows)


def fiber_report_to_doc(report) -> dict:
    entries = []
    for e in report.entries:
        r2 = e.r2 if np.isfinite(e.r2) else None  # pole entries have no radius
        row = {"level": e.level, "r2": r2, "area": e.area, "defect": e.defect}
        row["loop"] = None if e.loop is None else loop_to_doc(e.loop)
        entries.append(row)
    return {"count": report.count, "entries": entries}


def csv_text(writer_fn, *args) -> str:
    buf = io.StringIO()
    writer_fn(*args, buf)
    return buf.getvalue()
