"""Request handlers shared by the HTTP service and the command line.

Each handler takes a JSON-compatible dict and returns one, so both front
ends produce byte-identical documents for the same request.  Every reply
carries a "schema": 1 version field.  Library exceptions propagate; the
callers translate them into HTTP 400s or exit code 2.
"""

from __future__ import annotations

import numpy as np

from .. import __version__
from ..dw import euler_solve
from ..expressions import hamiltonian_from_text
from ..loops import (FindSbsOptions, SbsPair, bs_certificates, enclosed_area,
                     find_sbs, holonomy_defect)
from ..quantize import (MomentMap, ScanOptions, enumerate_bs_fibers,
                        hilbert_basis, sbs_fiber_compat)
from ..sections import RhoTangent
from ..serialize import (csv_text, fiber_report_to_doc, field_scan_csv,
                         lifted_to_doc, loop_from_doc, loop_to_doc,
                         loop_trace_csv, pair_from_doc, qpseries_from_doc,
                         qpseries_to_doc, section_from_doc, section_to_doc)
from ..sphere import SphereConfig
from ..structure import coherence_residual, lift
from ..tables import PolyTable
from ..verify import verify_axioms

SCHEMA = 1


def _cfg(req: dict) -> SphereConfig:
    return SphereConfig.calibrated(int(req.get("level", 1)))


def health(req: dict | None = None) -> dict:
    del req
    return {"schema": SCHEMA, "status": "ok", "version": __version__}


def verify_axioms_run(req: dict) -> dict:
    report = verify_axioms(
        level=int(req.get("level", 1)),
        tol=float(req.get("tol", 1e-5)),
        fd_step=float(req.get("fd_step", 1e-4)),
        seed=int(req.get("seed", 0)),
    )
    return {"schema": SCHEMA, **report}


def bs_check(req: dict) -> dict:
    cfg = _cfg(req)
    loop = loop_from_doc(req["loop"])
    defect = holonomy_defect(loop, cfg)
    area = enclosed_area(loop, cfg)
    tol_bs = float(req.get("tol_bs", 1e-6))
    return {
        "schema": SCHEMA,
        "level": cfg.k,
        "defect": defect,
        "area": area,
        "is_bs": bool(abs(defect) <= tol_bs),
        "tol_bs": tol_bs,
    }


def sbs_residual_run(req: dict) -> dict:
    cfg = _cfg(req)
    if req.get("pair") is not None:
        loop = loop_from_doc(req["pair"]["loop"])
        section = section_from_doc(req["pair"]["section"])
    else:
        loop = loop_from_doc(req["loop"])
        section = section_from_doc(req["section"])
    defect, residual = bs_certificates(loop, section, cfg)
    tol = float(req.get("tol", 1e-6))
    tol_bs = float(req.get("tol_bs", 1e-6))
    return {
        "schema": SCHEMA,
        "level": cfg.k,
        "bs_defect": defect,
        "sbs_residual": residual,
        "is_sbs": bool(residual <= tol and abs(defect) <= tol_bs),
        "tol": tol,
        "tol_bs": tol_bs,
    }


def find_sbs_run(req: dict) -> dict:
    cfg = _cfg(req)
    section = section_from_doc(req["section"])
    seed = loop_from_doc(req["seed_loop"])
    opts = FindSbsOptions(
        tol=float(req.get("tol", 1e-6)),
        tol_bs=float(req.get("tol_bs", 1e-6)),
        max_iter=int(req.get("max_iter", 60)),
        n_samples=int(req.get("n_samples", 256)),
    )
    out = find_sbs(section, seed, cfg, opts)
    base = {"schema": SCHEMA, "level": cfg.k, "pair": None, "bs_defect": None,
            "sbs_residual": None, "enclosed_area": None, "report": None}
    if isinstance(out, SbsPair):
        base.update(
            found=True,
            pair={"loop": loop_to_doc(out.loop),
                  "section": section_to_doc(out.section)},
            bs_defect=out.bs_defect,
            sbs_residual=out.sbs_residual,
            enclosed_area=enclosed_area(out.loop, cfg),
        )
        return base
    base.update(found=False, report={
        "reason": out.reason,
        "best_residual": out.best_residual,
        "best_defect": out.best_defect,
        "iterations": out.iterations,
        "zero_rejections": out.zero_rejections,
    })
    return base


def flow_run(req: dict) -> dict:
    from ..dynamics import transport_pair

    cfg = _cfg(req)
    pair = pair_from_doc(req["pair"], cfg)
    text = str(req["hamiltonian"])
    ham = hamiltonian_from_text(text)
    t = float(req.get("t", 1.0))
    steps = int(req.get("steps", 500))
    new_pair, result = transport_pair(ham, pair, t, steps, cfg)
    return {
        "schema": SCHEMA,
        "level": cfg.k,
        "loop": loop_to_doc(new_pair.loop),
        "bs_defect": new_pair.bs_defect,
        "sbs_residual": new_pair.sbs_residual,
        "error_estimate": result.error_estimate,
        "transport": {
            "hamiltonian": text,
            "t": t,
            "steps": steps,
            "base_section": section_to_doc(pair.section),
        },
    }


def lift_run(req: dict) -> dict:
    cfg = _cfg(req)
    loop = loop_from_doc(req["loop"])
    delta = RhoTangent(PolyTable.from_pairs(req["f0"]),
                       PolyTable.from_pairs(req["g0"]))
    v = lift(delta, loop, cfg)
    return {
        "schema": SCHEMA,
        "level": cfg.k,
        "lifted": lifted_to_doc(v, loop),
        "coherence": coherence_residual(v, loop),
    }


def euler_solve_run(req: dict) -> dict:
    series = qpseries_from_doc(req["series"])
    sigma = int(req.get("sigma", 1))
    solved = euler_solve(series, sigma)
    return {"schema": SCHEMA, "sigma": sigma, "series": qpseries_to_doc(solved)}


def enumerate_fibers_run(req: dict) -> dict:
    cfg = _cfg(req)
    spec = req.get("mu") or {}
    mu = MomentMap(
        phi_coeffs=spec.get("phi_coeffs"),
        c_min=spec.get("c_min"),
        c_max=spec.get("c_max"),
    )
    opts = ScanOptions(
        n_levels=int(req.get("n_levels", 512)),
        include_poles=bool(req.get("include_poles", False)),
    )
    report = enumerate_bs_fibers(cfg, mu, opts)
    doc = fiber_report_to_doc(report)
    return {
        "schema": SCHEMA,
        "level": cfg.k,
        "count": doc["count"],
        "entries": doc["entries"],
        "basis": hilbert_basis(report),
        "compat": sbs_fiber_compat(cfg, report),
    }


def loop_trace_run(req: dict) -> dict:
    loop = loop_from_doc(req["loop"])
    return {"schema": SCHEMA, "csv": csv_text(loop_trace_csv, loop)}


def field_scan_run(req: dict) -> dict:
    ham = hamiltonian_from_text(str(req["expression"]))
    half_width = float(req.get("half_width", 2.0))
    n = int(req.get("n", 41))
    xs = np.linspace(-half_width, half_width, n)

    def fn(z):
        return float(np.real(ham.value_chart(np.array(z))))

    return {"schema": SCHEMA, "csv": csv_text(field_scan_csv, fn, xs, xs)}
