"""HTTP layer: thin adapters over the shared handlers."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sbs_workbench import __version__
from sbs_workbench.loops import Loop, make_pair
from sbs_workbench.sections import Section
from sbs_workbench.serialize import loop_to_doc, pair_to_doc, section_to_doc
from sbs_workbench.service import create_app
from sbs_workbench.service import handlers
from sbs_workbench.sphere import SphereConfig


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"schema": 1, "status": "ok", "version": __version__}


def test_bs_check_matches_handler(client):
    doc = {"level": 2, "loop": loop_to_doc(Loop.circle(1.0))}
    r = client.post("/bs-check", json=doc)
    assert r.status_code == 200
    assert r.json() == handlers.bs_check(doc)
    assert r.json()["is_bs"] is True
    assert abs(r.json()["area"] - 1.0) < 1e-9


def test_bs_check_equator_level_one(client):
    doc = {"level": 1, "loop": loop_to_doc(Loop.circle(1.0))}
    body = client.post("/bs-check", json=doc).json()
    assert body["is_bs"] is False
    assert abs(abs(body["defect"]) - np.pi) < 1e-9


def test_sbs_residual_from_pair(client):
    cfg = SphereConfig.calibrated(2)
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg)
    doc = {"level": 2, "pair": pair_to_doc(pair)}
    body = client.post("/sbs-residual", json=doc).json()
    assert body == handlers.sbs_residual_run(doc)
    assert body["is_sbs"] is True
    assert body["sbs_residual"] < 1e-10


def test_sbs_residual_from_parts(client):
    doc = {"level": 2,
           "loop": loop_to_doc(Loop.circle(2.0)),
           "section": section_to_doc(Section.monomial(1))}
    body = client.post("/sbs-residual", json=doc).json()
    assert body["is_sbs"] is False
    assert body["sbs_residual"] > 1e-3


def test_find_sbs(client):
    doc = {"level": 2, "section": section_to_doc(Section.monomial(1)),
           "seed_loop": loop_to_doc(Loop.circle(1.07))}
    body = client.post("/find-sbs", json=doc).json()
    assert body == handlers.find_sbs_run(doc)
    assert body["found"] is True
    assert body["sbs_residual"] < 1e-6
    assert abs(body["enclosed_area"] - 1.0) < 1e-6


def test_flow_preserves_certificates(client):
    cfg = SphereConfig.calibrated(2)
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg)
    doc = {"level": 2, "pair": pair_to_doc(pair),
           "hamiltonian": "Z", "t": 0.25, "steps": 200}
    body = client.post("/flow", json=doc).json()
    assert body == handlers.flow_run(doc)
    assert body["bs_defect"] < 1e-8
    assert body["sbs_residual"] < 1e-8
    assert body["transport"]["hamiltonian"] == "Z"


def test_lift(client):
    # x = (z + zbar)/2 as a real coefficient table
    doc = {"level": 2, "loop": loop_to_doc(Loop.circle(1.0)),
           "f0": [[1, 0, 0.5, 0.0], [0, 1, 0.5, 0.0]],
           "g0": [[0, 0, 0.1, 0.0]]}
    body = client.post("/lift", json=doc).json()
    assert body == handlers.lift_run(doc)
    assert body["coherence"] < 1e-12
    assert body["lifted"]["loop"] == doc["loop"]


def test_euler_solve(client):
    series = {"n": 1, "Np": 4, "Nq": 4, "terms": [[2, 1, "cos", 3.0]]}
    body = client.post("/euler-solve",
                       json={"series": series, "sigma": 1}).json()
    assert body == handlers.euler_solve_run({"series": series, "sigma": 1})
    assert body["series"]["terms"] == [[2, 1, "cos", 1.0]]
    # the calibrated sign leaves the p^2 slab dividing by 1
    body = client.post("/euler-solve",
                       json={"series": series, "sigma": -1}).json()
    assert body["series"]["terms"] == [[2, 1, "cos", 3.0]]


def test_enumerate_fibers(client):
    doc = {"level": 3}
    body = client.post("/enumerate-fibers", json=doc).json()
    assert body == handlers.enumerate_fibers_run(doc)
    assert body["count"] == 2
    assert [round(e["r2"], 9) for e in body["entries"]] == [2.0, 0.5]
    assert body["basis"] == ["<S_1>", "<S_2>"]
    for row in body["compat"]:
        assert row["residual"] < 1e-8


def test_csv_exports(client):
    body = client.post("/export/loop-trace",
                       json={"loop": loop_to_doc(Loop.circle(1.0))}).json()
    assert body["csv"].splitlines()[0] == "theta,x,y,Z"

    body = client.post("/export/field-scan",
                       json={"level": 2, "expression": "X^2 + Z",
                             "x_min": -1, "x_max": 1, "y_min": -1, "y_max": 1,
                             "n": 6}).json()
    lines = body["csv"].splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == 1 + 36


def test_bad_expression_is_400(client):
    r = client.post("/export/field-scan",
                    json={"level": 2, "expression": "X + ",
                          "x_min": -1, "x_max": 1, "y_min": -1, "y_max": 1,
                          "n": 4})
    assert r.status_code == 400
    err = r.json()["error"]
    assert err["type"] == "ExpressionSyntaxError"
    assert "offset 4" in err["message"]


def test_degree_mismatch_is_400(client):
    sec = section_to_doc(Section.monomial(1))
    sec["degree"] = 5
    r = client.post("/sbs-residual",
                    json={"level": 2, "loop": loop_to_doc(Loop.circle(1.0)),
                          "section": sec})
    assert r.status_code == 400
    assert r.json()["error"]["type"] == "ValueError"


def test_missing_field_is_422(client):
    r = client.post("/bs-check", json={"level": 2})
    assert r.status_code == 422
    assert r.json()["detail"][0]["loc"][-1] == "loop"


def test_verify_axioms_endpoint(client):
    body = client.post("/verify-axioms", json={"level": 1}).json()
    assert body == handlers.verify_axioms_run({"level": 1})
    assert body["all_pass"] is True
