"""Enumerating integer-area latitude fibers of monotone moment maps."""

import math

import numpy as np
import pytest

from sbs_workbench.quantize import (BsFiberReport, MomentMap, ScanOptions,
                                    cap_area, enumerate_bs_fibers,
                                    hilbert_basis, sbs_fiber_compat)
from sbs_workbench.sphere import SphereConfig


def test_moment_map_rejects_nonmonotone():
    with pytest.raises(ValueError):
        MomentMap(phi_coeffs=(0.0, 0.0, 1.0))  # Z^2 folds at Z = 0


def test_moment_map_invert():
    mu = MomentMap(phi_coeffs=(0.5, 1.0, 0.0, 0.25))  # 0.5 + Z + Z^3/4
    for Z in (-0.9, -0.3, 0.0, 0.4, 1.0):
        assert abs(mu.invert(mu.value(Z)) - Z) < 1e-12


def test_moment_map_range_guard():
    with pytest.raises(ValueError):
        MomentMap(c_min=-2.0, c_max=0.5)


def test_cap_area_endpoints(cfg3):
    assert cap_area(cfg3, 1.0) == 0.0
    assert cap_area(cfg3, -1.0) == 3.0
    # half the total at the equator
    assert cap_area(cfg3, 0.0) == 1.5


@pytest.mark.parametrize("k", [1, 2, 3, 4, 6])
def test_fiber_count_is_k_minus_one(k):
    cfg = SphereConfig.calibrated(k)
    report = enumerate_bs_fibers(cfg, MomentMap())
    assert report.count == max(k - 1, 0)
    expected_r2 = [m / (k - m) for m in range(k - 1, 0, -1)]
    got_r2 = [e.r2 for e in report.entries]
    assert np.allclose(got_r2, expected_r2, atol=1e-9)
    for e in report.entries:
        assert abs(e.defect) < 1e-8
        assert abs(e.area - round(e.area)) < 1e-8
        assert e.loop is not None


def test_entries_sorted_by_level(cfg3):
    report = enumerate_bs_fibers(cfg3, MomentMap())
    levels = [e.level for e in report.entries]
    assert levels == sorted(levels)


def test_include_poles_adds_loopless_entries(cfg3):
    report = enumerate_bs_fibers(cfg3, MomentMap(),
                                 ScanOptions(include_poles=True))
    assert report.count == 4
    poleless = [e for e in report.entries if e.loop is None]
    assert len(poleless) == 2
    assert sorted(e.area for e in poleless) == [0.0, 3.0]
    assert any(math.isinf(e.r2) for e in poleless)


def test_reparametrization_preserves_count(cfg3):
    mu = MomentMap(phi_coeffs=(1.0, 2.0, 0.0, 0.5))  # 1 + 2Z + Z^3/2
    plain = enumerate_bs_fibers(cfg3, MomentMap())
    warped = enumerate_bs_fibers(cfg3, mu)
    assert warped.count == plain.count
    # same latitudes, relabelled levels
    assert np.allclose([e.r2 for e in warped.entries],
                       [e.r2 for e in plain.entries], atol=1e-9)
    for e in warped.entries:
        Z = (1.0 - e.r2) / (1.0 + e.r2)
        assert abs(e.level - mu.value(Z)) < 1e-9


def test_restricted_window_drops_fibers(cfg3):
    # heights of the two fibers are 1/3 and -1/3; cut below 0
    report = enumerate_bs_fibers(cfg3, MomentMap(c_min=0.0, c_max=1.0))
    assert report.count == 1
    assert abs(report.entries[0].r2 - 0.5) < 1e-9


def test_hilbert_basis_labels(cfg3):
    report = enumerate_bs_fibers(cfg3, MomentMap())
    assert hilbert_basis(report) == ["<S_1>", "<S_2>"]
    assert hilbert_basis(BsFiberReport.build([])) == []


@pytest.mark.parametrize("k", [2, 3, 4])
def test_sbs_compat_rows(k):
    cfg = SphereConfig.calibrated(k)
    report = enumerate_bs_fibers(cfg, MomentMap())
    rows = sbs_fiber_compat(cfg, report)
    assert len(rows) == k - 1
    assert sorted(r["m"] for r in rows) == list(range(1, k))
    for r in rows:
        assert r["residual"] < 1e-8
