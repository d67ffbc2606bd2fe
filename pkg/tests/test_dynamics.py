"""Hamiltonian transport of pairs and the induced field on loop space."""

import numpy as np
import pytest

from sbs_workbench.dynamics import (HamiltonianFn, TransportedRho, flow_points,
                                    hamiltonian_vf, theta_field, transport_pair)
from sbs_workbench.errors import (PoleError, PreconditionError,
                                  StepSizeTooLarge)
from sbs_workbench.loops import Loop, make_pair, sbs_residual
from sbs_workbench.sections import Section
from sbs_workbench.sphere import SphereConfig


def cubic_hamiltonian(seed, scale=0.06):
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((4, 4, 4))
    for i in range(4):
        for j in range(4 - i):
            for l in range(4 - i - j):
                if i + j + l > 0:
                    coeffs[i, j, l] = rng.normal() * scale
    return HamiltonianFn(coeffs)


def test_height_flow_is_rigid_rotation(cfg2):
    # closed-form flow of the height function: z(t) = e^{-2 pi i t} z(0)
    z0 = np.array([0.5 + 0.25j, 1.5 - 0.5j])
    t = 0.3
    z1, jac, drift = flow_points(HamiltonianFn.coordinate("Z"), z0, t, 200, cfg2)
    want = z0 * np.exp(-2j * np.pi * t)
    assert np.max(np.abs(z1 - want)) < 1e-9
    assert drift < 1e-10


def test_height_field_values(cfg2):
    # X_Z at z: the angular field scaled by -2 pi
    from sbs_workbench.sphere import ChartPoint
    z = 0.4 + 0.1j
    u, v = hamiltonian_vf(HamiltonianFn.coordinate("Z"), ChartPoint(z), cfg2)
    want = -2 * np.pi * 1j * z
    assert abs(complex(u, v) - want) < 1e-12


def test_flow_jacobian_matches_fd(cfg2):
    ham = cubic_hamiltonian(0, scale=0.1)
    z0 = np.array([0.6 + 0.2j])
    t, steps, h = 0.5, 200, 1e-6
    _, jac, _ = flow_points(ham, z0, t, steps, cfg2)
    cols = []
    for dz in (h, 1j * h):
        zp, _, _ = flow_points(ham, z0 + dz, t, steps, cfg2)
        zm, _, _ = flow_points(ham, z0 - dz, t, steps, cfg2)
        d = (zp - zm)[0] / (2 * h)
        cols.append((d.real, d.imag))
    fd = np.array([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]])
    assert np.max(np.abs(jac[0] - fd)) < 1e-7


def test_symplectic_determinant_preserved(cfg2):
    # Euclidean det equals the density ratio; the weighted det stays at 1
    ham = cubic_hamiltonian(3, scale=0.1)
    z0 = np.array([0.9 - 0.4j, 0.2 + 1.1j])
    z1, jac, drift = flow_points(ham, z0, 1.0, 400, cfg2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    density = ((1 + np.abs(z0) ** 2) / (1 + np.abs(z1) ** 2)) ** 2
    assert np.max(np.abs(det * density - 1)) < 1e-8
    assert drift < 1e-8


def test_transport_keeps_certificates(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    ham = cubic_hamiltonian(1)
    moved, result = transport_pair(ham, pair, 1.0, 500, cfg2)
    assert abs(moved.bs_defect) < 1e-6
    assert moved.sbs_residual < 1e-6
    assert result.error_estimate < 1e-6


def test_transport_zero_time_is_identity(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    moved, result = transport_pair(HamiltonianFn.coordinate("X"), pair, 0.0, 10, cfg2)
    assert moved is pair
    assert result.error_estimate == 0.0


def test_transport_inverts(cfg2):
    # rho data pushed forward then pulled back matches the original samples
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    ham = cubic_hamiltonian(2)
    moved, _ = transport_pair(ham, pair, 0.5, 200, cfg2)
    back, _ = transport_pair(ham, moved, -0.5, 200, cfg2)
    z = pair.loop.points()[:32]
    cx0, cy0, _ = pair.section.rho_components(z, cfg2)
    cx1, cy1, _ = back.section.rho_components(z, cfg2)
    assert np.max(np.abs(cx1 - cx0)) < 1e-6
    assert np.max(np.abs(cy1 - cy0)) < 1e-6


def test_transport_requires_step_budget(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    with pytest.raises(PreconditionError):
        transport_pair(HamiltonianFn.coordinate("Z"), pair, 1.0, 50, cfg2)


def test_flow_guards_chart_exit(cfg1):
    # strong radial growth drives |z| past the chart guard
    coeffs = np.zeros((2, 2, 2))
    coeffs[1, 1, 1] = 40.0
    ham = HamiltonianFn(coeffs)
    with pytest.raises((PoleError, StepSizeTooLarge)):
        flow_points(ham, np.array([1.0 + 0.9j]), 4.0, 400, cfg1)


def test_theta_height_on_latitude(cfg2):
    # the latitude is an orbit of the height flow, so Theta(Z) closes exactly
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    component, report = theta_field(HamiltonianFn.coordinate("Z"), pair, cfg2)
    assert report.sup_residual < 1e-9
    assert component.norm() < 1e-12  # Z is constant on the loop


def test_theta_formula_second_order(cfg2):
    ham = cubic_hamiltonian(5, scale=0.12)
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    sups = []
    for h in (2e-3, 1e-3):
        _, report = theta_field(ham, pair, cfg2, h=h)
        sups.append(report.sup_residual)
    assert sups[1] < 1e-4
    assert sups[1] < sups[0] / 2.5  # about h^2


def test_theta_needs_table_carrier(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    moved, _ = transport_pair(cubic_hamiltonian(1), pair, 0.2, 100, cfg2)
    with pytest.raises(PreconditionError):
        theta_field(HamiltonianFn.coordinate("Z"), moved, cfg2)


def test_transported_carrier_feeds_certificates(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    carrier = TransportedRho(pair.section, HamiltonianFn.coordinate("Z"), 0.25, 100)
    # the rotated latitude is the same circle; residual should stay closed
    assert sbs_residual(pair.loop, carrier, cfg2) < 1e-10


def test_hamiltonian_value_chart_matches_ambient(cfg1, rng):
    ham = cubic_hamiltonian(7, scale=0.3)
    z = rng.normal(size=6) + 1j * rng.normal(size=6)
    from sbs_workbench.sphere import ChartPoint
    for zz in z:
        X, Y, Z = ChartPoint(complex(zz)).ambient()
        direct = ham.value_ambient(X, Y, Z)
        chart = ham.value_chart(np.array(complex(zz)))
        assert abs(direct - chart) < 1e-12
