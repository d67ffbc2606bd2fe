"""One-call verification suite across the whole workbench.

Each check produces a named residual and a bound; the suite passes when
every row does.  Residual bounds follow the per-module contracts, with
the finite-difference ones scaled from `tol`.  Seeded randomness makes
two runs with the same seed byte-identical.
"""

from __future__ import annotations

import numpy as np

from . import dw
from ._threads import ordered_map
from .dynamics import HamiltonianFn, theta_field
from .loops import Loop, enclosed_area, holonomy_defect, make_pair, sbs_residual, tau
from .sections import (RhoTangent, Section, ratio_constancy, rho_at,
                       rho_identity_check, rho_rotate, winding_integrality)
from .sphere import ChartPoint, GridSpec, SphereConfig, curvature_residual
from .structure import apply_I, coherence_residual, dp_project, lift
from .tables import PolyTable


def random_real_table(rng: np.random.Generator, degree: int = 2,
                      scale: float = 0.3) -> PolyTable:
    """Random real-valued polynomial in the chart coordinates."""
    x = PolyTable.coord_x()
    y = PolyTable.coord_y()
    out = PolyTable.constant(rng.normal() * scale)
    xp = PolyTable.constant(1.0)
    for i in range(degree + 1):
        term = xp
        for j in range(degree + 1 - i):
            if i + j > 0:
                out = out + term * (rng.normal() * scale)
            term = term * y
        xp = xp * x
    return out


def random_section(rng: np.random.Generator, degree: int = 3,
                   amplitude: float = 0.5, region_radius: float = 4.0) -> Section:
    """Zero-free random section: a constant plus a tamed perturbation.

    The perturbation's sup over the region is scaled to `amplitude` < 1,
    so |f| stays bounded away from zero on the whole working region.
    """
    pert = PolyTable.zero()
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            if a + b > 0:
                pert = pert + PolyTable.monomial(
                    a, b, complex(rng.normal(), rng.normal()))
    bound = pert.sup_bound(region_radius)
    if bound > 0:
        pert = pert * (amplitude / bound)
    c0 = complex(rng.normal(), rng.normal())
    while abs(c0) < 0.3:
        c0 = complex(rng.normal(), rng.normal())
    table = (PolyTable.constant(1.0) + pert) * c0
    return Section(table, region_radius=region_radius)


def _row(name: str, residual: float, bound: float) -> dict:
    residual = float(residual)
    return {"name": name, "residual": residual, "bound": float(bound),
            "pass": bool(residual <= bound)}


def verify_axioms(level: int = 1, tol: float = 1e-5, fd_step: float = 1e-4,
                  seed: int = 0) -> dict:
    """Run the identity suite at level k and report named residuals."""
    cfg = SphereConfig.calibrated(level)
    rng = np.random.default_rng(seed)
    section = random_section(rng)
    grid = GridSpec.square(half_width=1.6, n=8, fd_step=fd_step)
    delta = RhoTangent(random_real_table(rng), random_real_table(rng))
    checks: list = []

    def curvature():
        res = curvature_residual(cfg, GridSpec.square(2.0, 12, fd_step))
        return _row("curvature", res, max(1e-4, 10 * tol))

    def rho_identity():
        im_res, re_res = rho_identity_check(section, cfg, grid)
        return [_row("rho_identity_im", im_res, tol),
                _row("rho_identity_re", re_res, tol)]

    def ratio():
        small = GridSpec.square(half_width=1.0, n=4, fd_step=fd_step)
        other = section.scaled(1.7 - 0.4j)
        ok_prop, _ = ratio_constancy(section, other, cfg, small)
        shifted = Section(section.table + PolyTable.monomial(1, 0, 0.5))
        ok_diff, _ = ratio_constancy(section, shifted, cfg, small)
        return _row("ratio_constancy", 0.0 if (ok_prop and not ok_diff) else 1.0, 0.5)

    def winding():
        zero_sec = Section(PolyTable.monomial(1, 0) * (1.0 + 0.0j)
                           + PolyTable.monomial(2, 1, 0.05))
        # curvature feeds the integral at rate 2*pi*omega, so keep the disc tiny
        radius = 1e-3
        m, dist = winding_integrality(
            lambda pt: rho_at(zero_sec, pt, cfg).form, ChartPoint(0j), radius)
        return _row("winding_integrality", abs(m - 1) + dist,
                    max(tol, 2 * level * radius ** 2))

    def loops_suite():
        rows = []
        if level >= 2:
            r = np.sqrt(1.0 / (level - 1))
            lat = Loop.circle(r)
            rows.append(_row("bs_latitude_defect",
                             abs(holonomy_defect(lat, cfg)), 1e-8))
            rows.append(_row("bs_latitude_area",
                             abs(enclosed_area(lat, cfg) - 1.0), 1e-8))
            mono = Section.monomial(1)
            rows.append(_row("sbs_latitude_residual",
                             sbs_residual(lat, mono, cfg), 1e-10))
            pair = make_pair(lat, mono, cfg)
            rows.append(_row("tau_vanishes", tau(pair, cfg).tangent.norm(), 1e-9))
            _, rep = theta_field(HamiltonianFn.coordinate("Z"), pair, cfg)
            rows.append(_row("theta_consistency", rep.sup_residual, 1e-4))
        else:
            eq = Loop.circle(1.0)
            rows.append(_row("equator_half_defect",
                             abs(abs(holonomy_defect(eq, cfg)) - np.pi), 1e-8))
            rows.append(_row("equator_area",
                             abs(enclosed_area(eq, cfg) - 0.5), 1e-8))
        return rows

    def euler():
        series = dw.QPSeries.zero(1, 4, 4)
        for m in range(5):
            for j in range(5):
                for kind in ("cos", "sin"):
                    series = series + dw.QPSeries.harmonic(
                        1, 4, 4, m, j, kind, rng.normal())
        back = dw.euler_solve(dw.apply_euler(series, 1), 1)
        rows = [_row("euler_round_trip",
                     float(np.max(np.abs(back.coeffs - series.coeffs))), 1e-12)]
        psi = dw.QPSeries.harmonic(1, 6, 8, 2, 1, "cos", 1.0)
        res = dw.lie_derivative_residual(
            dw.euler_solve(psi, dw.SIGMA_MODEL), psi, dw.annulus_grid(1))
        rows.append(_row("lie_residual_model", res, 1e-8))
        return rows

    def structure_suite():
        loop = Loop.circle(1.0)
        v = lift(delta, loop, cfg)
        w = apply_I(apply_I(v, loop, cfg), loop, cfg) + v
        res_sq = max(w.loop_component.norm(),
                     w.delta.f0.sup_bound(1.0), w.delta.g0.sup_bound(1.0))
        rows = [_row("i_squared", res_sq, 1e-12)]
        diff = dp_project(apply_I(v, loop, cfg)) + (-rho_rotate(dp_project(v)))
        res_rot = max(diff.f0.sup_bound(1.0), diff.g0.sup_bound(1.0))
        rows.append(_row("dp_rotate_compat", res_rot, 1e-14))
        rows.append(_row("lift_coherence", coherence_residual(v, loop), 1e-12))
        return rows

    groups = ordered_map(lambda f: f(), [curvature, rho_identity, ratio, winding,
                                         loops_suite, euler, structure_suite])
    for g in groups:
        checks.extend(g if isinstance(g, list) else [g])

    return {
        "level": level,
        "tol": tol,
        "fd_step": fd_step,
        "seed": seed,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }
