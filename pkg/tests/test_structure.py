"""The lifted complex structure on tangent data over a loop."""

import numpy as np
import pytest

from sbs_workbench.dynamics import HamiltonianFn
from sbs_workbench.errors import PreconditionError
from sbs_workbench.loops import Loop, make_pair
from sbs_workbench.sections import RhoTangent, Section, rho_rotate
from sbs_workbench.structure import (apply_I, coherence_residual,
                                     commuting_level_check, dp_project,
                                     fiber_tangent_check, lift, uf_membership)
from sbs_workbench.tables import PolyTable
from sbs_workbench.verify import random_real_table


def tangent_sup(delta, radius=1.0):
    return max(delta.f0.sup_bound(radius), delta.g0.sup_bound(radius))


def random_delta(rng):
    return RhoTangent(random_real_table(rng), random_real_table(rng))


def test_dp_after_lift_is_identity(cfg2, rng):
    loop = Loop.circle(1.0)
    for _ in range(10):
        delta = random_delta(rng)
        assert tangent_sup(dp_project(lift(delta, loop, cfg2)) + (-delta)) == 0.0


def test_I_squared_is_minus_one(cfg2, rng):
    loop = Loop.circle(1.0)
    worst = 0.0
    for _ in range(25):
        v = lift(random_delta(rng), loop, cfg2)
        w = apply_I(apply_I(v, loop, cfg2), loop, cfg2) + v
        worst = max(worst, w.loop_component.norm(), tangent_sup(w.delta))
    assert worst < 1e-10


def test_I_matches_rotation_through_lift(cfg2, rng):
    loop = Loop.circle(1.0)
    worst = 0.0
    for _ in range(25):
        delta = random_delta(rng)
        a = apply_I(lift(delta, loop, cfg2), loop, cfg2)
        b = lift(rho_rotate(delta), loop, cfg2)
        diff = a + (-b)
        worst = max(worst, diff.loop_component.norm(), tangent_sup(diff.delta))
    assert worst < 1e-10


def test_lift_is_coherent(cfg2, rng):
    loop = Loop.circle(1.0)
    v = lift(random_delta(rng), loop, cfg2)
    assert coherence_residual(v, loop) < 1e-12


def test_apply_I_rejects_incoherent(cfg2, rng):
    from sbs_workbench.loops import BTangent
    from sbs_workbench.structure import LiftedVector
    loop = Loop.circle(1.0)
    delta = random_delta(rng)
    theta = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    wrong = BTangent.from_samples(np.cos(5 * theta) * 3.0, J=12)
    with pytest.raises(PreconditionError):
        apply_I(LiftedVector(wrong, delta), loop, cfg2)


def fiber_tangent_delta(c, scale=1.0):
    # ((1-c) - (1+c) z zbar)^2 vanishes to second order on Z = c
    lin = PolyTable.constant(1.0 - c) + PolyTable.monomial(1, 1, -(1.0 + c))
    return (lin * lin) * scale


def test_fiber_tangency_preserved_by_I(cfg2, rng):
    # the latitude Z = 0 is r = 1; both table factors vanish there
    loop = Loop.circle(1.0)
    worst = 0.0
    for _ in range(25):
        delta = RhoTangent(fiber_tangent_delta(0.0, rng.normal()),
                           fiber_tangent_delta(0.0, rng.normal()))
        ok, res = fiber_tangent_check(delta, loop, cfg2)
        assert ok, res
        rotated = dp_project(apply_I(lift(delta, loop, cfg2), loop, cfg2))
        ok2, res2 = fiber_tangent_check(rotated, loop, cfg2)
        assert ok2, res2
        worst = max(worst, *res, *res2)
    assert worst < 1e-9


def test_fiber_tangency_fails_off_fiber(cfg2):
    delta = RhoTangent(PolyTable.coord_x(), PolyTable.zero())
    ok, res = fiber_tangent_check(delta, Loop.circle(1.0), cfg2)
    assert not ok
    assert res[0] > 1e-3


def test_uf_membership_constant(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    assert uf_membership(pair, HamiltonianFn.constant(2.5), cfg2) < 1e-9
    assert uf_membership(pair, HamiltonianFn.coordinate("Z"), cfg2) < 1e-9


def test_uf_membership_detects_mismatch(cfg2):
    pair = make_pair(Loop.circle(1.0), Section.monomial(1), cfg2)
    assert uf_membership(pair, HamiltonianFn.coordinate("X"), cfg2) > 1e-3


def test_commuting_levels_on_latitude(cfg3):
    loop = Loop.circle(np.sqrt(0.5))
    f1 = HamiltonianFn.coordinate("Z")
    f2 = HamiltonianFn.coordinate("Z") + HamiltonianFn.constant(0.0)
    assert commuting_level_check(loop, f1, f2) < 1e-28
    # different level sets of the same function never commute to zero variance
    g = HamiltonianFn.coordinate("X")
    assert commuting_level_check(loop, f1, g) > 1e-3
