"""Tangent geometry of the moduli of SBS pairs.

A tangent vector at (S, rho) is kept in the rho-representation: a pair of
real chart functions (f0, g0) perturbing rho by d f0/f + i d g0/g style
variations, together with the induced motion of the loop.  The projection
to section data forgets the loop component; its inverse lifts a pair by
restricting g0 to the loop (mean removed, since constants reparametrize
the same circle).  The rotated structure acts as

    (d(g0|_S); f0, g0)  ->  (d(f0|_S); -g0, f0),

which squares to minus the identity on the nose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import HamiltonianFn
from .errors import PreconditionError
from .loops import BTangent, Loop, SbsPair
from .sections import RhoTangent, rho_rotate
from .sphere import SphereConfig

COHERENCE_TOL = 1e-10
FIBER_TANGENT_TOL = 1e-9


@dataclass(frozen=True)
class LiftedVector:
    loop_component: BTangent
    delta: RhoTangent

    def is_zero(self) -> bool:
        return self.loop_component.is_zero() and self.delta.is_zero()

    def __add__(self, other: "LiftedVector") -> "LiftedVector":
        return LiftedVector(self.loop_component + other.loop_component,
                            self.delta + other.delta)

    def __mul__(self, s: float) -> "LiftedVector":
        return LiftedVector(self.loop_component * s, self.delta * s)

    __rmul__ = __mul__

    def __neg__(self) -> "LiftedVector":
        return LiftedVector(-self.loop_component, -self.delta)


def _restrict(table, loop: Loop) -> np.ndarray:
    return table.evaluate(loop.points()).real


def lift(delta: RhoTangent, loop: Loop, cfg: SphereConfig) -> LiftedVector:
    """Lift a rho-perturbation to a moduli tangent vector over the loop."""
    comp = BTangent.from_samples(_restrict(delta.g0, loop), loop.J)
    return LiftedVector(comp, delta)


def dp_project(v: LiftedVector) -> RhoTangent:
    return v.delta


def coherence_residual(v: LiftedVector, loop: Loop) -> float:
    """Distance between the stored loop component and the one g0 induces."""
    expected = BTangent.from_samples(_restrict(v.delta.g0, loop), loop.J)
    return (v.loop_component + (-expected)).norm()


def apply_I(v: LiftedVector, loop: Loop, cfg: SphereConfig) -> LiftedVector:
    """The lifted complex structure; coherent input, coherent output."""
    res = coherence_residual(v, loop)
    if res > COHERENCE_TOL:
        raise PreconditionError(
            f"loop component disagrees with g0 restriction by {res:.3e}")
    return lift(rho_rotate(v.delta), loop, cfg)


def fiber_tangent_check(delta: RhoTangent, loop: Loop,
                        cfg: SphereConfig) -> tuple[bool, tuple[float, float]]:
    """Does the perturbation point along a projection fiber at this loop?

    Tested through the literal condition: both restrictions f0|_S, g0|_S
    have vanishing tangential derivative (values are quotiented away, so
    only the derivative counts).  Residuals are the loop L2 squares.
    """
    z = loop.points()
    vel = loop.velocity()
    residuals = []
    for table in (delta.f0, delta.g0):
        dx = table.partial_x().evaluate(z).real
        dy = table.partial_y().evaluate(z).real
        along = dx * vel.real + dy * vel.imag
        residuals.append(2 * np.pi * float(np.mean(along ** 2)))
    ok = residuals[0] <= FIBER_TANGENT_TOL and residuals[1] <= FIBER_TANGENT_TOL
    return ok, (residuals[0], residuals[1])


def uf_membership(pair: SbsPair, f: HamiltonianFn, cfg: SphereConfig) -> float:
    """L2 defect of Re rho|_S = d(f|_S) along the loop.

    For an SBS pair the imaginary part vanishes already, so membership in
    the f-compatible subset reduces to the real part matching the
    tangential derivative of f.
    """
    loop = pair.loop
    z = loop.points()
    vel = loop.velocity()
    cx, cy, _ = pair.section.rho_components(z, cfg)
    re_along = np.real(cx) * vel.real + np.real(cy) * vel.imag
    grads = f.chart_values(z, ("fx", "fy"))
    df_along = grads["fx"] * vel.real + grads["fy"] * vel.imag
    return 2 * np.pi * float(np.mean((re_along - df_along) ** 2))


def commuting_level_check(loop: Loop, f1: HamiltonianFn,
                          f2: HamiltonianFn) -> float:
    """Sample variance of (f1 - f2) along the loop; near zero on a common level."""
    z = loop.points()
    diff = f1.value_chart(z) - f2.value_chart(z)
    return float(np.var(diff))
