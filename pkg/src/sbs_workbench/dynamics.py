"""Hamiltonian flows on the sphere and transport of SBS pairs.

Hamiltonians are real polynomials in the ambient coordinates (X, Y, Z),
which keeps them bounded on the sphere and lets the height Z double as a
moment map.  Pulled back to the North chart through

    X = 2x/(1+r²), Y = 2y/(1+r²), Z = (1-r²)/(1+r²),

every such F becomes N(x,y)/(1+r²)^d with polynomial N, so chart values,
gradients and Hessians are available exactly (rational calculus, no FD).

The Hamiltonian field follows ι_{X_F} ω = dF with the calibrated ω:
X_F = (F_y, -F_x)/c.  Flows are fixed-step RK4 with the variational
equation integrated alongside; the monitored invariant is symplectic
area preservation, det(Dφ) · ω(end)/ω(start) = 1.  (The bare Euclidean
determinant is NOT preserved: the chart density of ω varies, so det(Dφ)
legitimately equals the density ratio.)

Transport of rho data is the pushforward along the flow that moves the
loop: evaluate at phi^{-t}(y) and compose with D(phi^{-t})(y).  The time
derivative of the transported form at t = 0 is then -L_{X_F} rho, which
fixes the overall sign of the Theta(F) formula below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.signal import convolve2d

from .errors import (PoleError, PreconditionError, StepSizeTooLarge,
                     ZeroSetCollision, ZeroSetProximity)
from .loops import BTangent, Loop, SbsPair
from .sections import Section
from .sphere import R_MAX, ChartPoint, SphereConfig

AMBIENT_DEGREE_MAX = 8
DET_DRIFT_MAX = 1e-6


# -- bivariate polynomial helpers (coeff[i, j] multiplies x^i y^j) ------------

def _p2_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return convolve2d(a, b)

def _p2_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])))
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] += b
    return out

def _p2_dx(a: np.ndarray) -> np.ndarray:
    if a.shape[0] == 1:
        return np.zeros((1, a.shape[1]))
    return a[1:, :] * np.arange(1, a.shape[0])[:, None]

def _p2_dy(a: np.ndarray) -> np.ndarray:
    if a.shape[1] == 1:
        return np.zeros((a.shape[0], 1))
    return a[:, 1:] * np.arange(1, a.shape[1])[None, :]

def _p2_eval(a: np.ndarray, x, y):
    return np.polynomial.polynomial.polyval2d(x, y, a)

_DEN = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])  # 1+x²+y²


def _rational_deriv(num: np.ndarray, power: int):
    """d/dx and d/dy of num/D^power as (numerator, power+1) pairs."""
    dx_num = _p2_add(_p2_mul(_p2_dx(num), _DEN),
                     _p2_mul(num, np.array([[0.0], [-2.0 * power]])))
    dy_num = _p2_add(_p2_mul(_p2_dy(num), _DEN),
                     _p2_mul(num, np.array([[0.0, -2.0 * power]])))
    return (dx_num, power + 1), (dy_num, power + 1)


@dataclass(frozen=True)
class HamiltonianFn:
    """Real polynomial in ambient coordinates; coeffs[i, j, l] ~ X^i Y^j Z^l."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 3:
            raise ValueError("ambient coefficient table must be 3-dimensional")
        if max(c.shape) - 1 > AMBIENT_DEGREE_MAX:
            raise ValueError(f"ambient degree exceeds {AMBIENT_DEGREE_MAX}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls) -> "HamiltonianFn":
        return cls(np.zeros((1, 1, 1)))

    @classmethod
    def constant(cls, value: float) -> "HamiltonianFn":
        return cls(np.full((1, 1, 1), float(value)))

    @classmethod
    def coordinate(cls, name: str) -> "HamiltonianFn":
        c = np.zeros((2, 2, 2))
        idx = {"X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1)}[name]
        c[idx] = 1.0
        return cls(c)

    def __add__(self, other: "HamiltonianFn") -> "HamiltonianFn":
        shape = tuple(max(a, b) for a, b in zip(self.coeffs.shape, other.coeffs.shape))
        out = np.zeros(shape)
        out[: self.coeffs.shape[0], : self.coeffs.shape[1], : self.coeffs.shape[2]] += self.coeffs
        out[: other.coeffs.shape[0], : other.coeffs.shape[1], : other.coeffs.shape[2]] += other.coeffs
        return HamiltonianFn(out)

    def __mul__(self, s: float) -> "HamiltonianFn":
        return HamiltonianFn(self.coeffs * float(s))

    __rmul__ = __mul__

    def value_ambient(self, X, Y, Z):
        return np.polynomial.polynomial.polyval3d(X, Y, Z, self.coeffs)

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)
        if len(nz[0]) == 0:
            return 0
        return int((nz[0] + nz[1] + nz[2]).max())

    @cached_property
    def _chart(self) -> dict:
        """Numerator/power pairs for F and its chart derivatives."""
        d = self.degree
        # building blocks as bivariate tables
        two_x = np.array([[0.0], [2.0]])
        two_y = np.array([[0.0, 2.0]])
        one_minus_r2 = np.array([[1.0, 0.0, -1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        num = np.zeros((1, 1))
        for (i, j, l) in zip(*np.nonzero(self.coeffs)):
            term = np.array([[self.coeffs[i, j, l]]])
            for _ in range(i):
                term = _p2_mul(term, two_x)
            for _ in range(j):
                term = _p2_mul(term, two_y)
            for _ in range(l):
                term = _p2_mul(term, one_minus_r2)
            for _ in range(d - i - j - l):
                term = _p2_mul(term, _DEN)
            num = _p2_add(num, term)
        f = (num, d)
        fx, fy = _rational_deriv(*f)
        fxx, fxy = _rational_deriv(*fx)
        _, fyy = _rational_deriv(*fy)
        return {"f": f, "fx": fx, "fy": fy, "fxx": fxx, "fxy": fxy, "fyy": fyy}

    def chart_values(self, z, names=("f",)) -> dict:
        """Evaluate F and requested chart derivatives at North-chart points."""
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        den = 1 + x * x + y * y
        out = {}
        for name in names:
            num, power = self._chart[name]
            out[name] = _p2_eval(num, x, y) / den ** power
        return out

    def value_chart(self, z):
        return self.chart_values(z)["f"]


# -- vector field and flows ----------------------------------------------------

def _field_pieces(ham: HamiltonianFn, cfg: SphereConfig, z, with_jac: bool):
    """X_F = (F_y, -F_x)/c and optionally its Jacobian entries."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    den = 1 + x * x + y * y
    s = cfg.orientation_sign * np.pi / cfg.k
    names = ("fx", "fy", "fxx", "fxy", "fyy") if with_jac else ("fx", "fy")
    vals = ham.chart_values(z, names)
    u = s * den ** 2 * vals["fy"]
    v = -s * den ** 2 * vals["fx"]
    if not with_jac:
        return u, v, None
    ux = s * (4 * x * den * vals["fy"] + den ** 2 * vals["fxy"])
    uy = s * (4 * y * den * vals["fy"] + den ** 2 * vals["fyy"])
    vx = -s * (4 * x * den * vals["fx"] + den ** 2 * vals["fxx"])
    vy = -s * (4 * y * den * vals["fx"] + den ** 2 * vals["fxy"])
    return u, v, (ux, uy, vx, vy)


def hamiltonian_vf(ham: HamiltonianFn, pt: ChartPoint, cfg: SphereConfig):
    u, v, _ = _field_pieces(ham, cfg, np.array(pt.to_north().z), with_jac=False)
    return float(u), float(v)


def flow_points(ham: HamiltonianFn, z0, t: float, steps: int, cfg: SphereConfig,
                with_jacobian: bool = True):
    """RK4 flow of an array of chart points.

    Returns (z_t, Jacobians, drift) where drift measures the symplectic
    determinant det(Dφ)·(1+|z0|²)²/(1+|z_t|²)² against 1.
    """
    z = np.asarray(z0, dtype=complex).copy()
    n = z.shape
    jac = np.zeros(n + (2, 2)) if with_jacobian else None
    if with_jacobian:
        jac[..., 0, 0] = 1.0
        jac[..., 1, 1] = 1.0
    if t == 0 or steps == 0:
        return z, jac, 0.0
    h = t / steps

    def rhs(zc, jc):
        u, v, d = _field_pieces(ham, cfg, zc, with_jac=with_jacobian)
        dz = u + 1j * v
        if not with_jacobian:
            return dz, None
        ux, uy, vx, vy = d
        a = np.stack([np.stack([ux, uy], axis=-1),
                      np.stack([vx, vy], axis=-1)], axis=-2)
        return dz, np.einsum("...ij,...jk->...ik", a, jc)

    for _ in range(steps):
        k1z, k1j = rhs(z, jac)
        k2z, k2j = rhs(z + 0.5 * h * k1z, None if jac is None else jac + 0.5 * h * k1j)
        k3z, k3j = rhs(z + 0.5 * h * k2z, None if jac is None else jac + 0.5 * h * k2j)
        k4z, k4j = rhs(z + h * k3z, None if jac is None else jac + h * k3j)
        z = z + (h / 6) * (k1z + 2 * k2z + 2 * k3z + k4z)
        if with_jacobian:
            jac = jac + (h / 6) * (k1j + 2 * k2j + 2 * k3j + k4j)
        # catch escape while the floats are still meaningful
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > R_MAX:
            raise PoleError("flow left the chart validity region")
    drift = 0.0
    if with_jacobian:
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        z0a = np.asarray(z0, dtype=complex)
        density = ((1 + np.abs(z0a) ** 2) / (1 + np.abs(z) ** 2)) ** 2
        drift = float(np.max(np.abs(det * density - 1.0)))
    return z, jac, drift


@dataclass(frozen=True)
class TransportedRho:
    """Pushforward of a carrier's rho data along a Hamiltonian flow."""

    base: object
    ham: HamiltonianFn
    t: float
    steps: int

    def rho_components(self, z, cfg: SphereConfig):
        back, jac, drift = flow_points(self.ham, z, -self.t, self.steps, cfg)
        if drift > DET_DRIFT_MAX:
            raise StepSizeTooLarge(f"Jacobian determinant drift {drift:.3e}")
        cx0, cy0, absf = self.base.rho_components(back, cfg)
        cx = cx0 * jac[..., 0, 0] + cy0 * jac[..., 1, 0]
        cy = cx0 * jac[..., 0, 1] + cy0 * jac[..., 1, 1]
        return cx, cy, absf


@dataclass(frozen=True)
class FlowResult:
    loop: Loop
    jacobians: np.ndarray  # (N, 2, 2) along the original samples
    error_estimate: float


def _refit_loop(samples: np.ndarray, J_min: int, n_samples: int):
    """Fourier refit of flowed samples; expands J until the tail is negligible."""
    n = len(samples)
    spec = np.fft.fft(samples) / n
    order = np.concatenate([np.arange(0, n // 2 + 1), np.arange(-(n - n // 2 - 1), 0)])
    J = J_min
    J_cap = max(J_min, n // 3)
    while J < J_cap:
        tail = np.abs(spec[(np.abs(order) > J)])
        if tail.size == 0 or tail.max() <= 1e-11:
            break
        J += 2
    coeffs = np.zeros(2 * J + 1, dtype=complex)
    for idx, j in enumerate(order):
        if abs(j) <= J:
            coeffs[int(j) + J] += spec[idx]
    loop = Loop(coeffs, n_samples)
    refit_err = float(np.max(np.abs(loop.points(
        np.linspace(0, 2 * np.pi, n, endpoint=False)) - samples)))
    return loop, refit_err


def transport_pair(ham: HamiltonianFn, pair: SbsPair, t: float, steps: int,
                   cfg: SphereConfig):
    """Move an SBS pair by the time-t Hamiltonian flow.

    The loop flows pointwise and is refit to Fourier; the section's rho data
    ride along as a pushforward carrier.  Returns (new pair, FlowResult).
    """
    if steps < 100 * abs(t):
        raise PreconditionError("need steps >= 100*t for the RK4 error budget")
    if t == 0:
        n = pair.loop.n_samples
        eye = np.zeros((n, 2, 2))
        eye[:, 0, 0] = eye[:, 1, 1] = 1.0
        return pair, FlowResult(pair.loop, eye, 0.0)

    n = pair.loop.n_samples
    while True:
        thetas = np.linspace(0, 2 * np.pi, n, endpoint=False)
        z0 = pair.loop.points(thetas)
        z1, jac, drift = flow_points(ham, z0, t, steps, cfg)
        if drift > DET_DRIFT_MAX:
            raise StepSizeTooLarge(
                f"Jacobian determinant drift {drift:.3e} exceeds {DET_DRIFT_MAX:.1e}")
        new_loop, refit_err = _refit_loop(z1, pair.loop.J, pair.loop.n_samples)
        if refit_err <= 1e-8 or n >= 2048:
            break
        n *= 2  # stretched image needs a denser trace before the Fourier refit
    new_loop.validate()
    carrier = TransportedRho(pair.section, ham, t, steps)

    from .loops import bs_certificates
    try:
        defect, residual = bs_certificates(new_loop, carrier, cfg)
    except ZeroSetProximity as exc:
        raise ZeroSetCollision(
            "transported loop met the transported zero set") from exc

    new_pair = SbsPair(new_loop, carrier, defect, residual)
    return new_pair, FlowResult(new_loop, jac, max(drift, refit_err))


# -- the infinitesimal field ----------------------------------------------------

@dataclass(frozen=True)
class ThetaReport:
    loop_component: BTangent
    formula: np.ndarray            # (N, 2) complex samples of the rho component
    finite_difference: np.ndarray  # same shape, from transport at ±h
    sup_residual: float
    h: float


def _rho_jacobian_pieces(section: Section, cfg: SphereConfig, z: np.ndarray):
    """rho components and their chart derivatives from the coefficient table."""
    tab = section.table
    f = tab.evaluate(z)
    fx = tab.partial_x().evaluate(z)
    fy = tab.partial_y().evaluate(z)
    fxx = tab.partial_x().partial_x().evaluate(z)
    fxy = tab.partial_x().partial_y().evaluate(z)
    fyy = tab.partial_y().partial_y().evaluate(z)
    x, y = z.real, z.imag
    den = 1 + x * x + y * y
    zb = np.conj(z)
    k = cfg.k
    ax = -k * zb / den
    ax_x = -k * (den - 2 * x * zb) / den ** 2
    ax_y = -k * (-1j * den - 2 * y * zb) / den ** 2
    rho_x = fx / f + ax
    rho_y = fy / f + 1j * ax
    rx_x = (fxx * f - fx * fx) / f ** 2 + ax_x
    rx_y = (fxy * f - fx * fy) / f ** 2 + ax_y
    ry_x = (fxy * f - fx * fy) / f ** 2 + 1j * ax_x
    ry_y = (fyy * f - fy * fy) / f ** 2 + 1j * ax_y
    return rho_x, rho_y, rx_x, rx_y, ry_x, ry_y


def theta_field(ham: HamiltonianFn, pair: SbsPair, cfg: SphereConfig,
                h: float = 1e-3) -> tuple[BTangent, ThetaReport]:
    """Theta(F) at an SBS pair: loop component and rho-component samples.

    Loop component: mean-removed F|_S.  Rho component along the loop:

        -( d(Re rho(X_F)) + i (d(Im rho(X_F)) + 2π dF) ),

    the minus sign being the pushforward convention (see module docstring).
    The report compares this formula against the central difference of the
    transported rho data at t = ±h evaluated at the same points.
    """
    if not isinstance(pair.section, Section):
        raise PreconditionError("theta_field needs a pair carrying a table section")
    loop = pair.loop
    z = loop.points()

    fvals = ham.value_chart(z)
    loop_component = BTangent.from_samples(fvals, loop.J)

    rho_x, rho_y, rx_x, rx_y, ry_x, ry_y = _rho_jacobian_pieces(pair.section, cfg, z)
    u, v, d = _field_pieces(ham, cfg, z, with_jac=True)
    ux, uy, vx, vy = d
    grads = ham.chart_values(z, ("fx", "fy"))
    w_x = rx_x * u + rho_x * ux + ry_x * v + rho_y * vx
    w_y = rx_y * u + rho_x * uy + ry_y * v + rho_y * vy
    theta_x = -(np.real(w_x) + 1j * (np.imag(w_x) + 2 * np.pi * grads["fx"]))
    theta_y = -(np.real(w_y) + 1j * (np.imag(w_y) + 2 * np.pi * grads["fy"]))
    formula = np.stack([theta_x, theta_y], axis=-1)

    fd_steps = max(1, math.ceil(100 * h))
    plus = TransportedRho(pair.section, ham, +h, fd_steps)
    minus = TransportedRho(pair.section, ham, -h, fd_steps)
    pxc, pyc, _ = plus.rho_components(z, cfg)
    mxc, myc, _ = minus.rho_components(z, cfg)
    fd = np.stack([(pxc - mxc) / (2 * h), (pyc - myc) / (2 * h)], axis=-1)

    sup = float(np.max(np.abs(formula - fd)))
    return loop_component, ThetaReport(loop_component, formula, fd, sup, h)
