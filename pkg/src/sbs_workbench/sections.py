"""Sections of the level-k bundle and the logarithmic covariant derivative.

A section is stored as chart data f(z, z̄) against the North frame, so

    rho(alpha) = df/f + A,

with A the chart connection form.  Everything in this module leans on two
identities: Re rho = d ln|alpha|_h exactly, and d Im rho = 2*pi*omega with
the calibrated orientation.  Both are verified numerically by
rho_identity_check rather than assumed.

Sections declared "global" are holomorphic polynomials (degree <= k checks
happen where a config is available); any other table is chart-local and
carries an explicit validity radius.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    NonGlobalSection,
    PreconditionError,
    TruncationOverflow,
    ZeroSetProximity,
)
from .fd import curl_central, grad_central
from .sphere import ChartPoint, Form1Value, GridSpec, SphereConfig, connection_coeffs, omega_coeff
from .tables import PolyTable

DEGREE_BOUND_DEFAULT = 8
EPS_Z_DEFAULT = 1e-6
REGION_RADIUS_DEFAULT = 4.0


@dataclass(frozen=True)
class Section:
    table: PolyTable
    is_global: bool = False
    degree_bound: int = DEGREE_BOUND_DEFAULT
    region_radius: float = REGION_RADIUS_DEFAULT
    eps_z: float = EPS_Z_DEFAULT

    def __post_init__(self):
        if self.table.is_zero():
            raise ValueError("section must not be identically zero")
        if self.eps_z <= 0:
            raise ValueError("eps_z must be positive")
        if self.table.degree > self.degree_bound:
            raise ValueError(
                f"table degree {self.table.degree} exceeds bound {self.degree_bound}")
        if self.is_global and not self.table.is_holomorphic():
            raise ValueError("global sections must be holomorphic (no z̄ terms)")

    @classmethod
    def frame(cls, **kw) -> "Section":
        return cls(PolyTable.constant(1.0), is_global=True, **kw)

    @classmethod
    def monomial(cls, m: int, coeff: complex = 1.0, **kw) -> "Section":
        return cls(PolyTable.monomial(m, 0, coeff), is_global=True, **kw)

    def scaled(self, c: complex) -> "Section":
        if c == 0:
            raise ValueError("scaling a section by zero")
        return replace(self, table=self.table * c)

    def values(self, z) -> np.ndarray:
        return self.table.evaluate(z)

    def holomorphic_degree(self) -> int:
        return self.table.trim().degree

    def rho_components(self, z, cfg) -> tuple:
        """Vectorized rho samples; the carrier protocol shared with transports."""
        return rho_values(self, z, cfg)


@dataclass(frozen=True)
class RhoValue:
    form: Form1Value
    zero_proximity: float


@dataclass(frozen=True)
class RhoTangent:
    """Tangent data d f0 + i d g0 in the rho representation."""

    f0: PolyTable
    g0: PolyTable

    def __post_init__(self):
        for name, tab in (("f0", self.f0), ("g0", self.g0)):
            if not tab.is_real_valued(tol=1e-12):
                raise ValueError(f"{name} must be a real-valued table")

    @classmethod
    def zero(cls) -> "RhoTangent":
        return cls(PolyTable.zero(), PolyTable.zero())

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.f0.is_zero(tol) and self.g0.is_zero(tol)

    def __add__(self, other):
        return RhoTangent(self.f0 + other.f0, self.g0 + other.g0)

    def __mul__(self, s: float):
        return RhoTangent(self.f0 * float(s), self.g0 * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return RhoTangent(-self.f0, -self.g0)


def rho_rotate(delta: RhoTangent) -> RhoTangent:
    """Multiplication by i on tangent data: i(df + i dg) = -dg + i df."""
    return RhoTangent(-delta.g0, delta.f0)


# -- evaluation ---------------------------------------------------------------

def _check_region(section: Section, z: np.ndarray):
    if not section.is_global and np.any(np.abs(z) > section.region_radius):
        raise PreconditionError(
            "evaluation outside the section's declared region "
            f"(radius {section.region_radius})")


def section_values_checked(section: Section, z: np.ndarray) -> np.ndarray:
    """Values of f with region and zero-proximity enforcement."""
    z = np.asarray(z, dtype=complex)
    _check_region(section, z)
    f = section.table.evaluate(z)
    bad = np.abs(f) <= section.eps_z
    if np.any(bad):
        worst = float(np.min(np.abs(f)))
        raise ZeroSetProximity(
            f"|f| = {worst:.3e} within the margin {section.eps_z:.1e} of the zero set",
            magnitude=worst)
    return f


def rho_values(section: Section, z, cfg: SphereConfig):
    """Vectorized rho components along an array of North-chart points.

    Returns (c_x, c_y, |f|); raises ZeroSetProximity if any point is inside
    the section's validity margin.
    """
    z = np.asarray(z, dtype=complex)
    f = section_values_checked(section, z)
    fx = section.table.partial_x().evaluate(z)
    fy = section.table.partial_y().evaluate(z)
    ax, ay = connection_coeffs(cfg.k, z)
    return fx / f + ax, fy / f + ay, np.abs(f)


def rho_at(section: Section, pt: ChartPoint, cfg: SphereConfig) -> RhoValue:
    z = np.array(pt.to_north().z)
    cx, cy, absf = rho_values(section, z, cfg)
    return RhoValue(Form1Value(complex(cx), complex(cy)), float(absf))


def log_h_norm(section: Section, z, cfg: SphereConfig) -> np.ndarray:
    """ln |alpha|_h = ln|f| - (k/2) ln(1+|z|^2) against the North frame."""
    z = np.asarray(z, dtype=complex)
    f = section_values_checked(section, z)
    return np.log(np.abs(f)) - (cfg.k / 2) * np.log1p(np.abs(z) ** 2)


# -- identity checks ----------------------------------------------------------

def rho_identity_check(section: Section, cfg: SphereConfig, grid: GridSpec,
                       tol: tuple[float, float] = (1e-5, 1e-9)) -> tuple[float, float]:
    """Residuals of the two structural identities on a grid.

    Returns (sup |FD(d Im rho) - 2*pi*omega|, sup |Re rho - FD(d ln|alpha|_h)|).
    Central differences at the grid's step; each residual is recomputed with a
    Richardson combination when it misses its target in `tol`.
    """
    z = grid.points
    h = grid.fd_step

    def im_rho(pts):
        cx, cy, _ = rho_values(section, pts, cfg)
        return np.imag(cx), np.imag(cy)

    def log_norm(pts):
        return log_h_norm(section, pts, cfg)

    target = 2 * np.pi * omega_coeff(cfg, z)

    res_im = float(np.max(np.abs(curl_central(im_rho, z, h) - target)))
    if res_im > tol[0]:
        res_im = float(np.max(np.abs(curl_central(im_rho, z, h, richardson=True) - target)))

    cx, cy, _ = rho_values(section, z, cfg)

    def re_residual(richardson):
        gx, gy = grad_central(log_norm, z, h, richardson=richardson)
        return float(max(np.max(np.abs(np.real(cx) - gx)),
                         np.max(np.abs(np.real(cy) - gy))))

    res_re = re_residual(False)
    if res_re > tol[1]:
        res_re = re_residual(True)
    return res_im, res_re


def ratio_constancy(alpha1: Section, alpha2: Section, cfg: SphereConfig,
                    grid: GridSpec, var_tol: float = 1e-16):
    """Proportionality test: is f2/f1 constant over the grid?

    Returns (bool, mean ratio).  When true, the rho forms of the two sections
    agree on the grid (the test suite checks that direction explicitly).
    """
    del cfg  # signature uniformity; the ratio is chart data only
    f1 = section_values_checked(alpha1, grid.points)
    f2 = section_values_checked(alpha2, grid.points)
    ratio = f2 / f1
    mean = complex(ratio.mean())
    var = float(np.mean(np.abs(ratio - mean) ** 2))
    return var <= var_tol, mean


# -- trajectories -------------------------------------------------------------

def exp_trajectory(alpha0: Section, delta: RhoTangent, t: float,
                   tol: float = 1e-8, target_degree: int | None = None) -> Section:
    """The section e^{t(f0 + i g0)} * alpha0, re-expanded into a table.

    The exponential series is accumulated exactly (degrees grow), multiplied
    by alpha0's table, then truncated back to the degree bound; the dropped
    coefficient mass is bounded on the working disc and must stay below tol.
    """
    if t == 0 or delta.is_zero():
        return alpha0
    bound = alpha0.degree_bound if target_degree is None else target_degree
    radius = alpha0.region_radius
    w = delta.f0 * t + delta.g0 * (1j * t)

    amp = w.sup_bound(radius)
    term = PolyTable.constant(1.0)
    series = PolyTable.constant(1.0)
    tail = np.exp(amp)
    j = 0
    while True:
        j += 1
        if j > 80:
            raise TruncationOverflow(
                f"exponential series did not settle (|t delta| bound {amp:.3g})",
                bound=amp)
        term = term * w * (1.0 / j)
        series = series + term
        tail = term.sup_bound(radius) * np.exp(amp)
        if tail <= tol / 4:
            break

    product = series * alpha0.table
    kept, rest = product.split_at(bound)
    err = rest.sup_bound(radius) + tail * alpha0.table.sup_bound(radius)
    if err > tol or kept.is_zero():
        raise TruncationOverflow(
            f"degree bound {bound} cannot hold the product "
            f"(remainder bound {err:.3e} on |z| <= {radius})", bound=err)

    scalar_factor = delta.f0.trim().degree == 0 and delta.g0.trim().degree == 0
    return Section(kept,
                   is_global=alpha0.is_global and scalar_factor,
                   degree_bound=max(bound, alpha0.degree_bound),
                   region_radius=alpha0.region_radius,
                   eps_z=alpha0.eps_z)


def delta_form(alpha_t: Section, alpha_0: Section, t: float, pt: ChartPoint) -> Form1Value:
    """Difference quotient (rho(alpha_t) - rho(alpha_0))/t at a point.

    The connection cancels in the difference, so this is chart data only.
    """
    if t == 0:
        raise ZeroDivisionError("delta form needs t != 0")
    z = np.array(pt.to_north().z)
    out = []
    for sec in (alpha_t, alpha_0):
        f = section_values_checked(sec, z)
        fx = sec.table.partial_x().evaluate(z)
        fy = sec.table.partial_y().evaluate(z)
        out.append((fx / f, fy / f))
    (txx, txy), (oxx, oxy) = out
    return Form1Value(complex((txx - oxx) / t), complex((txy - oxy) / t))


# -- hermitian product ---------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    n_radial: int = 96
    n_angular: int = 256
    region_radius: float | None = None  # None = whole sphere


def hermitian_product(alpha1: Section, alpha2: Section, cfg: SphereConfig,
                      quad: QuadratureSpec = QuadratureSpec()) -> complex:
    """∫ <alpha1, alpha2>_h dmu with the positive Liouville area of level k.

    Full-sphere pairing requires both sections global of holomorphic degree
    <= k (those are the data that extend over the pole); a region_radius in
    the quadrature spec integrates chart-local sections over that disc.

    The radial substitution u = r^2/(1+r^2) makes the integrand polynomial in
    u for monomial pairs, so Gauss-Legendre nodes are exact there; angular
    trapezoid kills cross terms exactly.
    """
    if quad.region_radius is None:
        for name, s in (("alpha1", alpha1), ("alpha2", alpha2)):
            if not s.is_global:
                raise NonGlobalSection(
                    f"{name} is chart-local; full-sphere pairing undefined")
            if s.holomorphic_degree() > cfg.k:
                raise NonGlobalSection(
                    f"{name} has holomorphic degree {s.holomorphic_degree()} > k = {cfg.k}")
        u_max = 1.0
    else:
        r = quad.region_radius
        for s in (alpha1, alpha2):
            if not s.is_global and r > s.region_radius:
                raise PreconditionError("quadrature region exceeds a section's validity")
        u_max = r * r / (1 + r * r)

    nodes, weights = np.polynomial.legendre.leggauss(quad.n_radial)
    u = 0.5 * u_max * (nodes + 1)
    w = 0.5 * u_max * weights
    s_rad = u / (1 - u)                     # r^2 at the nodes
    theta = np.linspace(0, 2 * np.pi, quad.n_angular, endpoint=False)
    z = np.sqrt(s_rad)[:, None] * np.exp(1j * theta)[None, :]

    vals = alpha1.table.evaluate(z) * np.conj(alpha2.table.evaluate(z))
    radial = vals.mean(axis=1) * (1 + s_rad) ** (-cfg.k)
    return complex(cfg.k * np.dot(w, radial))


# -- winding ------------------------------------------------------------------

def winding_integrality(form_field, zero_pt: ChartPoint, radius: float,
                        n_samples: int = 512) -> tuple[int, float]:
    """Nearest integer to (1/2pi) ∮ Im(form) around a zero, plus the distance.

    form_field maps ChartPoint -> Form1Value and is sampled on the circle of
    the given radius; ZeroSetProximity from the field propagates (the circle
    grazes the zero set).
    """
    center = zero_pt.to_north().z
    theta = np.linspace(0, 2 * np.pi, n_samples, endpoint=False)
    total = 0.0
    for th in theta:
        z = center + radius * np.exp(1j * th)
        v = radius * np.exp(1j * th) * 1j  # velocity dz/dtheta
        form = form_field(ChartPoint(z))
        total += float(np.imag(form.pair(v.real, v.imag)))
    integral = total * (2 * np.pi / n_samples) / (2 * np.pi)
    w = int(round(integral))
    return w, float(abs(integral - w))
