"""Fourier loops on the sphere and the Bohr-Sommerfeld machinery.

A loop is z(θ) = Σ_{|j|<=J} ζ_j e^{ijθ} in the North chart; every embedded
loop is lagrangian here (n = 1), so the moduli questions reduce to two
quadratures along the curve:

    holonomy defect  = ∮ Im A (z'(θ)) dθ   reduced mod 2π,
    SBS residual     = ∮ |Im rho(z'(θ))|² dθ.

Uniform-grid trapezoid sums are spectrally accurate for these periodic
integrands, which is what makes the 1e-8..1e-12 certificate tolerances
realistic at N_s = 512.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import (
    EmbeddednessLost,
    NonSimpleLoop,
    PreconditionError,
    WorkbenchError,
    ZeroSetProximity,
)
from .sphere import R_MAX, SphereConfig, connection_coeffs, omega_coeff

LOOP_J_DEFAULT = 12
LOOP_SAMPLES_DEFAULT = 512
TOL_BS_DEFAULT = 1e-6
TOL_SBS_DEFAULT = 1e-6
DELTA_EMB_DEFAULT = 1e-4
DELTA_V_DEFAULT = 1e-4


@dataclass(frozen=True)
class Loop:
    coeffs: np.ndarray  # complex, length 2J+1; index i holds mode j = i - J
    n_samples: int = LOOP_SAMPLES_DEFAULT

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel().copy()
        if len(c) % 2 != 1:
            raise ValueError("coefficient array must have odd length 2J+1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.n_samples < 4 * self.J + 4:
            object.__setattr__(self, "n_samples", max(4 * self.J + 4, 64))

    @property
    def J(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def zeta(self, j: int) -> complex:
        return complex(self.coeffs[j + self.J])

    @classmethod
    def circle(cls, radius: float, center: complex = 0.0,
               J: int = LOOP_J_DEFAULT, n_samples: int = LOOP_SAMPLES_DEFAULT) -> "Loop":
        c = np.zeros(2 * J + 1, dtype=complex)
        c[J] = center
        c[J + 1] = radius
        return cls(c, n_samples)

    @classmethod
    def from_modes(cls, modes: dict[int, complex], J: int | None = None,
                   n_samples: int = LOOP_SAMPLES_DEFAULT) -> "Loop":
        if J is None:
            J = max(abs(j) for j in modes)
        c = np.zeros(2 * J + 1, dtype=complex)
        for j, v in modes.items():
            c[j + J] = v
        return cls(c, n_samples)

    def thetas(self) -> np.ndarray:
        return np.linspace(0, 2 * np.pi, self.n_samples, endpoint=False)

    def points(self, theta: np.ndarray | None = None) -> np.ndarray:
        th = self.thetas() if theta is None else np.asarray(theta, dtype=float)
        modes = np.arange(-self.J, self.J + 1)
        return np.exp(1j * np.outer(th, modes)) @ self.coeffs

    def velocity(self, theta: np.ndarray | None = None) -> np.ndarray:
        th = self.thetas() if theta is None else np.asarray(theta, dtype=float)
        modes = np.arange(-self.J, self.J + 1)
        return np.exp(1j * np.outer(th, modes)) @ (1j * modes * self.coeffs)

    def rotated(self, phi: float) -> "Loop":
        """Reparametrize θ -> θ + phi (same curve)."""
        modes = np.arange(-self.J, self.J + 1)
        return replace(self, coeffs=self.coeffs * np.exp(1j * modes * phi))

    def resampled(self, n_samples: int) -> "Loop":
        return replace(self, n_samples=n_samples)

    def scaled(self, s: float) -> "Loop":
        return replace(self, coeffs=self.coeffs * s)

    def validate(self, delta_emb: float = DELTA_EMB_DEFAULT,
                 delta_v: float = DELTA_V_DEFAULT) -> None:
        z = self.points()
        if not np.all(np.isfinite(z)) or np.any(np.abs(z) > R_MAX):
            raise EmbeddednessLost("loop leaves the chart validity region")
        speed = np.abs(self.velocity())
        if speed.min() < delta_v:
            raise EmbeddednessLost(
                f"velocity floor violated: min |z'| = {speed.min():.3e}")
        n = len(z)
        idx = np.arange(n)
        circ = np.minimum(np.abs(idx[:, None] - idx[None, :]),
                          n - np.abs(idx[:, None] - idx[None, :])) * (2 * np.pi / n)
        dist = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(circ, 1.0)
        np.fill_diagonal(dist, 1.0)
        ratio = (dist / circ).min()
        if ratio < delta_emb:
            raise EmbeddednessLost(
                f"embeddedness ratio {ratio:.3e} below threshold {delta_emb:.1e}")


@dataclass(frozen=True)
class BTangent:
    """Mean-zero function on the parameter circle (a tangent to loop space)."""

    cos_coeffs: np.ndarray  # mode j = index + 1
    sin_coeffs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.cos_coeffs, dtype=float).ravel().copy()
        b = np.asarray(self.sin_coeffs, dtype=float).ravel().copy()
        if len(a) != len(b):
            raise ValueError("cos/sin arrays must have equal length")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)

    @property
    def J(self) -> int:
        return len(self.cos_coeffs)

    @classmethod
    def zero(cls, J: int = LOOP_J_DEFAULT) -> "BTangent":
        return cls(np.zeros(J), np.zeros(J))

    @classmethod
    def from_samples(cls, values: np.ndarray, J: int) -> "BTangent":
        """Project uniform samples onto modes 1..J; the mean is dropped."""
        vals = np.asarray(values, dtype=float)
        n = len(vals)
        spec = np.fft.rfft(vals) / n
        jmax = min(J, len(spec) - 1)
        a = np.zeros(J)
        b = np.zeros(J)
        a[:jmax] = 2 * spec[1:jmax + 1].real
        b[:jmax] = -2 * spec[1:jmax + 1].imag
        return cls(a, b)

    @classmethod
    def from_derivative_samples(cls, deriv_values: np.ndarray, J: int) -> "BTangent":
        """Mean-zero primitive of sampled u'(θ) (used by tau)."""
        vals = np.asarray(deriv_values, dtype=float)
        n = len(vals)
        spec = np.fft.rfft(vals) / n
        jmax = min(J, len(spec) - 1)
        a = np.zeros(J)
        b = np.zeros(J)
        modes = np.arange(1, jmax + 1)
        u_hat = spec[1:jmax + 1] / (1j * modes)
        a[:jmax] = 2 * u_hat.real
        b[:jmax] = -2 * u_hat.imag
        return cls(a, b)

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        modes = np.arange(1, self.J + 1)
        ang = np.outer(th, modes)
        return np.cos(ang) @ self.cos_coeffs + np.sin(ang) @ self.sin_coeffs

    def derivative(self, theta: np.ndarray) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        modes = np.arange(1, self.J + 1)
        ang = np.outer(th, modes)
        return (-np.sin(ang) @ (modes * self.cos_coeffs)
                + np.cos(ang) @ (modes * self.sin_coeffs))

    def norm(self) -> float:
        """L2 norm over the circle."""
        return float(np.sqrt(np.pi * (np.sum(self.cos_coeffs ** 2)
                                      + np.sum(self.sin_coeffs ** 2))))

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.cos_coeffs) <= tol)
                    and np.all(np.abs(self.sin_coeffs) <= tol))

    def __add__(self, other):
        J = max(self.J, other.J)
        a = np.zeros(J)
        b = np.zeros(J)
        a[:self.J] += self.cos_coeffs
        b[:self.J] += self.sin_coeffs
        a[:other.J] += other.cos_coeffs
        b[:other.J] += other.sin_coeffs
        return BTangent(a, b)

    def __mul__(self, s: float):
        return BTangent(self.cos_coeffs * float(s), self.sin_coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


@dataclass(frozen=True)
class SbsPair:
    loop: Loop
    section: object  # rho carrier: Section or a transported form
    bs_defect: float
    sbs_residual: float


@dataclass(frozen=True)
class TBPoint:
    loop: Loop
    tangent: BTangent


@dataclass(frozen=True)
class FailureReport:
    reason: str
    best_residual: float
    best_defect: float
    iterations: int
    zero_rejections: int = 0


# -- quadratures along the curve ----------------------------------------------

def _loop_im_connection(loop: Loop, cfg: SphereConfig) -> float:
    """∮ Im A(z'(θ)) dθ, unreduced."""
    z = loop.points()
    v = loop.velocity()
    ax, ay = connection_coeffs(cfg.k, z)
    integrand = np.imag(ax * v.real + ay * v.imag)
    return float(integrand.mean() * 2 * np.pi)


def holonomy_defect(loop: Loop, cfg: SphereConfig) -> float:
    """∮ Im A reduced mod 2π to (-π, π]; zero iff the loop is Bohr-Sommerfeld."""
    w = _loop_im_connection(loop, cfg)
    d = math.remainder(w, 2 * math.pi)
    if d <= -math.pi:
        d += 2 * math.pi
    return d


def winding_number(loop: Loop) -> float:
    """Winding of z(θ) around the sample mean."""
    z = loop.points()
    rel = z - z.mean()
    if np.min(np.abs(rel)) < 1e-12:
        raise NonSimpleLoop("curve passes through its own centroid")
    steps = np.angle(np.roll(rel, -1) / rel)
    return float(steps.sum() / (2 * np.pi))


def enclosed_area(loop: Loop, cfg: SphereConfig) -> float:
    """Symplectic area enclosed by the loop, by the Stokes shortcut.

    area = -(1/2π) ∮ Im A; with the calibrated orientation this equals the
    omega-integral over the disc, positively for counterclockwise loops
    (latitude r: k r²/(1+r²)).  Requires winding ±1.
    """
    w = winding_number(loop)
    if abs(w - round(w)) > 1e-6 or round(w) not in (-1, 1):
        raise NonSimpleLoop(f"winding number {w:.4f}, need ±1")
    return -_loop_im_connection(loop, cfg) / (2 * np.pi)


def sbs_residual(loop: Loop, carrier, cfg: SphereConfig) -> float:
    """∮ |Im rho(z'(θ))|² dθ for a section (or transported rho data)."""
    z = loop.points()
    v = loop.velocity()
    cx, cy, _ = carrier.rho_components(z, cfg)
    vals = np.imag(cx * v.real + cy * v.imag)
    return float(np.mean(vals ** 2) * 2 * np.pi)


def bs_certificates(loop: Loop, carrier, cfg: SphereConfig) -> tuple[float, float]:
    return holonomy_defect(loop, cfg), sbs_residual(loop, carrier, cfg)


def make_pair(loop: Loop, carrier, cfg: SphereConfig,
              tol_bs: float = TOL_BS_DEFAULT,
              tol_sbs: float = TOL_SBS_DEFAULT) -> SbsPair:
    """Certify and assemble an SbsPair; raises if the invariants fail."""
    loop.validate()
    defect, residual = bs_certificates(loop, carrier, cfg)
    if abs(defect) > tol_bs:
        raise PreconditionError(f"holonomy defect {defect:.3e} exceeds {tol_bs:.1e}")
    if residual > tol_sbs:
        raise PreconditionError(f"SBS residual {residual:.3e} exceeds {tol_sbs:.1e}")
    return SbsPair(loop, carrier, defect, residual)


def tau(pair: SbsPair, cfg: SphereConfig) -> TBPoint:
    """The exact 1-form rho|_S as a tangent vector: mean-zero primitive of Re rho(z')."""
    loop = pair.loop
    z = loop.points()
    v = loop.velocity()
    cx, cy, _ = pair.section.rho_components(z, cfg)
    g = np.real(cx * v.real + cy * v.imag)
    closure = abs(g.mean()) * 2 * np.pi
    if closure > 1e-6:
        raise WorkbenchError(
            f"∮ Re rho|_S = {closure:.3e}; exactness identity violated by inputs")
    return TBPoint(loop, BTangent.from_derivative_samples(g, loop.J))


def deform_loop(loop: Loop, tangent: BTangent, amplitude: float,
                cfg: SphereConfig) -> Loop:
    """Displace the loop along the omega-dual normal field of d(f).

    The normal ν solves ι_ν ω = df along the curve, so the displacement
    realizes the tangent vector f (mod constants) of loop space.
    """
    if amplitude == 0 or tangent.is_zero():
        return loop
    th = loop.thetas()
    z = loop.points()
    v = loop.velocity()
    c = omega_coeff(cfg, z)
    fprime = tangent.derivative(th)
    lam = fprime / (c * np.abs(v) ** 2)
    nu = lam * (v.imag - 1j * v.real)  # (y', -x') rotated tangent
    samples = z + amplitude * nu

    n = len(samples)
    spec = np.fft.fft(samples) / n
    J = loop.J
    coeffs = np.concatenate([spec[n - J:], spec[:J + 1]])
    out = Loop(coeffs, loop.n_samples)
    out.validate()
    return out


# -- the search ---------------------------------------------------------------

@dataclass(frozen=True)
class FindSbsOptions:
    tol: float = TOL_SBS_DEFAULT
    tol_bs: float = TOL_BS_DEFAULT
    max_iter: int = 60
    n_samples: int = 256
    max_mode: int = 8
    area_weight: float = 100.0


def _pin_target(area: float) -> int:
    m = round(area)
    if m == 0:
        m = 1 if area >= 0 else -1
    return int(m)


def find_sbs(section, seed: Loop, cfg: SphereConfig,
             opts: FindSbsOptions = FindSbsOptions()):
    """Search for an SBS loop near the seed, holding enclosed area integral.

    Least-squares descent on the Fourier modes |j| <= max_mode with the Im rho
    samples as residuals and one weighted row pinning the area to the nearest
    nonzero integer; finishes with an exact radial re-pin.  Returns an SbsPair
    on success, otherwise a FailureReport carrying the best state seen.
    """
    seed.validate()
    defect0, residual0 = bs_certificates(seed, section, cfg)
    if residual0 <= opts.tol and abs(defect0) <= opts.tol_bs:
        return SbsPair(seed, section, defect0, residual0)

    target = _pin_target(enclosed_area(seed, cfg))
    J = seed.J
    j_opt = min(opts.max_mode, J)
    sl = slice(J - j_opt, J + j_opt + 1)
    th = np.linspace(0, 2 * np.pi, opts.n_samples, endpoint=False)
    modes_all = np.arange(-J, J + 1)
    basis = np.exp(1j * np.outer(th, modes_all))
    dbasis = basis * (1j * modes_all)
    scale = np.sqrt(2 * np.pi / opts.n_samples)
    rejections = 0

    def to_coeffs(x: np.ndarray) -> np.ndarray:
        c = np.array(seed.coeffs)
        c[sl] = x[0::2] + 1j * x[1::2]
        return c

    def residual_vec(x: np.ndarray) -> np.ndarray:
        nonlocal rejections
        c = to_coeffs(x)
        z = basis @ c
        v = dbasis @ c
        try:
            cx, cy, _ = section.rho_components(z, cfg)
            area = -float(np.imag(
                connection_coeffs(cfg.k, z)[0] * v.real
                + connection_coeffs(cfg.k, z)[1] * v.imag).mean())
        except ZeroSetProximity:
            rejections += 1
            return np.full(opts.n_samples + 1, 1e3)
        vals = np.imag(cx * v.real + cy * v.imag) * scale
        return np.concatenate([vals, [opts.area_weight * (area - target)]])

    x0 = np.empty(2 * (2 * j_opt + 1))
    x0[0::2] = seed.coeffs[sl].real
    x0[1::2] = seed.coeffs[sl].imag

    best = None
    x = x0
    iterations = 0
    for _ in range(3):
        sol = optimize.least_squares(
            residual_vec, x, method="lm",
            xtol=1e-14, ftol=1e-14, gtol=1e-14,
            max_nfev=opts.max_iter * (len(x0) + 1))
        iterations += sol.nfev
        x = sol.x
        loop = Loop(to_coeffs(x), seed.n_samples)

        # exact area re-pin by radial scaling
        def gap(s, lo=loop):
            return enclosed_area(lo.scaled(s), cfg) - target
        try:
            g1 = gap(1.0)
            if abs(g1) > 0:
                lo_s, hi_s = 1.0, 1.0
                while gap(lo_s) > 0 and lo_s > 0.3:
                    lo_s *= 0.9
                while gap(hi_s) < 0 and hi_s < 3.0:
                    hi_s *= 1.1
                if gap(lo_s) <= 0 <= gap(hi_s):
                    s_star = optimize.brentq(gap, lo_s, hi_s, xtol=1e-14)
                    loop = loop.scaled(s_star)
        except (NonSimpleLoop, ZeroSetProximity):
            pass

        try:
            defect, residual = bs_certificates(loop, section, cfg)
        except ZeroSetProximity:
            rejections += 1
            break
        if best is None or residual < best[1]:
            best = (defect, residual, loop)
        if residual <= opts.tol and abs(defect) <= opts.tol_bs:
            try:
                loop.validate()
            except EmbeddednessLost:
                return FailureReport("EmbeddednessLost", residual, defect, iterations,
                                     rejections)
            return SbsPair(loop, section, defect, residual)
        x0_next = np.empty_like(x)
        x0_next[0::2] = loop.coeffs[sl].real
        x0_next[1::2] = loop.coeffs[sl].imag
        x = x0_next

    if best is None:
        return FailureReport("ZeroSetProximity", float("inf"), float("inf"),
                             iterations, rejections)
    return FailureReport("MaxIterations", best[1], best[0], iterations, rejections)
