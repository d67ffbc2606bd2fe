"""The fixed model manifold: the two-sphere at integer level k.

Two stereographic charts cover the sphere; in each one the level-k data are

    omega = orientation_sign * (k/pi) * (1 + |z|^2)^{-2} dx dy
    A     = -k z̄ dz / (1 + |z|^2)          (connection in the chart frame)
    |e|_h = (1 + |z|^2)^{-k/2}              (frame norm)

The references leave the chart orientation open, so SphereConfig.calibrated
measures it once: the sign is chosen so that the finite-difference exterior
derivative of Im A equals +2*pi*omega, after which both curvature identities
hold verbatim.  With these chart formulas the calibration lands on -1.

Ambient coordinates (X, Y, Z) with X^2+Y^2+Z^2 = 1 relate to the North chart
by X = 2x/(1+r^2), Y = 2y/(1+r^2), Z = (1-r^2)/(1+r^2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import PoleError
from .fd import curl_central

R_MAX = 1e6  # chart validity radius


class Chart(enum.Enum):
    NORTH = "N"
    SOUTH = "S"


@dataclass(frozen=True)
class ChartPoint:
    z: complex
    chart: Chart = Chart.NORTH

    def __post_init__(self):
        z = complex(self.z)
        if not np.isfinite(z.real) or not np.isfinite(z.imag):
            raise ValueError("chart coordinate must be finite")
        if abs(z) > R_MAX:
            raise PoleError(f"|z| = {abs(z):.3g} outside chart validity radius")
        object.__setattr__(self, "z", z)

    def transition(self) -> "ChartPoint":
        if self.z == 0:
            raise PoleError("z = 0 is the other chart's center")
        other = Chart.SOUTH if self.chart is Chart.NORTH else Chart.NORTH
        return ChartPoint(1 / self.z, other)

    def to_north(self) -> "ChartPoint":
        return self if self.chart is Chart.NORTH else self.transition()

    def normalized(self) -> "ChartPoint":
        """Move to the chart where |z| <= 1 (numerical safety near a pole)."""
        return self.transition() if abs(self.z) > 1 else self

    def ambient(self) -> tuple[float, float, float]:
        pt = self.to_north()
        x, y = pt.z.real, pt.z.imag
        d = 1 + x * x + y * y
        return 2 * x / d, 2 * y / d, (1 - x * x - y * y) / d


def chart_transition(pt: ChartPoint) -> ChartPoint:
    return pt.transition()


@dataclass(frozen=True)
class Form1Value:
    c_x: complex
    c_y: complex

    def __add__(self, other):
        return Form1Value(self.c_x + other.c_x, self.c_y + other.c_y)

    def __sub__(self, other):
        return Form1Value(self.c_x - other.c_x, self.c_y - other.c_y)

    def __mul__(self, s):
        return Form1Value(self.c_x * s, self.c_y * s)

    __rmul__ = __mul__

    def real(self) -> "Form1Value":
        return Form1Value(self.c_x.real, self.c_y.real)

    def imag(self) -> "Form1Value":
        return Form1Value(self.c_x.imag, self.c_y.imag)

    def pair(self, vx: float, vy: float) -> complex:
        """Apply the form to the tangent vector (vx, vy)."""
        return self.c_x * vx + self.c_y * vy

    def max_abs(self) -> float:
        return max(abs(self.c_x), abs(self.c_y))


@dataclass(frozen=True)
class Form2Value:
    c: float


@dataclass(frozen=True)
class SphereConfig:
    k: int
    orientation_sign: int

    def __post_init__(self):
        if self.k < 1 or int(self.k) != self.k:
            raise ValueError("level k must be a positive integer")
        if self.orientation_sign not in (+1, -1):
            raise ValueError("orientation_sign must be +1 or -1")

    @classmethod
    def calibrated(cls, k: int) -> "SphereConfig":
        """Measure the chart orientation once and fix it for this config.

        The reference section is the chart frame, whose rho-form is A itself;
        the sign is the one for which FD(d Im A) = +2*pi*omega holds.
        """
        probe = np.array([0.3 + 0.2j, -0.5 + 0.4j])

        def im_a(z):
            cx, cy = connection_coeffs(k, z)
            return np.imag(cx), np.imag(cy)

        curl = curl_central(im_a, probe, 1e-4)
        best = min((+1, -1), key=lambda s: float(np.max(np.abs(
            curl - 2 * np.pi * omega_coeff_chart(k, s, probe)))))
        return cls(k=k, orientation_sign=best)


# -- chart formulas (vectorized over complex arrays) -------------------------

def omega_coeff_chart(k: int, sign: int, z) -> np.ndarray:
    """Coefficient of dx dy in either chart; same formula on both."""
    r2 = np.abs(np.asarray(z, dtype=complex)) ** 2
    return sign * (k / np.pi) / (1 + r2) ** 2


def omega_coeff(cfg: SphereConfig, z) -> np.ndarray:
    return omega_coeff_chart(cfg.k, cfg.orientation_sign, z)


def connection_coeffs(k: int, z) -> tuple[np.ndarray, np.ndarray]:
    """Components of A = -k z̄ dz/(1+|z|^2) in the chart frame."""
    z = np.asarray(z, dtype=complex)
    g = -k * np.conj(z) / (1 + np.abs(z) ** 2)
    return g, 1j * g


def omega_at(cfg: SphereConfig, pt: ChartPoint) -> Form2Value:
    return Form2Value(float(omega_coeff(cfg, pt.z)))


def connection_form_at(cfg: SphereConfig, pt: ChartPoint) -> Form1Value:
    cx, cy = connection_coeffs(cfg.k, np.array(pt.z))
    return Form1Value(complex(cx), complex(cy))


# -- grids and the curvature check -------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    points: np.ndarray  # complex chart coordinates
    fd_step: float = 1e-4

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel().copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def square(cls, half_width: float = 2.0, n: int = 20,
               fd_step: float = 1e-4, center: complex = 0.0) -> "GridSpec":
        xs = np.linspace(-half_width, half_width, n)
        gx, gy = np.meshgrid(xs, xs)
        return cls(center + gx + 1j * gy, fd_step)

    @classmethod
    def annulus(cls, r_min: float, r_max: float, n_r: int = 12,
                n_theta: int = 24, fd_step: float = 1e-4) -> "GridSpec":
        r = np.linspace(r_min, r_max, n_r)
        th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
        rr, tt = np.meshgrid(r, th)
        return cls(rr * np.exp(1j * tt), fd_step)


def curvature_residual(cfg: SphereConfig, grid: GridSpec) -> float:
    """sup over the grid of |FD(dA) - 2*pi*i*sigma*omega|."""
    z = grid.points
    if np.any(np.abs(z) > R_MAX):
        raise PoleError("grid leaves the chart validity region")

    def form(pts):
        return connection_coeffs(cfg.k, pts)

    da = curl_central(form, z, grid.fd_step)
    target = 2j * np.pi * omega_coeff(cfg, z)
    return float(np.max(np.abs(da - target)))
