"""Bohr-Sommerfeld fiber enumeration for latitude moment maps.

The height function (or any strictly monotone polynomial reparametrization
of it) has latitude circles as regular fibers.  A fiber at height Z bounds
the polar cap of area k(1-Z)/2 in curvature-normalized units, so the
quantization condition picks out finitely many latitudes; the span of the
corresponding fibers is the finite-dimensional state space.

Point fibers at the poles are excluded by default: the workbench's loops
are embedded circles, and conventions on boundary fibers differ anyway.
An include_poles flag adds them as loopless entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateLevel, PreconditionError
from .loops import LOOP_J_DEFAULT, Loop, enclosed_area, holonomy_defect, sbs_residual
from .sections import Section
from .sphere import SphereConfig

R2_EMBED_MIN = 1e-6


@dataclass(frozen=True)
class MomentMap:
    """mu = phi(Z) for a strictly monotone polynomial phi (None = height)."""

    phi_coeffs: tuple | None = None
    c_min: float | None = None
    c_max: float | None = None

    def __post_init__(self):
        if self.phi_coeffs is not None:
            coeffs = tuple(float(c) for c in self.phi_coeffs)
            object.__setattr__(self, "phi_coeffs", coeffs)
            zs = np.linspace(-1.0, 1.0, 257)
            dphi = np.polynomial.polynomial.polyval(
                zs, np.polynomial.polynomial.polyder(coeffs))
            if not (np.all(dphi > 0) or np.all(dphi < 0)):
                raise ValueError("reparametrization is not strictly monotone")
        lo, hi = sorted((self.value(-1.0), self.value(1.0)))
        if self.c_min is None:
            object.__setattr__(self, "c_min", lo)
        if self.c_max is None:
            object.__setattr__(self, "c_max", hi)
        if not (lo - 1e-12 <= self.c_min < self.c_max <= hi + 1e-12):
            raise ValueError("level range must sit inside the image of [-1, 1]")

    def value(self, Z):
        if self.phi_coeffs is None:
            return Z
        return np.polynomial.polynomial.polyval(Z, self.phi_coeffs)

    def invert(self, level: float) -> float:
        """Height with mu(Z) = level, by bisection on the monotone graph."""
        if self.phi_coeffs is None:
            return float(level)
        return float(brentq(lambda Z: self.value(Z) - level, -1.0, 1.0,
                            xtol=1e-14))


def cap_area(cfg: SphereConfig, Z) -> float:
    """Curvature-normalized area below the latitude at height Z."""
    return cfg.k * (1.0 - Z) / 2.0


@dataclass(frozen=True)
class ScanOptions:
    n_levels: int = 512
    tol: float = 1e-6
    tol_bs: float = 1e-6
    include_poles: bool = False
    J: int = LOOP_J_DEFAULT
    n_samples: int = 256
    level_tol: float = 1e-10


@dataclass(frozen=True)
class BsFiberEntry:
    level: float
    r2: float
    area: float
    defect: float
    loop: Loop | None


@dataclass(frozen=True)
class BsFiberReport:
    entries: tuple
    count: int

    @classmethod
    def build(cls, entries) -> "BsFiberReport":
        ordered = tuple(sorted(entries, key=lambda e: e.level))
        return cls(ordered, len(ordered))


def enumerate_bs_fibers(cfg: SphereConfig, mu: MomentMap,
                        scan_opts: ScanOptions | None = None) -> BsFiberReport:
    """Scan the level range for integer-area latitudes and certify each.

    The scan walks a height grid fine enough that the cap area moves by
    less than 1/2 between neighbours (refined adaptively), brackets the
    integer crossings and bisects.  Each root becomes a certified circle
    entry; the poles join only on request, as loopless records.
    """
    opts = scan_opts or ScanOptions()
    z_lo = mu.invert(float(mu.c_min))
    z_hi = mu.invert(float(mu.c_max))
    z_lo, z_hi = min(z_lo, z_hi), max(z_hi, z_lo)

    zs = list(np.linspace(z_lo, z_hi, max(opts.n_levels, 16)))
    while True:
        areas = [cap_area(cfg, z) for z in zs]
        gaps = [i for i in range(len(zs) - 1)
                if abs(areas[i + 1] - areas[i]) >= 0.45]
        if not gaps:
            break
        for i in reversed(gaps):
            zs.insert(i + 1, 0.5 * (zs[i] + zs[i + 1]))

    entries = []
    seen = set()
    for i in range(len(zs) - 1):
        a0, a1 = areas[i], areas[i + 1]
        lo, hi = sorted((a0, a1))
        for m in range(math.ceil(lo), math.floor(hi) + 1):
            if m in seen or m <= 0 or m >= cfg.k:
                continue
            if (a0 - m) == 0.0:
                z_root = zs[i]
            elif (a0 - m) * (a1 - m) > 0:
                continue
            else:
                z_root = brentq(lambda Z: cap_area(cfg, Z) - m, zs[i], zs[i + 1],
                                xtol=opts.level_tol)
            seen.add(m)
            r2 = (1.0 - z_root) / (1.0 + z_root)
            if not (R2_EMBED_MIN < r2 < 1.0 / R2_EMBED_MIN):
                raise DegenerateLevel(
                    f"level at height {z_root:.6f} is not an embedded circle")
            loop = Loop.circle(math.sqrt(r2), J=opts.J, n_samples=opts.n_samples)
            defect = holonomy_defect(loop, cfg)
            area = enclosed_area(loop, cfg)
            if abs(defect) > opts.tol_bs or abs(area - m) > opts.tol:
                raise PreconditionError(
                    f"certification failed at area {m}: defect {defect:.3e}")
            entries.append(BsFiberEntry(float(mu.value(z_root)), r2, area,
                                        defect, loop))

    if opts.include_poles:
        for Z, area in ((1.0, 0.0), (-1.0, float(cfg.k))):
            entries.append(BsFiberEntry(float(mu.value(Z)),
                                        0.0 if Z > 0 else math.inf,
                                        area, 0.0, None))
    return BsFiberReport.build(entries)


def hilbert_basis(report: BsFiberReport) -> list[str]:
    """Formal basis labels, one per fiber, ordered by level."""
    return [f"<S_{i + 1}>" for i in range(report.count)]


def sbs_fiber_compat(cfg: SphereConfig, report: BsFiberReport) -> list[dict]:
    """Cross-check: the area-m fiber of the height map is SBS for z^m."""
    rows = []
    for entry in report.entries:
        if entry.loop is None:
            continue
        m = int(round(entry.area))
        section = Section.monomial(m)
        residual = sbs_residual(entry.loop, section, cfg)
        rows.append({"level": entry.level, "m": m, "residual": residual})
    return rows
