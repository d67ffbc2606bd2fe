"""Dense coefficient tables for chart scalars f(z, z̄).

A table holds complex coefficients c[a, b] of f(z, z̄) = Σ c[a,b] z^a z̄^b.
This family is closed under the arithmetic the workbench needs (sums,
products, exact partial derivatives), which is why sections and tangent
data are stored this way instead of on grids: derivatives cost nothing
and carry no discretization error.

Shapes are allowed to be rectangular (derivatives shrink one axis); use
trim() to canonicalize before comparing tables for equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d


@dataclass(frozen=True)
class PolyTable:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "PolyTable":
        return cls(np.zeros((1, 1)))

    @classmethod
    def constant(cls, value: complex) -> "PolyTable":
        return cls(np.array([[value]]))

    @classmethod
    def monomial(cls, a: int, b: int, value: complex = 1.0) -> "PolyTable":
        c = np.zeros((a + 1, b + 1), dtype=complex)
        c[a, b] = value
        return cls(c)

    @classmethod
    def coord_x(cls) -> "PolyTable":
        # x = (z + z̄)/2
        return cls(np.array([[0.0, 0.5], [0.5, 0.0]]))

    @classmethod
    def coord_y(cls) -> "PolyTable":
        # y = (z - z̄)/(2i)
        return cls(np.array([[0.0, 0.5j], [-0.5j, 0.0]]))

    @classmethod
    def from_pairs(cls, pairs) -> "PolyTable":
        """Build from [[a, b, re, im], ...] rows (the JSON wire format)."""
        if not pairs:
            return cls.zero()
        amax = max(int(p[0]) for p in pairs)
        bmax = max(int(p[1]) for p in pairs)
        c = np.zeros((amax + 1, bmax + 1), dtype=complex)
        for a, b, re, im in pairs:
            a, b = int(a), int(b)
            if a < 0 or b < 0:
                raise ValueError("table exponents must be nonnegative")
            c[a, b] += complex(float(re), float(im))
        return cls(c)

    def to_pairs(self) -> list[list[float]]:
        rows = []
        for a in range(self.coeffs.shape[0]):
            for b in range(self.coeffs.shape[1]):
                v = self.coeffs[a, b]
                if v != 0:
                    rows.append([a, b, float(v.real), float(v.imag)])
        return rows

    # -- structure ---------------------------------------------------------

    def trim(self) -> "PolyTable":
        """Drop all-zero trailing rows and columns."""
        c = self.coeffs
        nz = np.nonzero(c)
        if len(nz[0]) == 0:
            return PolyTable.zero()
        return PolyTable(c[: nz[0].max() + 1, : nz[1].max() + 1])

    @property
    def degree(self) -> int:
        """Max a+b over nonzero coefficients; 0 for the zero table."""
        nz = np.nonzero(self.coeffs)
        if len(nz[0]) == 0:
            return 0
        return int((nz[0] + nz[1]).max())

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def pad_to(self, shape) -> np.ndarray:
        c = np.zeros(shape, dtype=complex)
        c[: self.coeffs.shape[0], : self.coeffs.shape[1]] = self.coeffs
        return c

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        """f is real iff c[b,a] = conj(c[a,b]) on the square-padded table."""
        n = max(self.coeffs.shape)
        c = self.pad_to((n, n))
        return bool(np.max(np.abs(c - np.conj(c.T))) <= tol)

    def is_holomorphic(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[:, 1:]) <= tol))

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PolyTable.constant(other)
        shape = (max(self.coeffs.shape[0], other.coeffs.shape[0]),
                 max(self.coeffs.shape[1], other.coeffs.shape[1]))
        return PolyTable(self.pad_to(shape) + other.pad_to(shape))

    __radd__ = __add__

    def __neg__(self):
        return PolyTable(-self.coeffs)

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PolyTable.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return PolyTable(self.coeffs * other)
        return PolyTable(convolve2d(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def conjugate(self) -> "PolyTable":
        return PolyTable(np.conj(self.coeffs.T))

    def split_at(self, bound: int) -> tuple["PolyTable", "PolyTable"]:
        """Separate terms with a+b <= bound from the rest."""
        a = np.arange(self.coeffs.shape[0])[:, None]
        b = np.arange(self.coeffs.shape[1])[None, :]
        keep = (a + b) <= bound
        return (PolyTable(np.where(keep, self.coeffs, 0)).trim(),
                PolyTable(np.where(keep, 0, self.coeffs)).trim())

    # -- calculus ----------------------------------------------------------

    def partial_z(self) -> "PolyTable":
        c = self.coeffs
        if c.shape[0] == 1:
            return PolyTable(np.zeros((1, c.shape[1])))
        mult = np.arange(1, c.shape[0])[:, None]
        return PolyTable(c[1:, :] * mult)

    def partial_zbar(self) -> "PolyTable":
        c = self.coeffs
        if c.shape[1] == 1:
            return PolyTable(np.zeros((c.shape[0], 1)))
        mult = np.arange(1, c.shape[1])[None, :]
        return PolyTable(c[:, 1:] * mult)

    def partial_x(self) -> "PolyTable":
        return self.partial_z() + self.partial_zbar()

    def partial_y(self) -> "PolyTable":
        return 1j * self.partial_z() - 1j * self.partial_zbar()

    # -- evaluation --------------------------------------------------------

    def evaluate(self, z) -> np.ndarray:
        """Evaluate at complex chart points (vectorized)."""
        z = np.asarray(z, dtype=complex)
        zp = z[..., None] ** np.arange(self.coeffs.shape[0])
        zbp = np.conj(z)[..., None] ** np.arange(self.coeffs.shape[1])
        return np.einsum("...a,ab,...b->...", zp, self.coeffs, zbp)

    def sup_bound(self, radius: float) -> float:
        """Upper bound for |f| on |z| <= radius (coefficient l1 with weights)."""
        mag = np.abs(self.coeffs)
        ra = radius ** np.arange(mag.shape[0], dtype=float)
        rb = radius ** np.arange(mag.shape[1], dtype=float)
        return float(ra @ mag @ rb)

    def allclose(self, other: "PolyTable", tol: float = 0.0) -> bool:
        shape = (max(self.coeffs.shape[0], other.coeffs.shape[0]),
                 max(self.coeffs.shape[1], other.coeffs.shape[1]))
        return bool(np.max(np.abs(self.pad_to(shape) - other.pad_to(shape))) <= tol)
