"""Truncated series algebra on the model annulus T^n x (-p_max, p_max)^n.

Everything here lives in a fixed truncation space: total p-degree at most
Np, per-angle Fourier modes at most Nq.  Coefficients are stored over
complex exponentials with the hermitian symmetry that makes the series
real; arithmetic stays inside the space by dropping overflow terms.

The canonical action form is rho_can = sum_i p_i dq_i.  With the model
symplectic form oriented as dq ^ dp (so X_G = (G_p, -G_q) on (q, p)), a
Cartan computation gives

    L_{X_F} rho_can = d(sum_i p_i F_{p_i} - F),

hence the normalization step solves (E - 1)F = Psi slab by slab, where E
is the Euler operator in p.  Both Euler signs are available; SIGMA_MODEL
is the calibrated one, and `calibrate_sigma_model` rederives it from the
finite-difference Lie residual rather than trusting the constant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d, fftconvolve

from .errors import NotClosed, PreconditionError, Resonance
from .fd import diff5

NP_DEFAULT = 6
NQ_DEFAULT = 16
P_MAX_DEFAULT = 0.5
SIGMA_MODEL = -1          # calibrated; see calibrate_sigma_model
RESONANCE_TOL = 1e-14
FD_STEP = 3e-3


@dataclass(frozen=True)
class AnnulusPoint:
    q: tuple
    p: tuple
    p_max: float = P_MAX_DEFAULT

    def __post_init__(self):
        q = tuple(float(v) for v in np.atleast_1d(self.q))
        p = tuple(float(v) for v in np.atleast_1d(self.p))
        if len(q) != len(p) or len(q) not in (1, 2):
            raise ValueError("need matching q/p tuples with n in {1, 2}")
        if any(abs(v) > self.p_max for v in p):
            raise PreconditionError(f"|p| exceeds p_max = {self.p_max}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return len(self.q)


def _pdeg_mask(n: int, Np: int, Nq: int) -> np.ndarray:
    """Total p-degree at every coefficient slot, broadcast to the full shape."""
    if n == 1:
        return np.arange(Np + 1)[:, None] * np.ones((1, 2 * Nq + 1), dtype=int)
    m1 = np.arange(Np + 1)[:, None, None, None]
    m2 = np.arange(Np + 1)[None, :, None, None]
    return (m1 + m2) * np.ones((1, 1, 2 * Nq + 1, 2 * Nq + 1), dtype=int)


class QPSeries:
    """Real-valued truncated series sum c_m(q) p^m, Fourier in each angle."""

    __slots__ = ("n", "Np", "Nq", "coeffs")

    def __init__(self, n: int, Np: int, Nq: int, coeffs: np.ndarray):
        if n not in (1, 2):
            raise ValueError("n must be 1 or 2")
        shape = ((Np + 1, 2 * Nq + 1) if n == 1
                 else (Np + 1, Np + 1, 2 * Nq + 1, 2 * Nq + 1))
        c = np.asarray(coeffs, dtype=complex)
        if c.shape != shape:
            raise ValueError(f"coefficient array must have shape {shape}")
        herm = np.conj(c[..., ::-1] if n == 1 else c[..., ::-1, ::-1])
        scale = 1.0 + float(np.max(np.abs(c))) if c.size else 1.0
        if float(np.max(np.abs(c - herm))) > 1e-10 * scale:
            raise ValueError("coefficients do not describe a real series")
        c = (c + herm) / 2
        c[_pdeg_mask(n, Np, Nq) > Np] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "Np", Np)
        object.__setattr__(self, "Nq", Nq)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, *a):
        raise AttributeError("QPSeries is immutable")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, n: int = 1, Np: int = NP_DEFAULT, Nq: int = NQ_DEFAULT) -> "QPSeries":
        shape = ((Np + 1, 2 * Nq + 1) if n == 1
                 else (Np + 1, Np + 1, 2 * Nq + 1, 2 * Nq + 1))
        return cls(n, Np, Nq, np.zeros(shape, dtype=complex))

    @classmethod
    def harmonic(cls, n: int, Np: int, Nq: int, m, j, kind, value: float) -> "QPSeries":
        """value * p^m * prod_i trig(j_i q_i) with per-angle kind cos|sin."""
        m = tuple(np.atleast_1d(m).astype(int))
        j = tuple(np.atleast_1d(j).astype(int))
        kind = (kind,) if isinstance(kind, str) else tuple(kind)
        if len(m) != n or len(j) != n or len(kind) != n:
            raise ValueError("m, j, kind must each have length n")
        if sum(m) > Np or any(v < 0 for v in m):
            raise ValueError("p-degree outside the truncation space")
        if any(abs(v) > Nq for v in j) or any(v < 0 for v in j):
            raise ValueError("Fourier mode outside the truncation space")
        out = cls.zero(n, Np, Nq)
        c = out.coeffs.copy()
        c.setflags(write=True)
        # each angle factor as a +-j pair of exponential weights
        factors = []
        for ji, ki in zip(j, kind):
            if ki == "cos":
                factors.append([(ji, 0.5), (-ji, 0.5)] if ji else [(0, 1.0)])
            elif ki == "sin":
                factors.append([(ji, -0.5j), (-ji, 0.5j)] if ji else [(0, 0.0)])
            else:
                raise ValueError("kind must be 'cos' or 'sin'")
        for combo in itertools.product(*factors):
            w = value
            idx = list(m)
            for ji, wi in combo:
                w = w * wi
                idx.append(ji + Nq)
            c[tuple(idx)] += w
        return cls(n, Np, Nq, c)

    @classmethod
    def p_power(cls, n: int, Np: int, Nq: int, m, value: float = 1.0) -> "QPSeries":
        return cls.harmonic(n, Np, Nq, m, (0,) * n, ("cos",) * n, value)

    @classmethod
    def from_terms(cls, n: int, Np: int, Nq: int, terms) -> "QPSeries":
        """terms: iterable of (m..., (j, kind) per angle, value) rows."""
        out = cls.zero(n, Np, Nq)
        for row in terms:
            row = list(row)
            m = [int(v) for v in row[:n]]
            value = float(row[-1])
            jk = row[n:-1]
            j = [int(jk[2 * i]) for i in range(n)]
            kind = [str(jk[2 * i + 1]) for i in range(n)]
            out = out + cls.harmonic(n, Np, Nq, m, j, kind, value)
        return out

    def to_terms(self) -> list:
        """Inverse of from_terms; emits only nonzero real-basis coefficients."""
        rows = []
        c = self.coeffs
        Nq = self.Nq
        if self.n == 1:
            for m in range(self.Np + 1):
                u0 = c[m, Nq]
                if u0 != 0:
                    rows.append([m, 0, "cos", float(u0.real)])
                for j in range(1, Nq + 1):
                    u = c[m, Nq + j]
                    if u.real != 0:
                        rows.append([m, j, "cos", 2 * float(u.real)])
                    if u.imag != 0:
                        rows.append([m, j, "sin", -2 * float(u.imag)])
            return rows
        for m1 in range(self.Np + 1):
            for m2 in range(self.Np + 1 - m1):
                block = c[m1, m2]
                u0 = block[Nq, Nq]
                if u0 != 0:
                    rows.append([m1, m2, 0, "cos", 0, "cos", float(u0.real)])
                for j2 in range(1, Nq + 1):
                    u = block[Nq, Nq + j2]
                    if u.real != 0:
                        rows.append([m1, m2, 0, "cos", j2, "cos", 2 * float(u.real)])
                    if u.imag != 0:
                        rows.append([m1, m2, 0, "cos", j2, "sin", -2 * float(u.imag)])
                for j1 in range(1, Nq + 1):
                    u = block[Nq + j1, Nq]
                    if u.real != 0:
                        rows.append([m1, m2, j1, "cos", 0, "cos", 2 * float(u.real)])
                    if u.imag != 0:
                        rows.append([m1, m2, j1, "sin", 0, "cos", -2 * float(u.imag)])
                    for j2 in range(1, Nq + 1):
                        u = block[Nq + j1, Nq + j2]
                        v = block[Nq + j1, Nq - j2]
                        cc = 2 * (u.real + v.real)
                        ss = 2 * (v.real - u.real)
                        sc = -2 * (u.imag + v.imag)
                        cs = 2 * (v.imag - u.imag)
                        for kinds, val in ((("cos", "cos"), cc), (("sin", "sin"), ss),
                                           (("sin", "cos"), sc), (("cos", "sin"), cs)):
                            if val != 0:
                                rows.append([m1, m2, j1, kinds[0], j2, kinds[1],
                                             float(val)])
        return rows

    # -- algebra ---------------------------------------------------------------

    def _like(self, coeffs: np.ndarray) -> "QPSeries":
        return QPSeries(self.n, self.Np, self.Nq, coeffs)

    def _check_compatible(self, other: "QPSeries"):
        if (self.n, self.Np, self.Nq) != (other.n, other.Np, other.Nq):
            raise ValueError("series live in different truncation spaces")

    def __add__(self, other: "QPSeries") -> "QPSeries":
        self._check_compatible(other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other: "QPSeries") -> "QPSeries":
        self._check_compatible(other)
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self) -> "QPSeries":
        return self._like(-self.coeffs)

    def __mul__(self, s):
        if isinstance(s, QPSeries):
            return self._product(s)
        return self._like(self.coeffs * float(s))

    __rmul__ = __mul__

    def _product(self, other: "QPSeries") -> "QPSeries":
        self._check_compatible(other)
        Np, Nq = self.Np, self.Nq
        if self.n == 1:
            full = convolve2d(self.coeffs, other.coeffs)
            return self._like(full[: Np + 1, Nq: 3 * Nq + 1])
        full = fftconvolve(self.coeffs, other.coeffs)
        out = full[: Np + 1, : Np + 1, Nq: 3 * Nq + 1, Nq: 3 * Nq + 1]
        herm = np.conj(out[..., ::-1, ::-1])
        return self._like((out + herm) / 2)

    def dq(self, i: int = 0) -> "QPSeries":
        js = 1j * np.arange(-self.Nq, self.Nq + 1)
        axis = self.coeffs.ndim - self.n + i
        shape = [1] * self.coeffs.ndim
        shape[axis] = len(js)
        return self._like(self.coeffs * js.reshape(shape))

    def dp(self, i: int = 0) -> "QPSeries":
        c = self.coeffs
        out = np.zeros_like(c)
        if self.n == 1:
            out[:-1] = c[1:] * np.arange(1, self.Np + 1)[:, None]
        elif i == 0:
            out[:-1] = c[1:] * np.arange(1, self.Np + 1)[:, None, None, None]
        else:
            out[:, :-1] = c[:, 1:] * np.arange(1, self.Np + 1)[None, :, None, None]
        return self._like(out)

    def shift_p(self, i: int = 0) -> "QPSeries":
        """Multiply by p_i; the top slab falls off the truncation space."""
        c = self.coeffs
        out = np.zeros_like(c)
        if self.n == 1:
            out[1:] = c[:-1]
        elif i == 0:
            out[1:] = c[:-1]
        else:
            out[:, 1:] = c[:, :-1]
        return self._like(out)

    def slab_scaled(self, factor_of_degree) -> "QPSeries":
        """Scale each total-p-degree slab by factor_of_degree(m)."""
        deg = _pdeg_mask(self.n, self.Np, self.Nq)
        factors = np.array([factor_of_degree(m) for m in range(self.Np * self.n + 1)])
        return self._like(self.coeffs * factors[deg])

    def slab_sup(self, m: int) -> float:
        deg = _pdeg_mask(self.n, self.Np, self.Nq)
        vals = np.abs(self.coeffs[deg == m])
        return float(vals.max()) if vals.size else 0.0

    def sup_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def allclose(self, other: "QPSeries", tol: float = 1e-12) -> bool:
        self._check_compatible(other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= tol)

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, q, p) -> np.ndarray:
        """Values at angle/radial arrays shaped (..., n); (...) allowed for n=1."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.n == 1:
            # (..., 1) point arrays use the trailing-axis convention like n = 2
            out_shape = q.shape[:-1] if (q.ndim >= 2 and q.shape[-1] == 1) else q.shape
            qs = q.reshape(-1, 1)
            ps = p.reshape(-1, 1)
        else:
            if q.shape[-1] != self.n or p.shape[-1] != self.n:
                raise ValueError("points must have a trailing axis of length n")
            out_shape = q.shape[:-1]
            qs = q.reshape(-1, self.n)
            ps = p.reshape(-1, self.n)
        js = np.arange(-self.Nq, self.Nq + 1)
        ms = np.arange(self.Np + 1)
        if self.n == 1:
            e = np.exp(1j * qs[:, 0, None] * js[None, :])
            pm = ps[:, 0, None] ** ms[None, :]
            vals = np.einsum("nm,mj,nj->n", pm, self.coeffs, e, optimize=True)
        else:
            e1 = np.exp(1j * qs[:, 0, None] * js[None, :])
            e2 = np.exp(1j * qs[:, 1, None] * js[None, :])
            pm1 = ps[:, 0, None] ** ms[None, :]
            pm2 = ps[:, 1, None] ** ms[None, :]
            vals = np.einsum("na,nb,abjk,nj,nk->n", pm1, pm2, self.coeffs,
                             e1, e2, optimize=True)
        return vals.real.reshape(out_shape)


# -- Euler-operator algebra ------------------------------------------------------

def apply_euler(F: QPSeries, sigma: int) -> QPSeries:
    """(sum_i p_i d/dp_i + sigma) F, diagonal on p-monomials."""
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    return F.slab_scaled(lambda m: m + sigma)


def euler_solve(Psi: QPSeries, sigma: int) -> QPSeries:
    """Solve slab by slab; sigma = -1 makes the linear slab resonant."""
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if sigma == -1:
        bad = Psi.slab_sup(1)
        if bad > RESONANCE_TOL:
            raise Resonance(
                f"linear-in-p coefficients of size {bad:.3e} cannot be divided")

    def inv(m):
        d = m + sigma
        return 0.0 if d == 0 else 1.0 / d

    return Psi.slab_scaled(inv)


# -- forms on the annulus ---------------------------------------------------------

@dataclass(frozen=True)
class AnnulusForm:
    """One-form sum a_i dp_i + b_i dq_i with series coefficients."""

    p_comps: tuple
    q_comps: tuple

    def __post_init__(self):
        p = tuple(self.p_comps)
        q = tuple(self.q_comps)
        if len(p) != len(q) or len(p) not in (1, 2):
            raise ValueError("need matching component tuples with n in {1, 2}")
        for s in p + q:
            if (s.n, s.Np, s.Nq) != (p[0].n, p[0].Np, p[0].Nq):
                raise ValueError("components live in different truncation spaces")
        if p[0].n != len(p):
            raise ValueError("component count must match the series arity")
        object.__setattr__(self, "p_comps", p)
        object.__setattr__(self, "q_comps", q)

    @property
    def n(self) -> int:
        return len(self.p_comps)

    def __add__(self, other: "AnnulusForm") -> "AnnulusForm":
        return AnnulusForm(tuple(a + b for a, b in zip(self.p_comps, other.p_comps)),
                           tuple(a + b for a, b in zip(self.q_comps, other.q_comps)))

    def __sub__(self, other: "AnnulusForm") -> "AnnulusForm":
        return AnnulusForm(tuple(a - b for a, b in zip(self.p_comps, other.p_comps)),
                           tuple(a - b for a, b in zip(self.q_comps, other.q_comps)))

    def __mul__(self, s: float) -> "AnnulusForm":
        return AnnulusForm(tuple(a * s for a in self.p_comps),
                           tuple(b * s for b in self.q_comps))

    __rmul__ = __mul__

    def evaluate(self, q, p):
        """(dp coefficients, dq coefficients) at the given points, (N, n) each."""
        q = np.asarray(q, dtype=float).reshape(-1, self.n)
        p = np.asarray(p, dtype=float).reshape(-1, self.n)
        av = np.stack([s.evaluate(q, p) for s in self.p_comps], axis=-1)
        bv = np.stack([s.evaluate(q, p) for s in self.q_comps], axis=-1)
        return av, bv


def rho_can(n: int = 1, Np: int = NP_DEFAULT, Nq: int = NQ_DEFAULT) -> AnnulusForm:
    """The canonical action form sum p_i dq_i."""
    zero = QPSeries.zero(n, Np, Nq)
    ps = []
    for i in range(n):
        m = [0] * n
        m[i] = 1
        ps.append(QPSeries.p_power(n, Np, Nq, m))
    return AnnulusForm((zero,) * n, tuple(ps))


def exterior_derivative(Psi: QPSeries) -> AnnulusForm:
    n = Psi.n
    return AnnulusForm(tuple(Psi.dp(i) for i in range(n)),
                       tuple(Psi.dq(i) for i in range(n)))


def form_curl_sup(form: AnnulusForm) -> float:
    """Sup coefficient norm of the exterior derivative, exactly on series."""
    n = form.n
    a, b = form.p_comps, form.q_comps
    worst = 0.0
    for i in range(n):
        for j in range(n):
            worst = max(worst, (a[i].dq(j) - b[j].dp(i)).sup_coeff())
    if n == 2:
        worst = max(worst, (a[0].dp(1) - a[1].dp(0)).sup_coeff())
        worst = max(worst, (b[0].dq(1) - b[1].dq(0)).sup_coeff())
    return worst


def annulus_grid(n: int = 1, n_q: int = 16, n_p: int = 7,
                 p_max: float = P_MAX_DEFAULT, margin: float = 0.65):
    """Product grid (q, p) as (N, n) arrays, kept inside the validity region."""
    qv = np.linspace(0.0, 2 * np.pi, n_q, endpoint=False)
    pv = np.linspace(-margin * p_max, margin * p_max, n_p)
    axes = [qv] * n + [pv] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    q = np.stack(flat[:n], axis=-1)
    p = np.stack(flat[n:], axis=-1)
    return q, p


def _fd_partial(series: QPSeries, which: str, i: int, q, p, h: float = FD_STEP):
    """Five-point derivative of the evaluated series in one coordinate."""
    if which == "q":
        return diff5(lambda t: series.evaluate(_bump(q, i, t), p), 0.0, h)
    return diff5(lambda t: series.evaluate(q, _bump(p, i, t)), 0.0, h)


def _bump(arr: np.ndarray, i: int, t) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out[..., i] = out[..., i] + t
    return out


def lie_derivative_residual(F: QPSeries, Psi: QPSeries, grid) -> float:
    """sup |L_{X_F} rho_can - d Psi| over the grid, by finite differences.

    Cartan route: L_{X_F} rho_can = d(sum p_i F_{p_i}) - dF with X_F the
    dq^dp Hamiltonian field.  The d's on the left are finite differences
    of series evaluations while dF comes from exact coefficients, so the
    comparison is not an algebraic identity.
    """
    q, p = grid
    q = np.asarray(q, dtype=float).reshape(-1, F.n)
    p = np.asarray(p, dtype=float).reshape(-1, F.n)
    if np.max(np.abs(p)) > P_MAX_DEFAULT:
        raise PreconditionError("grid leaves the annulus")
    s = QPSeries.zero(F.n, F.Np, F.Nq)
    for i in range(F.n):
        s = s + F.dp(i).shift_p(i)
    worst = 0.0
    for i in range(F.n):
        lq = _fd_partial(s, "q", i, q, p) - F.dq(i).evaluate(q, p)
        lp = _fd_partial(s, "p", i, q, p) - F.dp(i).evaluate(q, p)
        dq_psi = _fd_partial(Psi, "q", i, q, p)
        dp_psi = _fd_partial(Psi, "p", i, q, p)
        worst = max(worst,
                    float(np.max(np.abs(lq - dq_psi))),
                    float(np.max(np.abs(lp - dp_psi))))
    return worst


def dw_potential(form: AnnulusForm, fd_tol: float = 1e-6) -> QPSeries:
    """Primitive of a closed 1-form vanishing on p = 0, by radial integration.

    Each dp-component term c p^alpha picks up one extra power of p and a
    division by its new total degree; the result is the homotopy-formula
    primitive, automatically O(p^2) and vanishing on the zero section.
    """
    n = form.n
    curl = form_curl_sup(form)
    if curl > 1e-8:
        raise NotClosed(f"exterior derivative has coefficients of size {curl:.3e}")
    for s in form.p_comps + form.q_comps:
        if s.slab_sup(0) > 1e-12:
            raise PreconditionError("form does not vanish on the zero section")
    ref = form.p_comps[0]
    Psi = QPSeries.zero(n, ref.Np, ref.Nq)
    for i in range(n):
        Psi = Psi + form.p_comps[i].shift_p(i)
    Psi = Psi.slab_scaled(lambda m: 0.0 if m == 0 else 1.0 / m)
    # paranoia: the construction cannot produce low slabs, keep them exactly zero
    Psi = Psi.slab_scaled(lambda m: 0.0 if m <= 1 else 1.0)

    q, p = annulus_grid(n, n_q=8 if n == 2 else 16, n_p=5 if n == 2 else 7)
    av, bv = form.evaluate(q, p)
    for i in range(n):
        rq = np.max(np.abs(_fd_partial(Psi, "q", i, q, p) - bv[:, i]))
        rp = np.max(np.abs(_fd_partial(Psi, "p", i, q, p) - av[:, i]))
        if max(rq, rp) > fd_tol:
            raise NotClosed(
                f"primitive reproduces the form only to {max(rq, rp):.3e}")
    return Psi


def calibrate_sigma_model(Np: int = NP_DEFAULT, Nq: int = NQ_DEFAULT):
    """Pick the Euler sign that closes L_{X_F} rho_can = d Psi numerically."""
    Psi = QPSeries.harmonic(1, Np, Nq, 2, 1, "cos", 1.0)
    grid = annulus_grid(1)
    res = {s: lie_derivative_residual(euler_solve(Psi, s), Psi, grid) for s in (1, -1)}
    sigma = min(res, key=res.get)
    return sigma, res


def _flow_pullback_mismatch(F: QPSeries, Psi: QPSeries, grid,
                            t: float = 1.0, steps: int = 200) -> float:
    """sup |(phi_t)^* rho_can - (rho_can + d Psi)| for the X_F flow."""
    n = F.n
    q0, p0 = grid
    q0 = np.asarray(q0, dtype=float).reshape(-1, n)
    p0 = np.asarray(p0, dtype=float).reshape(-1, n)
    N = q0.shape[0]
    Fp = [F.dp(i) for i in range(n)]
    Fq = [F.dq(i) for i in range(n)]
    # exact Jacobian entries of the field X = (F_p, -F_q)
    dXq = [[Fp[i].dq(j) for j in range(n)] + [Fp[i].dp(j) for j in range(n)]
           for i in range(n)]
    dXp = [[(-1.0) * Fq[i].dq(j) for j in range(n)]
           + [(-1.0) * Fq[i].dp(j) for j in range(n)] for i in range(n)]
    rows = dXq + dXp

    def rhs(state, jac):
        q = state[:, :n]
        p = state[:, n:]
        vel = np.empty_like(state)
        for i in range(n):
            vel[:, i] = Fp[i].evaluate(q, p)
            vel[:, n + i] = -Fq[i].evaluate(q, p)
        a = np.empty((N, 2 * n, 2 * n))
        for r in range(2 * n):
            for c in range(2 * n):
                a[:, r, c] = rows[r][c].evaluate(q, p)
        return vel, np.einsum("nij,njk->nik", a, jac)

    state = np.concatenate([q0, p0], axis=1)
    jac = np.broadcast_to(np.eye(2 * n), (N, 2 * n, 2 * n)).copy()
    h = t / steps
    for _ in range(steps):
        k1s, k1j = rhs(state, jac)
        k2s, k2j = rhs(state + 0.5 * h * k1s, jac + 0.5 * h * k1j)
        k3s, k3j = rhs(state + 0.5 * h * k2s, jac + 0.5 * h * k2j)
        k4s, k4j = rhs(state + h * k3s, jac + h * k3j)
        state = state + (h / 6) * (k1s + 2 * k2s + 2 * k3s + k4s)
        jac = jac + (h / 6) * (k1j + 2 * k2j + 2 * k3j + k4j)

    p_end = state[:, n:]
    worst = 0.0
    for j in range(2 * n):
        pulled = np.einsum("ni,ni->n", p_end, jac[:, :n, j])
        if j < n:
            target = p0[:, j] + Psi.dq(j).evaluate(q0, p0)
        else:
            target = Psi.dp(j - n).evaluate(q0, p0)
        worst = max(worst, float(np.max(np.abs(pulled - target))))
    return worst


def normalize_neighborhood(im_rho0: AnnulusForm, run_flow_check: bool = False,
                           grid=None):
    """Normalize Im rho around a model Bohr-Sommerfeld zero section.

    Pipeline: Psi = dw_potential(rho_can - Im rho0 / 2pi), then F with
    (E - 1)F = Psi, then a finite-difference certificate that X_F's Lie
    derivative reproduces d Psi.  F vanishes on p = 0, so the flow fixes
    the section while killing the linear discrepancy.
    """
    n = im_rho0.n
    for s in im_rho0.p_comps + im_rho0.q_comps:
        if s.slab_sup(0) > 1e-12:
            raise PreconditionError("Im rho does not vanish on the zero section")
    ref = im_rho0.p_comps[0]
    beta = rho_can(n, ref.Np, ref.Nq) - im_rho0 * (1.0 / (2 * np.pi))
    Psi = dw_potential(beta)
    F = euler_solve(Psi, SIGMA_MODEL)
    if grid is None:
        grid = annulus_grid(n, n_q=8 if n == 2 else 16, n_p=5 if n == 2 else 7)
    diagnostics = {
        "sigma_model": SIGMA_MODEL,
        "residual_inf": lie_derivative_residual(F, Psi, grid),
        "f_on_s0_sup": F.slab_sup(0),
        "psi_sup": Psi.sup_coeff(),
    }
    if run_flow_check:
        diagnostics["flow_mismatch"] = _flow_pullback_mismatch(F, Psi, grid)
    return F, diagnostics
