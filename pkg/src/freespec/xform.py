"""Stieltjes and R transforms, moments and cumulants.

A :class:`GSource` wraps anything whose Stieltjes transform ``G`` can be
evaluated: an empirical spectrum, a tabulated density, or a closed-form
law.  The R transform is obtained from the functional inverse of ``G``,
``R(w) = G^{-1}(w) - 1/w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import (InvalidInputError, InversionError, PoleError,
                         PrincipalValueError, UnsupportedAnalyticError)
from .spectral import DensityEstimate, LawSpec, SpectrumSample, law_support

POLE_TOL = 1e-12
NEWTON_TOL = 1e-10
NEWTON_MAXITER = 200
MAX_HALVINGS = 30


# ----------------------------------------------------------------------------
# Contours and signatures


@dataclass(frozen=True)
class ContourSpec:
    """Horizontal contour ``x + i*eps`` over ``nodes`` equally spaced x values."""

    x_min: float = -3.0
    x_max: float = 3.0
    nodes: int = 241
    eps: float = 0.1

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise InvalidInputError(f"need x_min < x_max, got {self.x_min}, {self.x_max}")
        if int(self.nodes) != self.nodes or self.nodes < 8:
            raise InvalidInputError(f"contour needs at least 8 nodes, got {self.nodes}")
        if not self.eps > 0:
            raise InvalidInputError(f"eps must be positive, got {self.eps}")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, int(self.nodes))

    @property
    def z(self) -> np.ndarray:
        return self.x + 1j * self.eps


@dataclass(frozen=True)
class RSignature:
    """Samples of G along a z-contour and of R along the induced w-contour."""

    z_nodes: np.ndarray
    w_nodes: np.ndarray
    r_values: np.ndarray
    source_id: str = ""
    contour: Optional[ContourSpec] = None
    dropped: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        z = np.asarray(self.z_nodes, dtype=complex).ravel()
        w = np.asarray(self.w_nodes, dtype=complex).ravel()
        r = np.asarray(self.r_values, dtype=complex).ravel()
        if not (z.size == w.size == r.size):
            raise InvalidInputError("z, w and R node arrays must have equal length")
        if z.size < 8:
            raise InvalidInputError(f"signature needs at least 8 nodes, got {z.size}")
        if np.any(np.abs(w) == 0):
            raise InvalidInputError("w nodes must be nonzero")
        for a in (z, w, r):
            a.setflags(write=False)
        object.__setattr__(self, "z_nodes", z)
        object.__setattr__(self, "w_nodes", w)
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "dropped", tuple(int(i) for i in self.dropped))

    def __len__(self):
        return self.w_nodes.size


# ----------------------------------------------------------------------------
# G sources


class GSource:
    """Evaluable Stieltjes transform.

    Build one with :meth:`empirical`, :meth:`density` or :meth:`analytic`.
    Calls are vectorized over ``z``.
    """

    def __init__(self, kind, payload, source_id=None):
        self.kind = kind
        self.payload = payload
        self.source_id = source_id or kind
        if kind == "empirical":
            self._atoms = np.asarray(payload.eigenvalues, dtype=float)
            self._weights = np.full(self._atoms.size, 1.0 / self._atoms.size)
        elif kind == "density":
            w = payload.weights() * payload.density
            total = w.sum()
            if not total > 0:
                raise InvalidInputError("density has zero mass")
            self._atoms = payload.grid
            self._weights = w / total
        elif kind == "analytic":
            if payload.kind == "free-wishart-sum":
                raise UnsupportedAnalyticError(
                    "no closed-form G for free-wishart-sum; build it with "
                    "freespec.freeconv (R-transform addition of mp sources)")
        else:
            raise InvalidInputError(f"unknown G source kind {kind!r}")

    @classmethod
    def empirical(cls, spectrum: SpectrumSample, source_id=None):
        return cls("empirical", spectrum, source_id)

    @classmethod
    def density(cls, estimate: DensityEstimate, source_id=None):
        return cls("density", estimate, source_id)

    @classmethod
    def analytic(cls, law: LawSpec, source_id=None):
        return cls("analytic", law, source_id)

    def __repr__(self):
        return f"GSource({self.kind!r}, id={self.source_id!r})"

    @property
    def m1(self) -> float:
        """First moment of the underlying measure."""
        if self.kind == "analytic":
            return self.payload.mean
        return float(np.dot(self._weights, self._atoms))

    @property
    def variance(self) -> float:
        if self.kind == "analytic":
            law = self.payload
            unit = 1.0 if law.kind == "semicircle" else law.c
            return unit * law.sigma2 ** 2
        return float(np.dot(self._weights, (self._atoms - self.m1) ** 2))

    @property
    def support(self) -> tuple:
        if self.kind == "analytic":
            return law_support(self.payload)
        if self.kind == "density":
            return self.payload.support
        return float(self._atoms[0]), float(self._atoms[-1])

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "analytic":
            out = _analytic_g(self.payload, z)
        else:
            out = self._discrete(z, power=1)
        return complex(out) if out.ndim == 0 else out

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "analytic":
            out = _analytic_dg(self.payload, z, _analytic_g(self.payload, z))
        else:
            out = -self._discrete(z, power=2)
        return complex(out) if out.ndim == 0 else out

    def _discrete(self, z, power):
        zz = np.atleast_1d(z)
        diff = zz[:, None] - self._atoms[None, :]
        if self.kind == "empirical":
            if np.any(np.abs(diff) < POLE_TOL):
                raise PoleError("z coincides with an eigenvalue")
        else:
            lo, hi = self.support
            bad = (zz.imag == 0) & (zz.real >= lo) & (zz.real <= hi)
            if np.any(bad):
                raise PrincipalValueError(
                    "z lies on the real axis inside the support; principal values are not supported")
        out = (self._weights[None, :] / diff ** power).sum(axis=1)
        return out.reshape(np.shape(z))


def _mp_params(law):
    c = law.c
    return c, (1 - math.sqrt(c)) ** 2, (1 + math.sqrt(c)) ** 2


def _analytic_g(law: LawSpec, z):
    """Closed-form G on the branch with G(z) ~ 1/z at infinity.

    Writing sqrt((z-a)(z-b)) as sqrt(z-a)*sqrt(z-b) with principal roots puts
    the cut exactly on [a, b] and makes the product behave like z at infinity.
    """
    v = law.sigma2
    u = np.asarray(z, dtype=complex) / v
    if law.kind == "semicircle":
        g = (u - np.sqrt(u - 2) * np.sqrt(u + 2)) / 2
    elif law.kind == "mp":
        c, a1, a2 = _mp_params(law)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (u + c - 1 - np.sqrt(u - a1) * np.sqrt(u - a2)) / (2 * c * u)
        if np.any(u == 0):
            raise PoleError("G of the M-P law is evaluated at z = 0")
    else:
        raise UnsupportedAnalyticError(
            "no closed-form G for free-wishart-sum; use freespec.freeconv")
    return g / v


def _analytic_dg(law: LawSpec, z, g):
    # differentiate the quadratic each closed form satisfies
    v = law.sigma2
    u = np.asarray(z, dtype=complex) / v
    gu = g * v
    if law.kind == "semicircle":
        d = gu / (2 * gu - u)
    else:
        c = law.c
        d = (gu - c * gu ** 2) / (2 * c * u * gu - (u + c - 1))
    return d / v ** 2


def _analytic_relation(law: LawSpec, w):
    """Residual and z-derivative of the algebraic equation tying z to G(z) = w."""
    v = law.sigma2
    u = w * v

    if law.kind == "semicircle":
        # G^2 - zG + 1 = 0 in unit variables
        def f(z):
            return u * u - (z / v) * u + 1, -u / v
    else:
        c = law.c

        def f(z):
            zu = z / v
            return c * zu * u * u - (zu + c - 1) * u + 1, (c * u * u - u) / v
    return f


def stieltjes_empirical(s: SpectrumSample, z):
    """(1/N) sum_i 1 / (z - lambda_i)."""
    return GSource.empirical(s)(z)


def stieltjes_from_density(d: DensityEstimate, z):
    """Trapezoid quadrature of rho(s) / (z - s), with rho renormalized to unit mass."""
    return GSource.density(d)(z)


def stieltjes_analytic(law: LawSpec, z):
    """Closed-form Stieltjes transform of a semicircle or M-P law."""
    if law.kind == "free-wishart-sum":
        raise UnsupportedAnalyticError(
            "no closed-form G for free-wishart-sum; use freespec.freeconv")
    z = np.asarray(z, dtype=complex)
    out = _analytic_g(law, z)
    return complex(out) if out.ndim == 0 else out


def invert_stieltjes_density(g: GSource, grid, eps: float) -> DensityEstimate:
    """Recover a density as -Im G(x + i eps) / pi, clamped at zero."""
    if not eps > 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    grid = np.asarray(grid, dtype=float)
    raw = -np.asarray(g(grid + 1j * eps)).imag / np.pi
    clamped = np.maximum(raw, 0.0)
    meta = {"eps": eps, "clamped_mass": float(np.max(clamped - raw, initial=0.0)),
            "source": g.source_id}
    return DensityEstimate(grid, clamped, (grid[0], grid[-1]), meta=meta)


# ----------------------------------------------------------------------------
# Moments and cumulants


def moments(s: SpectrumSample, kmax: int) -> np.ndarray:
    """m_k = (1/N) sum lambda^k for k = 1..kmax."""
    if kmax < 1:
        raise InvalidInputError(f"kmax must be >= 1, got {kmax}")
    lam = s.eigenvalues
    return np.array([np.mean(lam ** k) for k in range(1, kmax + 1)])


def _series_powers(coeffs, order):
    """Rows p[s] hold the coefficients of (1 + sum coeffs_k x^k)^s up to x^order."""
    base = np.zeros(order + 1)
    base[0] = 1.0
    base[1:] = coeffs[:order]
    powers = [np.eye(1, order + 1).ravel()]
    for _ in range(order):
        powers.append(np.convolve(powers[-1], base)[: order + 1])
    return powers


def free_moments(kappa) -> np.ndarray:
    """Moments from free cumulants via xi(z) = 1 + zeta(z xi(z)), order by order."""
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.size
    m = np.zeros(n)
    for order in range(1, n + 1):
        powers = _series_powers(m, order)
        m[order - 1] = sum(kappa[s - 1] * powers[s][order - s] for s in range(1, order + 1))
    return m


def free_cumulants(m) -> np.ndarray:
    """Free cumulants from moments by matching coefficients of xi = 1 + zeta(z xi)."""
    m = np.asarray(m, dtype=float)
    if m.size < 1:
        raise InvalidInputError("need at least one moment")
    n = m.size
    kappa = np.zeros(n)
    powers = _series_powers(m, n)
    for order in range(1, n + 1):
        # m_n = sum_s kappa_s [z^(n-s)] xi^s; the s = n term is kappa_n itself
        lower = sum(kappa[s - 1] * powers[s][order - s] for s in range(1, order))
        kappa[order - 1] = m[order - 1] - lower
    return kappa


def complete_bell(kappa) -> np.ndarray:
    """Complete Bell polynomials B_1..B_K evaluated at kappa_1..kappa_K."""
    kappa = np.asarray(kappa, dtype=float)
    b = np.zeros(kappa.size + 1)
    b[0] = 1.0
    for n in range(1, kappa.size + 1):
        b[n] = sum(math.comb(n - 1, j - 1) * kappa[j - 1] * b[n - j] for j in range(1, n + 1))
    return b[1:]


def classical_cumulants(m) -> np.ndarray:
    """Invert m_n = B_n(kappa_1, ..., kappa_n) one order at a time."""
    m = np.asarray(m, dtype=float)
    if m.size < 1:
        raise InvalidInputError("need at least one moment")
    kappa = np.zeros(m.size)
    for n in range(1, m.size + 1):
        # B_n is linear in kappa_n with unit coefficient
        trial = kappa[:n].copy()
        trial[n - 1] = 0.0
        kappa[n - 1] = m[n - 1] - complete_bell(trial)[n - 1]
    return kappa


# ----------------------------------------------------------------------------
# Functional inverse and R transform


def _newton(func, z0, target_scale, keep_upper):
    """Damped Newton for func(z) = (residual, derivative)."""
    z = complex(z0)
    tol = NEWTON_TOL * (1 + target_scale)
    res, der = func(z)
    err = abs(res)
    for _ in range(NEWTON_MAXITER):
        if err <= tol:
            return _polish(func, z, res, der, err)
        if der == 0 or not np.isfinite(der):
            break
        step = res / der
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = z - lam * step
            if not (keep_upper and cand.imag <= 0):
                try:
                    cres, cder = func(cand)
                except PoleError:
                    cres = None
                if cres is not None and np.isfinite(cres) and abs(cres) < err:
                    break
            lam /= 2
        else:
            break
        z, res, der, err = cand, cres, cder, abs(cres)
    if err <= tol:
        return z, err
    raise InversionError(
        f"Newton inversion did not converge (residual {err:.3e})", last=z, residual=err)


def _polish(func, z, res, der, err):
    """One extra full Newton step, kept only if it lowers the residual."""
    if der == 0 or not np.isfinite(der):
        return z, err
    cand = z - res / der
    try:
        cres, _ = func(cand)
    except PoleError:
        return z, err
    if np.isfinite(cres) and abs(cres) < err:
        return cand, abs(cres)
    return z, err


def inverse_g(g: GSource, w, guess=None) -> complex:
    """Solve G(z) = w for z.

    Empirical and density sources use damped Newton on ``G(z) - w`` and stay
    in the upper half-plane when ``Im w < 0``.  Closed-form laws solve the
    algebraic equation that ``G`` satisfies, which also reaches values of w
    that lie on the continuation of G beyond its principal sheet.
    """
    w = complex(w)
    if w == 0:
        raise PoleError("G^{-1} is singular at w = 0")
    z0 = complex(guess) if guess is not None else 1 / w + g.m1
    if g.kind == "analytic":
        func = _analytic_relation(g.payload, w)
        z, _ = _newton(func, z0, abs(w), keep_upper=False)
        return z

    def func(z):
        return g(z) - w, g.derivative(z)

    keep_upper = w.imag < 0
    if keep_upper and z0.imag <= 0:
        z0 = complex(z0.real, max(abs(z0.imag), 1e-3))
    try:
        z, _ = _newton(func, z0, abs(w), keep_upper)
    except InversionError as first:
        fallback = 1 / w + g.m1
        if guess is None or fallback == z0:
            raise
        try:
            z, _ = _newton(func, complex(fallback.real, max(fallback.imag, 1e-3))
                           if keep_upper else fallback, abs(w), keep_upper)
        except InversionError:
            raise first
    return z


def r_transform(g: GSource, w, guess=None) -> complex:
    """R(w) = G^{-1}(w) - 1/w."""
    w = complex(w)
    if w == 0:
        raise PoleError("R(0) is the first free cumulant; evaluate it as the first moment")
    return inverse_g(g, w, guess) - 1 / w


def r_at(g: GSource, w_nodes, guesses=None):
    """R of ``g`` at every w node, seeding each solve with its neighbour.

    Returns ``(z, r, failed)`` where ``failed`` lists nodes whose inversion
    did not converge; their z and R entries are NaN.
    """
    w_nodes = np.asarray(w_nodes, dtype=complex)
    z = np.full(w_nodes.shape, np.nan + 0j)
    failed = []
    prev = None
    for j, w in enumerate(w_nodes):
        seeds = []
        if guesses is not None:
            seeds.append(guesses[j])
        if prev is not None:
            seeds.append(prev)
        seeds.append(None)
        for seed in seeds:
            try:
                z[j] = inverse_g(g, w, seed)
                break
            except (InversionError, PoleError):
                continue
        else:
            failed.append(j)
            continue
        prev = z[j]
    with np.errstate(invalid="ignore"):
        r = z - 1 / w_nodes
    return z, r, failed


def nearest_z(sig: RSignature, w_nodes) -> np.ndarray:
    """z of the node of ``sig`` whose w is closest to each target w.

    Good Newton seeds for G^{-1}: a discrete G is not one-to-one on the upper
    half-plane, and starting from the source's own contour keeps the solve on
    the branch that contour traced.
    """
    w_nodes = np.asarray(w_nodes, dtype=complex)
    near = np.argmin(np.abs(w_nodes[:, None] - sig.w_nodes[None, :]), axis=1)
    return sig.z_nodes[near]


def realign(g: GSource, reference: RSignature, source_id=None) -> RSignature:
    """Signature of ``g`` on the w nodes of ``reference``.

    Nodes where the inversion fails are dropped and listed in ``dropped``.
    """
    z, r, failed = r_at(g, reference.w_nodes, guesses=reference.z_nodes)
    keep = np.ones(reference.w_nodes.size, dtype=bool)
    keep[failed] = False
    return RSignature(z[keep], reference.w_nodes[keep], r[keep],
                      source_id=source_id or g.source_id, contour=reference.contour,
                      dropped=tuple(failed))


def r_contour(g: GSource, contour: ContourSpec = ContourSpec(), source_id=None) -> RSignature:
    """Signature of ``g`` on ``contour``: w = G(z), R(w) = z - 1/w at each node."""
    z = contour.z
    w = np.asarray(g(z), dtype=complex)
    keep = np.abs(w) >= 1e-12
    dropped = np.flatnonzero(~keep)
    z, w = z[keep], w[keep]
    r = z - 1 / w
    return RSignature(z, w, r, source_id=source_id or g.source_id, contour=contour,
                      dropped=tuple(dropped))
