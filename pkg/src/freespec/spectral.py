"""Spectra, empirical spectral distributions and the limiting laws they approach."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ensembles import HermitianMatrix
from .exceptions import InvalidInputError

DEFAULT_BINS = 50
CDF_TOL = 1e-6

LAW_KINDS = ("semicircle", "mp", "free-wishart-sum")


@dataclass(frozen=True)
class SpectrumSample:
    """Sorted eigenvalues of an N x N symmetric matrix plus its shape."""

    eigenvalues: np.ndarray
    n: Optional[int] = None
    t: Optional[int] = None
    c: Optional[float] = None

    def __post_init__(self):
        lam = np.sort(np.asarray(self.eigenvalues, dtype=float).ravel())
        if lam.size == 0:
            raise InvalidInputError("spectrum is empty")
        if not np.all(np.isfinite(lam)):
            raise InvalidInputError("spectrum contains non-finite values")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        if self.n is None:
            object.__setattr__(self, "n", lam.size)
        elif self.n != lam.size:
            raise InvalidInputError(f"n={self.n} but {lam.size} eigenvalues given")
        if self.c is None and self.t:
            object.__setattr__(self, "c", self.n / self.t)

    def __len__(self):
        return self.eigenvalues.size


@dataclass(frozen=True)
class DensityEstimate:
    """Density values on an increasing grid, with the support they describe."""

    grid: np.ndarray
    density: np.ndarray
    support: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        dens = np.asarray(self.density, dtype=float).ravel()
        if grid.shape != dens.shape or grid.size == 0:
            raise InvalidInputError("grid and density must be non-empty and equally long")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise InvalidInputError("grid must be strictly increasing")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise InvalidInputError("density must be finite and nonnegative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "support", (float(self.support[0]), float(self.support[1])))

    def weights(self) -> np.ndarray:
        """Quadrature weights: the bin width for histograms, trapezoid otherwise.

        A single-point estimate gets the support width.
        """
        if "bin_width" in self.meta:
            return np.full(self.grid.size, float(self.meta["bin_width"]))
        if self.grid.size == 1:
            lo, hi = self.support
            return np.array([hi - lo if hi > lo else 1.0])
        w = np.empty_like(self.grid)
        d = np.diff(self.grid)
        w[0] = d[0] / 2
        w[-1] = d[-1] / 2
        w[1:-1] = (d[:-1] + d[1:]) / 2
        return w

    def mass(self) -> float:
        return float(np.dot(self.weights(), self.density))

    def moment(self, k: int) -> float:
        w = self.weights() * self.density
        return float(np.dot(w, self.grid ** k) / w.sum())


@dataclass(frozen=True)
class LawSpec:
    """A limiting spectral law.

    ``sigma2 = v`` denotes the law of ``v * X`` where X follows the unit law.
    """

    kind: str
    c: float = 1.0
    k: int = 1
    sigma2: float = 1.0

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise InvalidInputError(f"unknown law kind {self.kind!r}")
        if self.kind != "semicircle" and not 0 < self.c <= 1:
            raise InvalidInputError(f"ratio c must lie in (0, 1], got {self.c}")
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError(f"k must be a positive integer, got {self.k}")
        if not self.sigma2 > 0:
            raise InvalidInputError(f"sigma2 must be positive, got {self.sigma2}")

    @classmethod
    def semicircle(cls, sigma2=1.0):
        return cls("semicircle", sigma2=sigma2)

    @classmethod
    def mp(cls, c, sigma2=1.0):
        return cls("mp", c=c, sigma2=sigma2)

    @classmethod
    def wishart_sum(cls, k, c, sigma2=1.0):
        return cls("free-wishart-sum", c=c, k=int(k), sigma2=sigma2)

    @property
    def mean(self) -> float:
        if self.kind == "semicircle":
            return 0.0
        return self.sigma2 * (self.k if self.kind == "free-wishart-sum" else 1.0)


def _unit_support(law: LawSpec):
    if law.kind == "semicircle":
        return -2.0, 2.0
    k = law.k if law.kind == "free-wishart-sum" else 1
    sk, sc = math.sqrt(k), math.sqrt(law.c)
    return (sk - sc) ** 2, (sk + sc) ** 2


def _unit_density(law: LawSpec, x):
    x = np.asarray(x, dtype=float)
    lo, hi = _unit_support(law)
    inside = (x > lo) & (x < hi)
    out = np.zeros_like(x)
    xi = x[inside]
    root = np.sqrt((hi - xi) * (xi - lo))
    if law.kind == "semicircle":
        out[inside] = root / (2 * np.pi)
    else:
        out[inside] = root / (2 * np.pi * law.c * xi)
    return out


def law_support(law: LawSpec) -> tuple:
    lo, hi = _unit_support(law)
    return lo * law.sigma2, hi * law.sigma2


def law_density(law: LawSpec, x):
    """Density of ``law`` at ``x`` (scalar or array); zero off the support."""
    v = law.sigma2
    out = _unit_density(law, np.asarray(x, dtype=float) / v) / v
    return float(out) if np.ndim(out) == 0 else out


# -- CDF by adaptive Simpson in the angle variable x = lo + (hi-lo)(1-cos t)/2,
# -- which turns the square-root edges into a smooth integrand.

def _angle_integrand(law: LawSpec):
    lo, hi = _unit_support(law)
    half = (hi - lo) / 2
    if law.kind == "semicircle":
        return lambda t: half * half * math.sin(t) ** 2 / (2 * math.pi)

    c = law.c

    def g(t):
        s2 = math.sin(t / 2) ** 2
        x = lo + (hi - lo) * s2
        if x <= 0.0:
            # lo == 0: sin^2 t / x -> 4 cos^2(t/2) / hi
            return half * half * 4 * math.cos(t / 2) ** 2 / (hi * 2 * math.pi * c)
        return half * half * math.sin(t) ** 2 / (2 * math.pi * c * x)

    return g


def adaptive_simpson(f, a: float, b: float, tol: float = CDF_TOL, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of a scalar function on [a, b]."""
    if b == a:
        return 0.0
    fa, fb = f(a), f(b)
    m = (a + b) / 2
    fm = f(m)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    return _simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_step(f, a, b, fa, fm, fb, whole, tol, depth):
    m = (a + b) / 2
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6 * (fa + 4 * flm + fm)
    right = (b - m) / 6 * (fm + 4 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol:
        return left + right + delta / 15
    return (_simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1)
            + _simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1))


def law_cdf(law: LawSpec, x, tol: float = CDF_TOL):
    """Distribution function of ``law`` at ``x`` (scalar or array)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float)) / law.sigma2
    lo, hi = _unit_support(law)
    g = _angle_integrand(law)
    theta = np.arccos(np.clip(1 - 2 * (xs - lo) / (hi - lo), -1.0, 1.0))
    order = np.argsort(theta, kind="stable")
    out = np.empty_like(theta)
    acc, prev = 0.0, 0.0
    total = float(len(theta)) or 1.0
    for idx in order:
        t = theta[idx]
        if t > prev:
            acc += adaptive_simpson(g, prev, t, tol * max((t - prev) / math.pi, 1 / total))
            prev = t
        out[idx] = min(max(acc, 0.0), 1.0)
    out[xs <= lo] = 0.0
    out[xs >= hi] = 1.0
    return float(out[0]) if np.ndim(x) == 0 else out


def eigenvalues(m) -> SpectrumSample:
    """Full ascending spectrum of a Hermitian matrix."""
    if isinstance(m, HermitianMatrix):
        values, t = m.values, m.t
    else:
        values, t = np.asarray(m), None
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidInputError(f"matrix must be square, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("matrix contains non-finite entries")
    lam = np.linalg.eigvalsh(values)
    return SpectrumSample(lam, n=lam.size, t=t)


def esd_cdf(s: SpectrumSample, x):
    """Fraction of eigenvalues <= x."""
    counts = np.searchsorted(s.eigenvalues, x, side="right")
    return counts / len(s)


def esd_histogram(s: SpectrumSample, bins: int = DEFAULT_BINS) -> DensityEstimate:
    """Histogram of the spectrum over [min, max], normalized to unit mass."""
    if bins < 1:
        raise InvalidInputError(f"bins must be >= 1, got {bins}")
    lam = s.eigenvalues
    lo, hi = float(lam[0]), float(lam[-1])
    if hi == lo:
        warnings.warn("all eigenvalues are equal; returning a single-bin estimate",
                      RuntimeWarning, stacklevel=2)
        return DensityEstimate([lo], [1.0], (lo - 0.5, lo + 0.5), meta={"degenerate": True})
    counts, edges = np.histogram(lam, bins=bins, range=(lo, hi))
    width = edges[1] - edges[0]
    centers = (edges[:-1] + edges[1:]) / 2
    return DensityEstimate(centers, counts / (len(s) * width), (lo, hi),
                           meta={"degenerate": False, "bin_width": float(width)})


def kolmogorov_distance(s: SpectrumSample, law: LawSpec, tol: float = CDF_TOL) -> float:
    """sup_x |F_N(x) - H(x)| evaluated at both one-sided limits of every jump."""
    lam = s.eigenvalues
    n = len(s)
    jumps, first = np.unique(lam, return_index=True)
    counts_le = np.searchsorted(lam, jumps, side="right")
    counts_lt = first
    lo, hi = law_support(law)
    h = law_cdf(law, jumps, tol)
    dist = max(np.max(np.abs(counts_le / n - h)), np.max(np.abs(counts_lt / n - h)))
    # the law's own edges, where H reaches 0 and 1
    edges = np.array([lo, hi])
    f_edges = esd_cdf(s, edges)
    dist = max(dist, float(np.max(np.abs(f_edges - np.array([0.0, 1.0])))))
    return float(dist)
