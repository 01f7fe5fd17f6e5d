"""Free additive convolution: adding R transforms and solving back for densities."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .exceptions import (ConvolutionError, InvalidInputError, InversionError,
                         MisalignedContourError, PoleError, ScaleRangeError)
from .spectral import DensityEstimate, LawSpec, law_density
from .xform import (MAX_HALVINGS, NEWTON_MAXITER, NEWTON_TOL, ContourSpec,
                    GSource, RSignature, inverse_g, r_contour, realign)

__all__ = ["ContourSpec", "RSignature", "r_add", "r_scale", "free_convolve_density",
           "wishart_sum_reference", "free_sum_signature"]

GRID_TOL = 1e-9
FAILURE_LIMIT = 0.05
# the outer solve sees the inner inversions' rounding, so it cannot ask for 1e-10
OUTER_TOL = 1e-8
# default smoothing height for the output contour, as a fraction of the spread
EPS_OUT_FRACTION = 2.5e-3


def r_add(signatures: Sequence[RSignature]) -> RSignature:
    """Pointwise sum of R values on a shared w grid; z is rebuilt as R + 1/w."""
    if len(signatures) < 2:
        raise InvalidInputError("r_add needs at least two signatures")
    ref = signatures[0]
    for sig in signatures[1:]:
        if sig.w_nodes.shape != ref.w_nodes.shape or np.max(
                np.abs(sig.w_nodes - ref.w_nodes)) > GRID_TOL:
            raise MisalignedContourError(
                f"{sig.source_id!r} is not on the w grid of {ref.source_id!r}; realign it first")
    r = np.sum([sig.r_values for sig in signatures], axis=0)
    return RSignature(r + 1 / ref.w_nodes, ref.w_nodes, r,
                      source_id="+".join(sig.source_id for sig in signatures),
                      contour=ref.contour)


def r_scale(sig: RSignature, alpha: float, g: Optional[GSource] = None) -> RSignature:
    """Signature of alpha*X: R'(w) = alpha * R(alpha * w).

    R at the dilated nodes is read off the signature when those nodes are
    already present, otherwise recomputed from ``g`` by inversion.
    """
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    if alpha == 1:
        return sig
    target = alpha * sig.w_nodes
    r_target = np.full(target.shape, np.nan + 0j)
    dist = np.abs(target[:, None] - sig.w_nodes[None, :])
    hit = np.argmin(dist, axis=1)
    exact = dist[np.arange(target.size), hit] <= GRID_TOL
    r_target[exact] = sig.r_values[hit[exact]]
    missing = np.flatnonzero(~exact)
    bad = []
    if missing.size and g is None:
        bad = missing.tolist()
    for j in missing if g is not None else ():
        try:
            r_target[j] = inverse_g(g, target[j]) - 1 / target[j]
        except (InversionError, PoleError):
            bad.append(int(j))
    if bad:
        raise ScaleRangeError(
            f"alpha*w falls outside the invertible range at {len(bad)} nodes", nodes=bad)
    r = alpha * r_target
    return RSignature(r + 1 / sig.w_nodes, sig.w_nodes, r,
                      source_id=f"{alpha:g}*{sig.source_id}", contour=sig.contour)


def wishart_sum_reference(k: int, c: float, x):
    """Limiting density of a sum of k free M-P(c) laws (closed form)."""
    return law_density(LawSpec.wishart_sum(k, c), x)


def free_sum_signature(sources: Sequence[GSource], contour: ContourSpec = ContourSpec()) -> RSignature:
    """R signature of the free sum, on the w grid induced by the first source."""
    ref = r_contour(sources[0], contour)
    parts = [ref]
    for src in sources[1:]:
        sig = realign(src, ref)
        if sig.dropped:
            keep = np.setdiff1d(np.arange(len(ref)), sig.dropped)
            ref = RSignature(ref.z_nodes[keep], ref.w_nodes[keep], ref.r_values[keep],
                             ref.source_id, ref.contour)
            parts = [RSignature(p.z_nodes[keep], p.w_nodes[keep], p.r_values[keep],
                                p.source_id, p.contour) if len(p) != len(ref) else p
                     for p in parts]
        parts.append(sig)
    return r_add(parts)


class _Inverter:
    """Evaluates G^{-1} of many sources at one w, warm-started from the last call.

    Discrete sources are stacked and solved by a vectorized damped Newton;
    closed-form laws fall back to :func:`inverse_g`.
    """

    def __init__(self, sources):
        self.sources = list(sources)
        self.discrete = [i for i, s in enumerate(self.sources) if s.kind != "analytic"]
        self.analytic = [i for i, s in enumerate(self.sources) if s.kind == "analytic"]
        if self.discrete:
            width = max(self.sources[i]._atoms.size for i in self.discrete)
            atoms = np.full((len(self.discrete), width), 0.0)
            weights = np.zeros_like(atoms)
            for row, i in enumerate(self.discrete):
                a = self.sources[i]._atoms
                atoms[row, :a.size] = a
                atoms[row, a.size:] = a[-1]
                weights[row, :a.size] = self.sources[i]._weights
            self.atoms, self.weights = atoms, weights
        self.m1 = np.array([s.m1 for s in self.sources])
        self.last = None

    def _g(self, z):
        diff = z[:, None] - self.atoms
        inv = 1 / diff
        g = np.sum(self.weights * inv, axis=1)
        dg = -np.sum(self.weights * inv * inv, axis=1)
        return g, dg

    def _solve_discrete(self, w, z0):
        z = z0.copy()
        keep_upper = w.imag < 0
        if keep_upper:
            z.imag = np.maximum(z.imag, 1e-6)
        tol = NEWTON_TOL * (1 + abs(w))
        g, dg = self._g(z)
        res = g - w
        err = np.abs(res)
        for _ in range(NEWTON_MAXITER):
            active = err > tol
            if not active.any():
                break
            step = np.where(active, res / dg, 0)
            lam = np.ones(z.size)
            pending = active.copy()
            for _ in range(MAX_HALVINGS + 1):
                cand = z - lam * step
                cg, cdg = self._g(cand)
                cres = cg - w
                ok = pending & (np.abs(cres) < err) & np.isfinite(cres)
                if keep_upper:
                    ok &= cand.imag > 0
                z = np.where(ok, cand, z)
                res = np.where(ok, cres, res)
                dg = np.where(ok, cdg, dg)
                err = np.where(ok, np.abs(cres), err)
                pending &= ~ok
                if not pending.any():
                    break
                lam = np.where(pending, lam / 2, lam)
            if pending.any():
                break
        if np.any(err > tol):
            raise InversionError("inner inversion did not converge",
                                 last=z, residual=float(err.max()))
        # one polishing step; convergence is quadratic here
        cand = z - res / dg
        cg, cdg = self._g(cand)
        better = np.abs(cg - w) < err
        if keep_upper:
            better &= cand.imag > 0
        return np.where(better, cand, z), np.where(better, cdg, dg)

    def __call__(self, w):
        """Return (omega, dG(omega)) for every source at G = w."""
        n = len(self.sources)
        seed = self.last if self.last is not None else 1 / w + self.m1
        omega = np.empty(n, dtype=complex)
        dg = np.empty(n, dtype=complex)
        if self.discrete:
            idx = np.array(self.discrete)
            try:
                omega[idx], dg[idx] = self._solve_discrete(w, seed[idx])
            except InversionError:
                omega[idx], dg[idx] = self._solve_discrete(w, 1 / w + self.m1[idx])
        for i in self.analytic:
            omega[i] = inverse_g(self.sources[i], w, seed[i])
            dg[i] = self.sources[i].derivative(omega[i])
        self.last = omega
        return omega, dg


def _default_grid(sources, points=400):
    mean = sum(s.m1 for s in sources)
    width = 4 * math.sqrt(sum(s.variance for s in sources))
    return np.linspace(mean - 0.75 * width, mean + 0.75 * width, points), width


def free_convolve_density(a: GSource, b: GSource, *more: GSource,
                          contour: Optional[ContourSpec] = None, out_grid=None,
                          eps_out: Optional[float] = None) -> DensityEstimate:
    """Density of the free additive convolution of two or more sources.

    The R transforms are added, ``T_c(w) = sum_i R_i(w) + 1/w`` is formed and,
    for every output point x (swept in ascending order, each solve seeded by
    the previous one), ``T_c(g) = x + i*eps_out`` is solved for
    ``g = G_c(x + i*eps_out)``.  The density is ``-Im g / pi``.
    """
    sources = [a, b, *more]
    grid_default, width = _default_grid(sources)
    grid = grid_default if out_grid is None else np.asarray(out_grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InvalidInputError("out_grid must be strictly increasing")
    eps = EPS_OUT_FRACTION * width if eps_out is None else float(eps_out)
    if not eps > 0:
        raise InvalidInputError("eps_out must be positive")

    # identical source objects are inverted once and counted with multiplicity
    unique, mult = [], []
    for s in sources:
        for j, u in enumerate(unique):
            if u is s:
                mult[j] += 1
                break
        else:
            unique.append(s)
            mult.append(1)
    mult = np.array(mult, dtype=float)
    extra = len(sources) - 1
    inv = _Inverter(unique)
    total_m1 = sum(s.m1 for s in sources)

    def t_c(g):
        omega, dg = inv(g)
        val = np.dot(mult, omega) - extra / g
        der = np.dot(mult, 1 / dg) + extra / g ** 2
        return val, der

    out = np.full(grid.shape, np.nan + 0j)
    failed = []
    g = None
    for j, x in enumerate(grid):
        z = complex(x, eps)
        g0 = g if g is not None else 1 / (z - total_m1)
        try:
            g = _solve_t(t_c, z, g0)
        except (InversionError, PoleError):
            failed.append(j)
            inv.last = None
            try:
                g = _solve_t(t_c, z, 1 / (z - total_m1))
            except (InversionError, PoleError):
                g = None
                continue
            failed.pop()
        out[j] = g

    diagnostics = {"failed_nodes": failed, "eps_out": eps, "nodes": int(grid.size)}
    if len(failed) > FAILURE_LIMIT * grid.size:
        raise ConvolutionError(
            f"T inversion failed at {len(failed)} of {grid.size} output nodes",
            diagnostics)
    raw = -out.imag / np.pi
    raw = np.where(np.isfinite(raw), raw, 0.0)
    dens = np.maximum(raw, 0.0)
    diagnostics["clamped_mass"] = float(np.max(dens - raw, initial=0.0))
    if contour is not None:
        diagnostics["r_signature"] = free_sum_signature(sources, contour)
    return DensityEstimate(grid, dens, (grid[0], grid[-1]), meta=diagnostics)


def _solve_t(t_c, z, g0):
    """Damped Newton for T_c(g) = z keeping Im g < 0."""
    g = complex(g0)
    if g.imag >= 0:
        g = complex(g.real, -1e-6)
    tol = OUTER_TOL * (1 + abs(z))
    val, der = t_c(g)
    err = abs(val - z)
    for _ in range(NEWTON_MAXITER):
        if err <= tol:
            return g
        step = (val - z) / der
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = g - lam * step
            if cand.imag < 0:
                try:
                    cval, cder = t_c(cand)
                    cerr = abs(cval - z)
                except (InversionError, PoleError):
                    cerr = math.inf
                if cerr < err:
                    break
            lam /= 2
        else:
            break
        g, val, der, err = cand, cval, cder, cerr
    if err <= tol:
        return g
    raise InversionError(f"T inversion did not converge (residual {err:.3e})",
                         last=g, residual=err)
