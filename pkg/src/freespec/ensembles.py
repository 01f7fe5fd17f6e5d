"""Random-matrix ensembles and covariance matrices of sensor panels.

All sampling goes through a Philox counter-based generator keyed by an
explicit 64-bit seed, so every draw is reproducible and independent of
thread count.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import (DegenerateRowError, InvalidDimensionError,
                         InvalidInputError, InvalidRatioError)

SYMMETRY_RTOL = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class DataMatrix:
    """N x T sensor panel: rows are spatial points, columns are time samples."""

    values: np.ndarray
    row_labels: Optional[Sequence[str]] = None
    dt: Optional[float] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidDimensionError(f"panel must be 2-D, got shape {values.shape}")
        n, t = values.shape
        if n < 2 or t < 2:
            raise InvalidDimensionError(f"panel needs N >= 2 and T >= 2, got {n}x{t}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("panel contains non-finite entries")
        if self.row_labels is not None and len(self.row_labels) != n:
            raise InvalidInputError(
                f"{len(self.row_labels)} row labels for {n} rows")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    @property
    def ratio(self) -> float:
        return self.n / self.t


@dataclass(frozen=True)
class HermitianMatrix:
    """Hermitian matrix tagged with how it was produced.

    ``values`` is real symmetric for ``lue`` and ``covariance`` origins and
    complex Hermitian for ``gue``.
    """

    values: np.ndarray
    origin: str = "covariance"
    t: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidDimensionError(f"matrix must be square, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("matrix contains non-finite entries")
        scale = max(float(np.max(np.abs(values))), 1.0) if values.size else 1.0
        if np.max(np.abs(values - values.conj().T), initial=0.0) > SYMMETRY_RTOL * scale:
            raise InvalidInputError("matrix is not Hermitian")
        if self.origin not in ("gue", "lue", "covariance"):
            raise InvalidInputError(f"unknown origin {self.origin!r}")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def ratio(self) -> Optional[float]:
        return None if self.t is None else self.n / self.t


def sample_gue(n: int, seed: int) -> HermitianMatrix:
    """Draw ``(C + C^H) / (2 sqrt(n))`` with C standard complex Gaussian."""
    if n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (c + c.conj().T) / (2.0 * np.sqrt(n))
    # exact Hermitian symmetry; the diagonal is real by construction
    h = (h + h.conj().T) / 2.0
    return HermitianMatrix(h, origin="gue")


def sample_lue(n: int, t: int, seed: int) -> HermitianMatrix:
    """Draw the sample covariance ``R R^T / t`` of an n x t real Gaussian matrix."""
    if n < 1 or t < 1:
        raise InvalidDimensionError(f"need n, t >= 1, got n={n}, t={t}")
    if n > t:
        raise InvalidRatioError(f"c = n/t = {n / t:.4g} > 1 is not supported")
    rng = make_rng(seed)
    r = rng.standard_normal((n, t))
    return HermitianMatrix(_gram(r), origin="lue", t=t)


def standardize_rows(values: np.ndarray) -> np.ndarray:
    """Shift each row to zero mean and scale it to unit (population) variance."""
    values = np.asarray(values, dtype=float)
    centered = values - values.mean(axis=1, keepdims=True)
    sd = np.sqrt(np.mean(centered ** 2, axis=1))
    for i, s in enumerate(sd):
        if not s > 0:
            raise DegenerateRowError(i)
    return centered / sd[:, None]


def covariance(data: DataMatrix, standardize: bool = True) -> HermitianMatrix:
    """Covariance ``X X^T / T`` of a panel, optionally after row standardization."""
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    x = standardize_rows(data.values) if standardize else data.values
    cov = _gram(x)
    if standardize:
        np.fill_diagonal(cov, 1.0)
    return HermitianMatrix(cov, origin="covariance", t=data.t)


def _gram(x: np.ndarray) -> np.ndarray:
    g = (x @ x.T) / x.shape[1]
    return (g + g.T) / 2.0
