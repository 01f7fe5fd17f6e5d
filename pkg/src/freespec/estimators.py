"""scikit-learn style wrappers around the functional API.

Panels follow the scikit-learn orientation here: ``X`` has shape
``(n_samples, n_features)`` = (T time samples, N sensors) and is transposed
into the N x T convention used everywhere else.  A whole panel maps to one
spectrum, so these estimators are panel-level rather than row-level.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ensembles import DataMatrix
from .events import EventSignature, decompose, signature
from .spectral import LawSpec, kolmogorov_distance
from .xform import ContourSpec


def _panel(X) -> DataMatrix:
    X = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=1)
    return DataMatrix(np.ascontiguousarray(X.T))


class _ContourParams:
    def _contour(self) -> ContourSpec:
        return ContourSpec(self.x_min, self.x_max, self.nodes, self.eps)


class SpectralSignature(_ContourParams, TransformerMixin, BaseEstimator):
    """Covariance spectrum and R signature of a (T, N) panel.

    Parameters
    ----------
    x_min, x_max, nodes, eps : contour on which R is sampled.
    sigma2 : noise variance used for the spike-count edge.
    id : label stored on the fitted signature.

    Attributes
    ----------
    signature_ : EventSignature
    eigenvalues_ : ndarray of shape (N,)
    spike_count_ : int
    ratio_ : float, N / T
    """

    def __init__(self, x_min=-3.0, x_max=3.0, nodes=241, eps=0.1, sigma2=1.0, id=None):
        self.x_min = x_min
        self.x_max = x_max
        self.nodes = nodes
        self.eps = eps
        self.sigma2 = sigma2
        self.id = id

    def fit(self, X, y=None):
        data = _panel(X)
        self.signature_ = signature(data, self._contour(), id=self.id, sigma2=self.sigma2)
        self.eigenvalues_ = self.signature_.spectrum.eigenvalues
        self.spike_count_ = self.signature_.spike_count
        self.ratio_ = data.ratio
        self.n_features_in_ = data.n
        return self

    def transform(self, X):
        """R values of each panel's signature on the fitted contour, shape (1, nodes)."""
        check_is_fitted(self, "signature_")
        sig = signature(_panel(X), self._contour(), sigma2=self.sigma2)
        return sig.r_signature.r_values[None, :]

    def score(self, X=None, y=None):
        """Negative Kolmogorov distance between the fitted spectrum and M-P(N/T)."""
        check_is_fitted(self, "signature_")
        law = LawSpec.mp(self.ratio_, self.sigma2)
        return -kolmogorov_distance(self.signature_.spectrum, law)


class EventDecomposer(_ContourParams, BaseEstimator):
    """Explain an observed panel as a size-k combination of library events.

    ``fit`` takes a list of (T, N) panels (or ready EventSignature objects)
    and their ids; ``predict`` returns the best-scoring combination.
    """

    def __init__(self, k=2, real_only=False, normalize=False, noise_floor="auto",
                 x_min=-3.0, x_max=3.0, nodes=241, eps=0.1):
        self.k = k
        self.real_only = real_only
        self.normalize = normalize
        self.noise_floor = noise_floor
        self.x_min = x_min
        self.x_max = x_max
        self.nodes = nodes
        self.eps = eps

    def _sig(self, X, id=None) -> EventSignature:
        if isinstance(X, EventSignature):
            return X
        return signature(_panel(X), self._contour(), id=id)

    def fit(self, panels, ids=None):
        panels = list(panels)
        ids = list(ids) if ids is not None else [None] * len(panels)
        if len(ids) != len(panels):
            raise ValueError(f"{len(panels)} panels but {len(ids)} ids")
        self.library_ = [self._sig(p, i) for p, i in zip(panels, ids)]
        self.ids_ = [s.id for s in self.library_]
        return self

    def decompose(self, X):
        check_is_fitted(self, "library_")
        return decompose(self._sig(X), self.library_, self.k, real_only=self.real_only,
                         normalize=self.normalize, noise_floor=self.noise_floor)

    def predict(self, X):
        """Winning combination of library ids."""
        return self.decompose(X).winner

    def decision_function(self, X):
        """Residual per combination as ``{combo: residual}`` in ranked order."""
        return dict(self.decompose(X).ranked)
