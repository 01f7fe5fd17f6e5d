"""Free-probability spectral toolkit: Stieltjes and R transforms of covariance
spectra, free additive convolution, and composite-event decomposition."""

__version__ = "0.1.0"

from .ensembles import DataMatrix, HermitianMatrix, covariance, sample_gue, sample_lue
from .events import (DecompositionResult, EventSignature, SceneConfig, SourceSpec,
                     count_spikes, decompose, residual_score, scene_config, signature,
                     simulate_scene)
from .freeconv import (free_convolve_density, r_add, r_scale, wishart_sum_reference)
from .spectral import (DensityEstimate, LawSpec, SpectrumSample, eigenvalues, esd_cdf,
                       esd_histogram, kolmogorov_distance, law_cdf, law_density, law_support)
from .xform import (ContourSpec, GSource, RSignature, classical_cumulants, free_cumulants,
                    inverse_g, invert_stieltjes_density, moments, r_contour, r_transform,
                    stieltjes_analytic, stieltjes_empirical, stieltjes_from_density)

__all__ = [
    "DataMatrix", "HermitianMatrix", "covariance", "sample_gue", "sample_lue",
    "DecompositionResult", "EventSignature", "SceneConfig", "SourceSpec", "count_spikes",
    "decompose", "residual_score", "scene_config", "signature", "simulate_scene",
    "free_convolve_density", "r_add", "r_scale", "wishart_sum_reference",
    "DensityEstimate", "LawSpec", "SpectrumSample", "eigenvalues", "esd_cdf", "esd_histogram",
    "kolmogorov_distance", "law_cdf", "law_density", "law_support",
    "ContourSpec", "GSource", "RSignature", "classical_cumulants", "free_cumulants",
    "inverse_g", "invert_stieltjes_density", "moments", "r_contour", "r_transform",
    "stieltjes_analytic", "stieltjes_empirical", "stieltjes_from_density",
]
