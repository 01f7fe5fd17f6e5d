"""Event signatures, spike counting and composite-event decomposition.

Also hosts a synthetic scene generator: localized low-rank sources riding
on i.i.d. Gaussian sensor noise, standing in for distribution-network
voltage panels.
"""
from __future__ import annotations

import itertools
import math
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ensembles import DataMatrix, covariance
from .exceptions import (EmptyLibraryError, InvalidInputError,
                         MisalignedContourError, TooManyCombosError)
from .spectral import SpectrumSample, eigenvalues
from .xform import ContourSpec, GSource, RSignature, nearest_z, r_at, r_contour

EDGE_SLACK = 0.05
LOADING_DECAY = 3.0
MAX_COMBOS = 10 ** 6
ALIGN_FAIL_LIMIT = 0.2
W_WINDOW = (0.05, 0.95)


@dataclass(frozen=True)
class EventSignature:
    id: str
    spectrum: SpectrumSample
    r_signature: RSignature
    spike_count: int
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.spike_count < 0:
            raise InvalidInputError("spike_count must be nonnegative")

    @property
    def g(self) -> GSource:
        return GSource.empirical(self.spectrum, self.id)


@dataclass(frozen=True)
class SourceSpec:
    """One localized source: a temporal profile injected around ``node_index``."""

    node_index: int
    profile: str = "halfsine"
    amplitude: float = 1.0
    phi: float = 0.98
    innovation_sd: float = 0.1

    def __post_init__(self):
        if self.profile not in ("halfsine", "ar1"):
            raise InvalidInputError(f"unknown profile {self.profile!r}")
        if self.amplitude < 0:
            raise InvalidInputError("amplitude must be nonnegative")
        if self.profile == "ar1" and not abs(self.phi) < 1:
            raise InvalidInputError("ar1 needs |phi| < 1")


@dataclass(frozen=True)
class SceneConfig:
    n: int = 33
    t: int = 1440
    sources: Tuple[SourceSpec, ...] = ()
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(
            s if isinstance(s, SourceSpec) else SourceSpec(**s) for s in self.sources))
        if self.n < 2 or self.t < 2:
            raise InvalidInputError(f"scene needs n, t >= 2, got {self.n}x{self.t}")
        if not self.noise_sd > 0:
            raise InvalidInputError("noise_sd must be positive")
        for s in self.sources:
            if not 0 <= s.node_index < self.n:
                raise InvalidInputError(
                    f"node index {s.node_index} outside [0, {self.n})")


@dataclass(frozen=True)
class DecompositionResult:
    ranked: List[Tuple[Tuple[str, ...], float]]
    winner_margin: float

    @property
    def winner(self) -> Tuple[str, ...]:
        return self.ranked[0][0]


# PV on bus 11 and WT on bus 31 of the 33-bus feeder, zero-based
PV_NODE = 10
WT_NODE = 30
PV_AMPLITUDE = 3.0
WT_AMPLITUDE = 6.0


def scene_config(name: str, seed: int = 0, pv_amplitude: float = PV_AMPLITUDE,
                 wt_amplitude: float = WT_AMPLITUDE, noise_sd: float = 1.0,
                 n: int = 33, t: int = 1440) -> SceneConfig:
    """Preset scenes: A (PV only), B (wind only), C (both), or 0 (noise only)."""
    pv = SourceSpec(PV_NODE, "halfsine", pv_amplitude)
    wt = SourceSpec(WT_NODE, "ar1", wt_amplitude)
    table = {"A": (pv,), "B": (wt,), "C": (pv, wt), "0": ()}
    try:
        sources = table[name.upper()]
    except KeyError:
        raise InvalidInputError(f"unknown scene {name!r}; expected A, B, C or 0") from None
    return SceneConfig(n=n, t=t, sources=sources, noise_sd=noise_sd, seed=seed)


def spatial_loading(n: int, node: int, decay: float = LOADING_DECAY) -> np.ndarray:
    v = np.exp(-np.abs(np.arange(n) - node) / decay)
    return v / np.linalg.norm(v)


def temporal_profile(src: SourceSpec, t: int, rng: np.random.Generator) -> np.ndarray:
    tau = np.arange(t)
    if src.profile == "halfsine":
        return np.maximum(0.0, np.sin(np.pi * (tau - 0.25 * t) / (0.5 * t)))
    innov = src.innovation_sd * rng.standard_normal(t)
    x = np.empty(t)
    x[0] = innov[0] / math.sqrt(1 - src.phi ** 2)
    for i in range(1, t):
        x[i] = src.phi * x[i - 1] + innov[i]
    return x


def simulate_scene(cfg: SceneConfig) -> DataMatrix:
    """Sum of localized rank-one sources plus i.i.d. Gaussian noise."""
    streams = np.random.SeedSequence(int(cfg.seed) & 0xFFFFFFFFFFFFFFFF).spawn(
        1 + len(cfg.sources))
    noise_rng = np.random.Generator(np.random.Philox(streams[0]))
    x = cfg.noise_sd * noise_rng.standard_normal((cfg.n, cfg.t))
    for src, stream in zip(cfg.sources, streams[1:]):
        rng = np.random.Generator(np.random.Philox(stream))
        x += src.amplitude * np.outer(spatial_loading(cfg.n, src.node_index),
                                      temporal_profile(src, cfg.t, rng))
    return DataMatrix(x, row_labels=[f"node{i + 1}" for i in range(cfg.n)])


def count_spikes(s: SpectrumSample, c: float, sigma2: float = 1.0,
                 edge_slack: float = EDGE_SLACK) -> int:
    """Eigenvalues strictly above the M-P upper edge, inflated by ``edge_slack``."""
    if not 0 < c <= 1:
        raise InvalidInputError(f"ratio c must lie in (0, 1], got {c}")
    edge = sigma2 * (1 + math.sqrt(c)) ** 2 * (1 + edge_slack)
    return int(np.count_nonzero(s.eigenvalues > edge))


def signature(data: DataMatrix, contour: ContourSpec = ContourSpec(), id: Optional[str] = None,
              sigma2: float = 1.0, meta: Optional[dict] = None) -> EventSignature:
    """Standardized covariance spectrum, its R signature and its spike count."""
    if not isinstance(data, DataMatrix):
        data = DataMatrix(data)
    if data.n > data.t:
        raise InvalidInputError(f"need N <= T, got {data.n}x{data.t}")
    spec = eigenvalues(covariance(data, standardize=True))
    meta = dict(meta or {})
    sid = id or meta.get("id") or uuid.uuid5(
        uuid.NAMESPACE_OID, spec.eigenvalues.tobytes().hex()).hex[:12]
    sig = r_contour(GSource.empirical(spec, sid), contour, source_id=sid)
    spikes = count_spikes(spec, data.n / data.t, sigma2)
    return EventSignature(sid, spec, sig, spikes, meta)


def _valid_nodes(w, window):
    mod = np.abs(w)
    return (mod >= window[0]) & (mod <= window[1])


def align(observed: RSignature, candidate: EventSignature, window=W_WINDOW) -> np.ndarray:
    """R of ``candidate`` at the observed w nodes (NaN where inversion failed)."""
    mask = _valid_nodes(observed.w_nodes, window)
    r = np.full(observed.w_nodes.shape, np.nan + 0j)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise MisalignedContourError("no observed nodes fall inside the |w| window")
    w = observed.w_nodes[idx]
    _, r_sub, failed = r_at(candidate.g, w, guesses=nearest_z(candidate.r_signature, w))
    if len(failed) > ALIGN_FAIL_LIMIT * idx.size:
        raise MisalignedContourError(
            f"{candidate.id}: inversion failed on {len(failed)} of {idx.size} nodes")
    r[idx] = r_sub
    return r


def _score(observed: RSignature, aligned: Sequence[np.ndarray], real_only=False,
           normalize=False, floor=None) -> float:
    total = np.sum(aligned, axis=0)
    resid = observed.r_values - total
    if floor is not None:
        resid = resid + (len(aligned) - 1) * floor
    ok = np.isfinite(resid)
    vals = np.abs(resid.real[ok]) if real_only else np.abs(resid[ok])
    score = float(np.sum(vals))
    return score / max(int(ok.sum()), 1) if normalize else score


def residual_score(observed: RSignature, combo: Sequence[EventSignature], *,
                   real_only: bool = False, normalize: bool = False,
                   window=W_WINDOW, noise_floor: Optional[float] = None) -> float:
    """sum over nodes |R_obs(w) - sum_i R_i(w)| with candidates aligned to observed w.

    With ``noise_floor = c``, the M-P null R transform at ratio ``c`` is added
    back ``len(combo) - 1`` times, because every standardized atom carries its
    own copy of the noise bulk while the observation carries one.
    """
    if not combo:
        raise InvalidInputError("combo must be nonempty")
    cache = {}
    aligned = []
    for sig in combo:
        if id(sig) not in cache:
            cache[id(sig)] = align(observed, sig, window)
        aligned.append(cache[id(sig)])
    floor = null_r(observed.w_nodes, noise_floor) if noise_floor else None
    return _score(observed, aligned, real_only, normalize, floor)


def decompose(observed: EventSignature, library: Sequence[EventSignature], k: int, *,
              real_only: bool = False, normalize: bool = False,
              window=W_WINDOW, noise_floor="auto") -> DecompositionResult:
    """Rank every size-k multiset of library signatures by residual score.

    ``noise_floor="auto"`` corrects for the shared noise bulk using the
    observed panel's ratio N/T (see :func:`residual_score`); pass ``None``
    for the uncorrected sum.
    """
    if not library:
        raise EmptyLibraryError("library is empty")
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    count = math.comb(len(library) + k - 1, k)
    if count > MAX_COMBOS:
        raise TooManyCombosError(
            f"{count} combinations of size {k}; choose a smaller k or library")
    lib = sorted(library, key=lambda s: s.id)
    obs = observed.r_signature
    aligned = {sig.id: align(obs, sig, window) for sig in lib}
    if noise_floor == "auto":
        noise_floor = observed.spectrum.c
    floor = null_r(obs.w_nodes, noise_floor) if noise_floor else None
    ranked = []
    for combo in itertools.combinations_with_replacement(lib, k):
        ids = tuple(s.id for s in combo)
        ranked.append((ids, _score(obs, [aligned[i] for i in ids], real_only, normalize, floor)))
    ranked.sort(key=lambda item: (item[1], item[0]))
    if len(ranked) > 1:
        first, second = ranked[0][1], ranked[1][1]
        margin = second / first if first > 0 else math.inf
    else:
        margin = math.inf
    return DecompositionResult(ranked, margin)


def null_r(w, c, sigma2=1.0):
    """R transform of the pure-noise M-P law: sigma2 / (1 - c sigma2 w)."""
    return sigma2 / (1 - c * sigma2 * np.asarray(w))
