"""Feature bank: time-domain statistics, spectral statistics, and entropies.

The extractors operate on real series; :func:`build_feature_vector` applies
them to the magnitude of a complex signal, since the magnitude carries the
micro-Doppler envelope. Approximate entropy follows the classic template
self-match counting convention, permutation entropy uses ordinal patterns
with earlier-index-first tie breaking, and multiscale entropy composes
coarse graining with approximate entropy at each scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .signals import ComplexSignal

__all__ = [
    "EmbeddingConfig",
    "MseConfig",
    "FeatureVector",
    "time_domain_features",
    "spectral_features",
    "approximate_entropy",
    "permutation_entropy",
    "coarse_grain",
    "multiscale_entropy",
    "build_feature_vector",
    "feature_schema",
    "write_feature_csv",
    "FEATURE_GROUPS",
]

FEATURE_GROUPS = ("time_domain", "frequency_domain", "entropy")


@dataclass(frozen=True)
class EmbeddingConfig:
    """Embedding parameters shared by the entropy measures.

    ``m`` is the embedding dimension, ``r_rel`` the similarity tolerance as
    a fraction of the series std, and ``delay`` the lag between elements of
    an ordinal pattern (permutation entropy only).
    """

    m: int = 2
    r_rel: float = 0.2
    delay: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.r_rel > 0:
            raise ValueError("r_rel must be > 0")
        if self.delay < 1:
            raise ValueError("delay must be >= 1")


@dataclass(frozen=True)
class MseConfig:
    """Multiscale entropy: scales 1..max_scale over a base embedding."""

    max_scale: int = 5
    base: EmbeddingConfig = EmbeddingConfig()

    def __post_init__(self):
        if self.max_scale < 1:
            raise ValueError("max_scale must be >= 1")


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-order feature values with a schema of matching names."""

    values: np.ndarray
    schema: tuple
    source_id: str = ""
    valid: bool = True
    error: str | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if self.valid:
            if values.size != len(self.schema):
                raise ValueError("values and schema lengths differ")
            if values.size and not np.all(np.isfinite(values)):
                raise ValueError("feature values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "schema", tuple(self.schema))


TIME_DOMAIN_NAMES = (
    "td_mean",
    "td_rms",
    "td_sqrt_amplitude",
    "td_abs_mean",
    "td_skewness",
    "td_kurtosis",
    "td_variance",
    "td_peak_to_peak",
    "td_shape_factor",
    "td_peak",
    "td_impulse_factor",
    "td_margin_factor",
    "td_skewness_index",
    "td_kurtosis_index",
)

SPECTRAL_NAMES = (
    "fd_mean_power",
    "fd_centroid_hz",
    "fd_rms_freq_hz",
    "fd_freq_std_hz",
    "fd_skewness",
    "fd_kurtosis",
    "fd_freq_variance",
    "fd_median_freq_hz",
    "fd_peak_freq_hz",
    "fd_bandwidth_hz",
    "fd_spectral_entropy",
    "fd_high_low_ratio",
    "fd_total_power",
)


def time_domain_features(series) -> dict:
    """The 14 time-domain statistics, keyed by ``TIME_DOMAIN_NAMES`` order.

    Moments are population moments. The dimensionless indicators are
    shape factor (RMS over absolute mean), impulse factor (peak over
    absolute mean), margin factor (peak over square-root amplitude), and
    the RMS-normalized third and fourth moment indices.

    Raises
    ------
    ValueError
        "zero dispersion" for a constant series, whose standardized
        moments and ratio indicators are undefined.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        raise ValueError("series too short")
    mean = float(np.mean(x))
    centered = x - mean
    variance = float(np.mean(centered * centered))
    if variance == 0.0:
        raise ValueError("zero dispersion")
    std = np.sqrt(variance)
    rms = float(np.sqrt(np.mean(x * x)))
    sqrt_amp = float(np.mean(np.sqrt(np.abs(x))) ** 2)
    abs_mean = float(np.mean(np.abs(x)))
    peak = float(np.max(np.abs(x)))
    return {
        "td_mean": mean,
        "td_rms": rms,
        "td_sqrt_amplitude": sqrt_amp,
        "td_abs_mean": abs_mean,
        "td_skewness": float(np.mean(centered**3)) / std**3,
        "td_kurtosis": float(np.mean(centered**4)) / std**4,
        "td_variance": variance,
        "td_peak_to_peak": float(np.max(x) - np.min(x)),
        "td_shape_factor": rms / abs_mean,
        "td_peak": peak,
        "td_impulse_factor": peak / abs_mean,
        "td_margin_factor": peak / sqrt_amp,
        "td_skewness_index": float(np.mean(x**3)) / rms**3,
        "td_kurtosis_index": float(np.mean(x**4)) / rms**4,
    }


def spectral_features(series, fs: float) -> dict:
    """The 13 spectral statistics over the one-sided power spectrum.

    The spectrum is ``|rfft(x)|^2 / N``. Centroid-relative skewness and
    kurtosis fall back to 0 for a point-mass spectrum. Spectral entropy is
    the Shannon entropy (natural log) of the normalized power distribution.

    Raises
    ------
    ValueError
        "zero-energy signal" when the spectrum carries no power.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size < 4:
        raise ValueError("series too short")
    power = np.abs(np.fft.rfft(x)) ** 2 / x.size
    freqs = np.fft.rfftfreq(x.size, d=1.0 / fs)
    total = float(np.sum(power))
    if total == 0.0:
        raise ValueError("zero-energy signal")
    pn = power / total

    centroid = float(np.sum(freqs * pn))
    rms_freq = float(np.sqrt(np.sum(freqs**2 * pn)))
    dev = freqs - centroid
    freq_var = float(np.sum(dev**2 * pn))
    freq_std = np.sqrt(freq_var)
    if freq_std > 0:
        skew = float(np.sum(dev**3 * pn)) / freq_std**3
        kurt = float(np.sum(dev**4 * pn)) / freq_std**4
    else:
        skew = 0.0
        kurt = 0.0
    median = float(freqs[int(np.searchsorted(np.cumsum(pn), 0.5))])
    nonzero = pn[pn > 0]
    entropy = float(-np.sum(nonzero * np.log(nonzero)))
    above = float(np.sum(power[freqs > centroid]))
    below = float(np.sum(power[freqs <= centroid]))
    return {
        "fd_mean_power": total / power.size,
        "fd_centroid_hz": centroid,
        "fd_rms_freq_hz": rms_freq,
        "fd_freq_std_hz": freq_std,
        "fd_skewness": skew,
        "fd_kurtosis": kurt,
        "fd_freq_variance": freq_var,
        "fd_median_freq_hz": median,
        "fd_peak_freq_hz": float(freqs[int(np.argmax(power))]),
        "fd_bandwidth_hz": 2.0 * freq_std,
        "fd_spectral_entropy": entropy,
        "fd_high_low_ratio": above / below,
        "fd_total_power": total,
    }


@njit(cache=True)
def _apen_phi(x, m, r):
    """Mean log template-match density for dimension m (self-matches counted).

    Candidates are pre-filtered through a sorted first-coordinate window;
    every candidate is then re-checked with the exact Chebyshev comparison,
    so counts equal the brute-force double loop bit for bit.
    """
    n = x.size
    nm = n - m + 1
    starts = x[:nm].copy()
    order = np.argsort(starts)
    svals = starts[order]
    acc = 0.0
    for i in range(nm):
        xi = x[i]
        lo = np.searchsorted(svals, xi - r, side="left")
        hi = np.searchsorted(svals, xi + r, side="right")
        while lo > 0 and abs(svals[lo - 1] - xi) <= r:
            lo -= 1
        while hi < nm and abs(svals[hi] - xi) <= r:
            hi += 1
        cnt = 0
        for p in range(lo, hi):
            j = order[p]
            ok = True
            for k in range(m):
                if abs(x[i + k] - x[j + k]) > r:
                    ok = False
                    break
            if ok:
                cnt += 1
        acc += np.log(cnt / nm)
    return acc / nm


def approximate_entropy(series, cfg: EmbeddingConfig | None = None) -> float:
    """Approximate entropy ApEn(m, r) with Chebyshev template matching.

    ``r`` is ``cfg.r_rel`` times the population std of the series. Template
    match counts include the self-match, consistent with the
    ``N - m + 1`` denominators. A series whose dispersion sits at
    floating-point noise level (std below 1e-12 of the data scale) is
    perfectly regular by convention and returns 0.

    Raises
    ------
    ValueError
        "series too short" when ``len(series) < m + 2``.
    """
    if cfg is None:
        cfg = EmbeddingConfig()
    x = np.ascontiguousarray(series, dtype=np.float64)
    if x.size < cfg.m + 2:
        raise ValueError("series too short")
    sigma = float(np.std(x))
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    if sigma <= 1e-12 * scale or sigma == 0.0:
        return 0.0
    r = cfg.r_rel * sigma
    return float(_apen_phi(x, cfg.m, r) - _apen_phi(x, cfg.m + 1, r))


def permutation_entropy(series, cfg: EmbeddingConfig | None = None) -> float:
    """Permutation (ordinal-pattern) entropy in nats.

    Patterns are the rank orders of the lagged tuples
    ``(x[t], x[t+delay], ..., x[t+(m-1)delay])``; equal values rank by
    earlier index first. The sum runs over observed patterns, so
    ``0 <= PE <= ln(m!)``.

    Raises
    ------
    ValueError
        "series too short" when fewer than 2 tuples fit.
    """
    if cfg is None:
        cfg = EmbeddingConfig()
    x = np.asarray(series, dtype=np.float64)
    span = (cfg.m - 1) * cfg.delay + 1
    if x.size < span + 1:
        raise ValueError("series too short")
    windows = np.lib.stride_tricks.sliding_window_view(x, span)[:, :: cfg.delay]
    ranks = np.argsort(windows, axis=1, kind="stable")
    codes = ranks @ (cfg.m ** np.arange(cfg.m))
    _, counts = np.unique(codes, return_counts=True)
    p = counts / codes.size
    return float(-np.sum(p * np.log(p)))


def coarse_grain(series, scale: int) -> np.ndarray:
    """Block-average the series with non-overlapping windows of ``scale``.

    Produces ``floor(N / scale)`` points; a trailing partial block is
    dropped. Scale 1 returns the series unchanged.
    """
    x = np.asarray(series, dtype=np.float64)
    if scale < 1:
        raise ValueError("scale must be >= 1")
    if scale > x.size:
        raise ValueError("scale exceeds series length")
    n_blocks = x.size // scale
    return x[: n_blocks * scale].reshape(n_blocks, scale).mean(axis=1)


def multiscale_entropy(series, cfg: MseConfig | None = None) -> np.ndarray:
    """Approximate entropy of the coarse-grained series at scales 1..max_scale.

    The similarity tolerance is recomputed from each coarse-grained series'
    own std, per the base config.
    """
    if cfg is None:
        cfg = MseConfig()
    x = np.asarray(series, dtype=np.float64)
    if x.size // cfg.max_scale < cfg.base.m + 2:
        raise ValueError("series too short")
    return np.array(
        [approximate_entropy(coarse_grain(x, scale), cfg.base) for scale in range(1, cfg.max_scale + 1)]
    )


def feature_schema(groups=FEATURE_GROUPS, max_scale: int = 5) -> tuple:
    """Fixed feature-name order for the enabled groups."""
    names: list[str] = []
    if "time_domain" in groups:
        names += list(TIME_DOMAIN_NAMES)
    if "frequency_domain" in groups:
        names += list(SPECTRAL_NAMES)
    if "entropy" in groups:
        names += ["apen", "perm_entropy"] + [f"mse_{s}" for s in range(1, max_scale + 1)]
    return tuple(names)


def build_feature_vector(
    signal: ComplexSignal,
    embed_cfg: EmbeddingConfig | None = None,
    mse_cfg: MseConfig | None = None,
    groups=FEATURE_GROUPS,
    source_id: str = "",
) -> FeatureVector:
    """Extract the full feature bank from a signal's magnitude series.

    With all groups enabled the vector is 14 time-domain + 13 spectral +
    ApEn + permutation entropy + max_scale multiscale values. Any extractor
    failure yields an invalid vector naming the failing group; z-scoring is
    a training-time concern and is not applied here.
    """
    if embed_cfg is None:
        embed_cfg = EmbeddingConfig()
    if mse_cfg is None:
        mse_cfg = MseConfig(base=embed_cfg)
    unknown = [g for g in groups if g not in FEATURE_GROUPS]
    if unknown:
        raise ValueError(f"unknown feature groups: {unknown}")
    if not groups:
        raise ValueError("at least one feature group must be enabled")

    mag = signal.magnitude()
    values: list[float] = []
    schema = feature_schema(groups, mse_cfg.max_scale)
    try:
        if "time_domain" in groups:
            group = "time_domain"
            values += list(time_domain_features(mag).values())
        if "frequency_domain" in groups:
            group = "frequency_domain"
            values += list(spectral_features(mag, signal.sample_rate_hz).values())
        if "entropy" in groups:
            group = "entropy"
            mse = multiscale_entropy(mag, mse_cfg)
            # scale-1 multiscale entropy IS ApEn of the raw series; reuse it
            # unless the caller embedded the two configs differently
            apen = float(mse[0]) if mse_cfg.base == embed_cfg else approximate_entropy(mag, embed_cfg)
            values += [apen, permutation_entropy(mag, embed_cfg)] + [float(v) for v in mse]
    except ValueError as exc:
        return FeatureVector(
            values=np.empty(0),
            schema=(),
            source_id=source_id,
            valid=False,
            error=f"{group}: {exc}",
        )
    return FeatureVector(values=np.array(values), schema=schema, source_id=source_id)


def write_feature_csv(vectors, path, labels=None) -> None:
    """Write a feature matrix as CSV: source_id, label, then schema columns."""
    vectors = list(vectors)
    valid = [v for v in vectors if v.valid]
    if not valid:
        raise ValueError("no valid feature vectors to write")
    schema = valid[0].schema
    if labels is None:
        labels = [""] * len(vectors)
    with open(path, "w") as fh:
        fh.write(",".join(["source_id", "label", *schema]) + "\n")
        for vec, label in zip(vectors, labels):
            if not vec.valid:
                continue
            if vec.schema != schema:
                raise ValueError("inconsistent feature schemas")
            row = [vec.source_id, str(label)] + [repr(float(v)) for v in vec.values]
            fh.write(",".join(row) + "\n")
