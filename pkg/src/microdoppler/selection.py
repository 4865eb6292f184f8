"""Limb-energy radar selection and spectrogram thresholding.

The limb component of an echo is rebuilt from the highest-frequency IMFs of
its decomposition; the ratio of the limb spectrogram energy to the full
spectrogram energy is compared to a body-area-derived target (limbs are
about 64% of body area), and the radar whose ratio lands closest to the
target wins. Otsu thresholding is a display utility for binarizing
spectrograms; it plays no role in the selection path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .emd import CeemdConfig, ImfSet, ceemd
from .signals import ComplexSignal, Spectrogram, StftConfig, spectrogram_energy, stft

__all__ = [
    "EsConfig",
    "RadarRatio",
    "SelectionReport",
    "reconstruct_limb",
    "limb_energy_ratio",
    "select_radar",
    "otsu_filter",
    "write_mask_pgm",
]


@dataclass(frozen=True)
class EsConfig:
    """Energy-slice parameters.

    ``limb_imf_count`` highest-frequency IMFs form the limb reconstruction;
    ``target_ratio`` is the expected limb share of total echo energy;
    ``magnitude_mode`` selects squared (power) or raw magnitude sums.
    """

    limb_imf_count: int = 3
    target_ratio: float = 0.64
    magnitude_mode: str = "power"

    def __post_init__(self):
        if self.limb_imf_count < 1:
            raise ValueError("limb_imf_count must be >= 1")
        if not 0.0 < self.target_ratio < 1.0:
            raise ValueError("target_ratio must be in (0, 1)")
        if self.magnitude_mode not in ("power", "magnitude"):
            raise ValueError("magnitude_mode must be 'power' or 'magnitude'")


@dataclass(frozen=True)
class RadarRatio:
    radar_id: str
    ratio: float | None
    distance: float | None
    valid: bool = True
    error: str | None = None


@dataclass(frozen=True)
class SelectionReport:
    """Per-radar limb-energy ratios and the selected radar."""

    target_ratio: float
    per_radar: tuple
    selected: str

    def to_dict(self) -> dict:
        return {
            "target_ratio": self.target_ratio,
            "per_radar": [
                {
                    "radar_id": r.radar_id,
                    "ratio": r.ratio,
                    "distance": r.distance,
                    "valid": r.valid,
                    **({"error": r.error} if r.error else {}),
                }
                for r in self.per_radar
            ],
            "selected": self.selected,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def reconstruct_limb(imfs: ImfSet, cfg: EsConfig | None = None) -> np.ndarray:
    """Sum of the first ``limb_imf_count`` IMFs (clamped to those available).

    The residual is never included; it carries the trunk return.
    """
    if cfg is None:
        cfg = EsConfig()
    if imfs.n_imfs == 0:
        raise ValueError("no IMFs")
    count = min(cfg.limb_imf_count, imfs.n_imfs)
    return imfs.imfs[:count].sum(axis=0)


def limb_energy_ratio(
    signal: ComplexSignal,
    ceemd_cfg: CeemdConfig | None = None,
    es_cfg: EsConfig | None = None,
    stft_cfg: StftConfig | None = None,
    imf_set: ImfSet | None = None,
) -> float:
    """Spectrogram energy of the limb reconstruction over the full signal's.

    The result is clamped to [0, 1]; spectral leakage can push the raw
    ratio slightly past 1. A decomposition that yields no IMFs (a pure
    trend) contributes zero limb energy. Pass ``imf_set`` to reuse an
    existing decomposition of the same signal.

    Raises
    ------
    ValueError
        "zero-energy signal" when the full spectrogram carries no energy.
    """
    if es_cfg is None:
        es_cfg = EsConfig()
    if stft_cfg is None:
        stft_cfg = StftConfig()
    total = spectrogram_energy(stft(signal, stft_cfg), mode=es_cfg.magnitude_mode)
    if total == 0.0:
        raise ValueError("zero-energy signal")
    if imf_set is None:
        imf_set = ceemd(signal.samples, ceemd_cfg)
    if imf_set.n_imfs == 0:
        return 0.0
    limb = ComplexSignal(
        reconstruct_limb(imf_set, es_cfg).astype(np.complex128),
        signal.sample_rate_hz,
        signal.t0_s,
    )
    limb_energy = spectrogram_energy(stft(limb, stft_cfg), mode=es_cfg.magnitude_mode)
    return float(min(1.0, max(0.0, limb_energy / total)))


def select_radar(
    channels,
    ceemd_cfg: CeemdConfig | None = None,
    es_cfg: EsConfig | None = None,
    stft_cfg: StftConfig | None = None,
) -> SelectionReport:
    """Pick the radar whose limb-energy ratio is closest to the target.

    ``channels`` is an iterable of ``(radar_id, ComplexSignal)`` pairs.
    Channels that fail the ratio computation are marked invalid and
    excluded; ties in distance go to the lowest radar id.

    Raises
    ------
    ValueError
        "no valid channels" when every channel fails.
    """
    if es_cfg is None:
        es_cfg = EsConfig()
    records = []
    for radar_id, sig in channels:
        try:
            ratio = limb_energy_ratio(sig, ceemd_cfg, es_cfg, stft_cfg)
        except ValueError as exc:
            records.append(RadarRatio(str(radar_id), None, None, valid=False, error=str(exc)))
            continue
        records.append(RadarRatio(str(radar_id), ratio, abs(ratio - es_cfg.target_ratio)))
    valid = [r for r in records if r.valid]
    if not valid:
        raise ValueError("no valid channels")
    best = min(valid, key=lambda r: (r.distance, r.radar_id))
    return SelectionReport(
        target_ratio=es_cfg.target_ratio,
        per_radar=tuple(records),
        selected=best.radar_id,
    )


def otsu_filter(spec: Spectrogram, n_bins: int = 256) -> tuple[float, np.ndarray]:
    """Histogram threshold maximizing between-class variance, plus mask.

    The magnitude values are histogrammed into ``n_bins`` equal-width
    levels; the returned threshold is the lower edge of the first
    foreground bin (ties in variance resolve to the lowest threshold),
    and ``mask[i, j] = 1`` iff ``mag[i, j] >= threshold``.

    Raises
    ------
    ValueError
        "degenerate histogram" when all magnitude values are identical.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    mag = spec.mag
    if mag.size == 0:
        raise ValueError("empty spectrogram")
    lo = float(np.min(mag))
    hi = float(np.max(mag))
    if lo == hi:
        raise ValueError("degenerate histogram")

    counts, edges = np.histogram(mag, bins=n_bins, range=(lo, hi))
    total = mag.size
    levels = 0.5 * (edges[:-1] + edges[1:])

    w_cum = np.cumsum(counts)
    mass_cum = np.cumsum(counts * levels)
    mass_total = mass_cum[-1]

    best_t = 1
    best_var = -np.inf
    for t in range(1, n_bins):
        w0 = w_cum[t - 1]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        mu0 = mass_cum[t - 1] / w0
        mu1 = (mass_total - mass_cum[t - 1]) / w1
        var = (w0 / total) * (w1 / total) * (mu0 - mu1) ** 2
        if var > best_var:
            best_var = var
            best_t = t
    threshold = float(edges[best_t])
    return threshold, (mag >= threshold).astype(np.uint8)


def write_mask_pgm(mask: np.ndarray, path) -> None:
    """Write a binary mask as an 8-bit PGM (foreground 255, background 0)."""
    img = (np.asarray(mask, dtype=np.uint8) * 255).T[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
