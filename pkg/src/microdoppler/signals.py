"""Sampled-signal container, short-time Fourier analysis, and spectrogram energy.

Everything downstream (decomposition, radar selection, feature extraction)
moves data around as :class:`ComplexSignal` and consumes the output of
:func:`stft`. The DFT uses the orthonormal convention so that the summed
squared magnitude of a frame equals the windowed time-domain energy of that
frame (Parseval), which keeps spectrogram energy ratios physically meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ComplexSignal",
    "StftConfig",
    "Spectrogram",
    "stft",
    "spectrogram_energy",
    "write_spectrogram_csv",
    "write_spectrogram_pgm",
]


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex baseband time series.

    Parameters
    ----------
    samples : array-like of complex
        Baseband samples (dimensionless amplitude). Must be non-empty.
    sample_rate_hz : float
        Sampling rate, > 0.
    t0_s : float, optional
        Start time of the first sample.
    """

    samples: np.ndarray
    sample_rate_hz: float
    t0_s: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be > 0")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "t0_s", float(self.t0_s))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def times_s(self) -> np.ndarray:
        return self.t0_s + np.arange(self.samples.size) / self.sample_rate_hz

    def magnitude(self) -> np.ndarray:
        """Magnitude series |x[n]| as a real array."""
        return np.abs(self.samples)


_WINDOW_KINDS = ("hann", "rect")


@dataclass(frozen=True)
class StftConfig:
    """Framing and windowing parameters for :func:`stft`.

    ``window_len=256, hop=64`` at the simulator's 2 kHz rate gives 128 ms
    frames with 75% overlap, enough to resolve gait-rate Doppler structure.
    """

    window_len: int = 256
    hop: int = 64
    fft_len: int = 256
    window_kind: str = "hann"

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if self.hop < 1:
            raise ValueError("invalid hop")
        if self.hop > self.window_len:
            raise ValueError("hop must be <= window_len")
        if self.fft_len < self.window_len:
            raise ValueError("fft_len must be >= window_len")
        if self.window_kind not in _WINDOW_KINDS:
            raise ValueError(f"window_kind must be one of {_WINDOW_KINDS}")

    def window(self) -> np.ndarray:
        if self.window_kind == "rect":
            return np.ones(self.window_len)
        # periodic Hann, the standard STFT analysis window
        n = np.arange(self.window_len)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / self.window_len))


@dataclass(frozen=True)
class Spectrogram:
    """Time-frequency magnitude matrix with axis metadata.

    ``mag`` has shape ``(n_frames, n_bins)``; ``bin_freqs_hz`` is two-sided
    and centered (negative to positive Doppler).
    """

    mag: np.ndarray
    frame_times_s: np.ndarray
    bin_freqs_hz: np.ndarray

    def __post_init__(self):
        mag = np.asarray(self.mag, dtype=np.float64)
        times = np.asarray(self.frame_times_s, dtype=np.float64)
        freqs = np.asarray(self.bin_freqs_hz, dtype=np.float64)
        if mag.ndim != 2:
            raise ValueError("mag must be 2-D (n_frames x n_bins)")
        if mag.shape != (times.size, freqs.size):
            raise ValueError("mag shape must match axis lengths")
        if mag.size and np.min(mag) < 0:
            raise ValueError("mag entries must be non-negative")
        object.__setattr__(self, "mag", mag)
        object.__setattr__(self, "frame_times_s", times)
        object.__setattr__(self, "bin_freqs_hz", freqs)

    @property
    def n_frames(self) -> int:
        return self.mag.shape[0]

    @property
    def n_bins(self) -> int:
        return self.mag.shape[1]


def stft(signal: ComplexSignal, cfg: StftConfig | None = None) -> Spectrogram:
    """Short-time Fourier transform magnitude of a sampled signal.

    Frames are non-centered (no padding); a trailing partial frame is
    dropped. Each frame is windowed and transformed with the orthonormal
    DFT, so ``sum(mag**2)`` over one frame equals the windowed time-domain
    energy of that frame. Bins are returned centered, negative to positive.

    Raises
    ------
    ValueError
        "signal too short" when the signal holds less than one window.
    """
    if cfg is None:
        cfg = StftConfig()
    x = signal.samples
    if cfg.hop < 1:
        raise ValueError("invalid hop")
    if x.size < cfg.window_len:
        raise ValueError("signal too short")

    n_frames = (x.size - cfg.window_len) // cfg.hop + 1
    starts = np.arange(n_frames) * cfg.hop
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.window_len)[starts]
    windowed = frames * cfg.window()

    spec = np.fft.fft(windowed, n=cfg.fft_len, axis=1, norm="ortho")
    mag = np.abs(np.fft.fftshift(spec, axes=1))

    bin_freqs = np.fft.fftshift(np.fft.fftfreq(cfg.fft_len, d=1.0 / signal.sample_rate_hz))
    frame_times = signal.t0_s + (starts + (cfg.window_len - 1) / 2.0) / signal.sample_rate_hz
    return Spectrogram(mag=mag, frame_times_s=frame_times, bin_freqs_hz=bin_freqs)


def spectrogram_energy(
    spec: Spectrogram,
    band_hz: tuple[float, float] | None = None,
    mode: str = "power",
) -> float:
    """Total energy of a spectrogram, optionally restricted to a band.

    ``mode="power"`` sums squared magnitudes (Parseval-consistent energy);
    ``mode="magnitude"`` sums raw magnitudes. Band bounds are inclusive.

    Raises
    ------
    ValueError
        "empty band" when the band overlaps no frequency bin.
    """
    if mode not in ("power", "magnitude"):
        raise ValueError("mode must be 'power' or 'magnitude'")
    if band_hz is None:
        sel = slice(None)
    else:
        low, high = band_hz
        if not low < high:
            raise ValueError("band low must be < high")
        sel = (spec.bin_freqs_hz >= low) & (spec.bin_freqs_hz <= high)
        if not np.any(sel):
            raise ValueError("empty band")
    block = spec.mag[:, sel]
    if mode == "power":
        return float(np.sum(block * block))
    return float(np.sum(block))


def write_spectrogram_csv(spec: Spectrogram, path) -> None:
    """Write the magnitude matrix as CSV with a two-line axis header.

    Line 1 holds the frame times (s), line 2 the bin frequencies (Hz);
    each following row is one frame across all bins.
    """
    with open(path, "w") as fh:
        fh.write(",".join(repr(float(t)) for t in spec.frame_times_s) + "\n")
        fh.write(",".join(repr(float(f)) for f in spec.bin_freqs_hz) + "\n")
        for row in spec.mag:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_spectrogram_pgm(spec: Spectrogram, path) -> None:
    """Write an 8-bit binary PGM image of the spectrogram.

    Rows are frequency bins with positive Doppler at the top, columns are
    frames; pixel values are ``round(255 * mag / max)``. An all-zero
    spectrogram maps to an all-zero image.
    """
    max_mag = float(np.max(spec.mag)) if spec.mag.size else 0.0
    if max_mag > 0:
        img = np.rint(255.0 * spec.mag / max_mag).astype(np.uint8)
    else:
        img = np.zeros(spec.mag.shape, dtype=np.uint8)
    # transpose to bins x frames, then flip so the highest frequency is row 0
    img = img.T[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
