"""Complementary ensemble empirical mode decomposition.

A signal is decomposed into intrinsic mode functions (IMFs) by iterative
sifting: cubic-spline envelopes are fit through the local maxima and minima,
their mean is subtracted, and the process repeats until the candidate
satisfies the IMF test (extrema and zero-crossing counts differ by at most
``extrema_zero_slack`` and the envelope mean is small relative to the series
spread). The ensemble variant adds each white-noise realization twice, once
with positive and once with negative sign, decomposes every branch, and
averages IMFs level by level so the injected noise cancels.

Complex signals are decomposed as two independent real channels (I and Q)
sharing the same noise realizations; the paired channels are recombined into
complex IMFs.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "CeemdConfig",
    "ImfSet",
    "find_extrema",
    "envelope_pair",
    "sift_imf",
    "ceemd",
    "write_imfs_csv",
]


@dataclass(frozen=True)
class CeemdConfig:
    """Parameters of the ensemble decomposition.

    Parameters
    ----------
    noise_amplitude_rel : float
        Std of the injected white noise as a fraction of the signal std.
    ensemble_pairs : int
        Number of complementary noise pairs; each pair contributes an
        added-noise and a subtracted-noise branch.
    max_imfs : int
        Cap on the number of extracted modes per branch.
    max_sift_iters : int
        Cap on sifting iterations per mode.
    envelope_tol : float
        IMF acceptance: mean absolute envelope mean must not exceed
        ``envelope_tol`` times the candidate's std.
    extrema_zero_slack : int
        IMF acceptance: allowed difference between the number of extrema
        and the number of zero crossings.
    rng_seed : int
        Seed for the noise generator; fixes the decomposition bit-for-bit.
    """

    noise_amplitude_rel: float = 0.2
    ensemble_pairs: int = 50
    max_imfs: int = 8
    max_sift_iters: int = 10
    envelope_tol: float = 0.05
    extrema_zero_slack: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_amplitude_rel < 0:
            raise ValueError("noise_amplitude_rel must be >= 0")
        if self.ensemble_pairs < 1:
            raise ValueError("ensemble_pairs must be >= 1")
        if self.max_imfs < 1:
            raise ValueError("max_imfs must be >= 1")
        if self.max_sift_iters < 1:
            raise ValueError("max_sift_iters must be >= 1")
        if not self.envelope_tol > 0:
            raise ValueError("envelope_tol must be > 0")
        if self.extrema_zero_slack < 0:
            raise ValueError("extrema_zero_slack must be >= 0")


@dataclass(frozen=True)
class ImfSet:
    """Ordered intrinsic mode functions plus residual.

    ``imfs`` has shape ``(n_imfs, source_len)`` with the highest-frequency
    mode first; summing all modes and the residual reconstructs the
    decomposed series.
    """

    imfs: np.ndarray
    residual: np.ndarray
    source_len: int

    def __post_init__(self):
        imfs = np.atleast_2d(np.asarray(self.imfs))
        residual = np.asarray(self.residual)
        if imfs.size == 0:
            imfs = imfs.reshape(0, self.source_len)
        if imfs.shape[1] != self.source_len or residual.shape != (self.source_len,):
            raise ValueError("imf and residual lengths must equal source_len")
        object.__setattr__(self, "imfs", imfs)
        object.__setattr__(self, "residual", residual)

    @property
    def n_imfs(self) -> int:
        return self.imfs.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Sum of all IMFs plus the residual."""
        return self.imfs.sum(axis=0) + self.residual


def find_extrema(series) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima, in ascending order.

    A plateau of equal values bounded by a rise and a fall (or fall and
    rise) contributes its midpoint index, floored on ties. Boundary samples
    are never extrema.
    """
    s = np.asarray(series, dtype=np.float64)
    if s.size < 3:
        raise ValueError("series too short")
    d = np.diff(s)
    nz = np.flatnonzero(d != 0)
    if nz.size < 2:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    dnz = d[nz]
    flips = dnz[:-1] * dnz[1:] < 0
    # plateau between consecutive nonzero slopes spans nz[p]+1 .. nz[p+1]
    mids = (nz[:-1] + 1 + nz[1:]) // 2
    maxima = mids[flips & (dnz[:-1] > 0)]
    minima = mids[flips & (dnz[:-1] < 0)]
    return maxima, minima


def _zero_crossings(series: np.ndarray) -> int:
    signs = np.sign(series)
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(signs[:-1] != signs[1:]))


def _spline_envelope(s: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Natural cubic spline through the extrema, mirror-extended at both ends."""
    n = s.size
    k = min(2, idx.size)
    left_t = -idx[:k][::-1]
    left_v = s[idx[:k]][::-1]
    right_t = 2 * (n - 1) - idx[-k:][::-1]
    right_v = s[idx[-k:]][::-1]
    knots_t = np.concatenate([left_t, idx, right_t])
    knots_v = np.concatenate([left_v, s[idx], right_v])
    spline = CubicSpline(knots_t, knots_v, bc_type="natural")
    return spline(np.arange(n, dtype=np.float64))


def envelope_pair(series) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower cubic-spline envelopes of a real series.

    Envelopes interpolate the local maxima (upper) and minima (lower) after
    mirroring two extrema beyond each end to suppress edge artifacts. Spline
    overshoot between knots is allowed.

    Raises
    ------
    ValueError
        "monotone remainder" when the series has fewer than 2 maxima or
        2 minima, which terminates sifting.
    """
    s = np.asarray(series, dtype=np.float64)
    maxima, minima = find_extrema(s)
    if maxima.size < 2 or minima.size < 2:
        raise ValueError("monotone remainder")
    return _spline_envelope(s, maxima), _spline_envelope(s, minima)


def _imf_test(h: np.ndarray, mean_env: np.ndarray, n_extrema: int, cfg: CeemdConfig) -> bool:
    if abs(n_extrema - _zero_crossings(h)) > cfg.extrema_zero_slack:
        return False
    spread = float(np.std(h))
    if spread == 0.0:
        return True
    return float(np.mean(np.abs(mean_env))) <= cfg.envelope_tol * spread


def sift_imf(series, cfg: CeemdConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Extract one intrinsic mode function by envelope-mean sifting.

    Repeatedly subtracts the mean of the upper and lower envelopes until the
    candidate passes the IMF test or ``max_sift_iters`` is reached. Returns
    ``(imf, remainder)`` with ``remainder = series - imf``.

    Raises
    ------
    ValueError
        "monotone remainder" when the input itself has too few extrema.
    """
    if cfg is None:
        cfg = CeemdConfig()
    s = np.asarray(series, dtype=np.float64)
    h = s.copy()
    for iteration in range(cfg.max_sift_iters):
        maxima, minima = find_extrema(h)
        if maxima.size < 2 or minima.size < 2:
            if iteration == 0:
                raise ValueError("monotone remainder")
            break  # oscillation exhausted mid-sift; accept the candidate
        upper = _spline_envelope(h, maxima)
        lower = _spline_envelope(h, minima)
        mean_env = 0.5 * (upper + lower)
        if _imf_test(h, mean_env, maxima.size + minima.size, cfg):
            break
        h = h - mean_env
    return h, s - h


def _emd_branch(y: np.ndarray, cfg: CeemdConfig) -> list[np.ndarray]:
    """Full sift sequence of one branch; returns its IMFs (residual implied)."""
    imfs: list[np.ndarray] = []
    remainder = y.copy()
    while len(imfs) < cfg.max_imfs:
        try:
            imf, remainder = sift_imf(remainder, cfg)
        except ValueError:
            break
        imfs.append(imf)
    return imfs


def _ceemd_real(x: np.ndarray, cfg: CeemdConfig) -> ImfSet:
    n = x.size
    rng = np.random.default_rng(cfg.rng_seed)
    noise_std = cfg.noise_amplitude_rel * float(np.std(x))
    noises = rng.standard_normal((cfg.ensemble_pairs, n)) * noise_std

    branch_imfs: list[list[np.ndarray]] = []
    branch_res: list[np.ndarray] = []
    for p in range(cfg.ensemble_pairs):
        for signed in (x + noises[p], x - noises[p]):
            imfs = _emd_branch(signed, cfg)
            branch_imfs.append(imfs)
            branch_res.append(signed - sum(imfs) if imfs else signed.copy())

    n_levels = max((len(b) for b in branch_imfs), default=0)
    n_branches = len(branch_imfs)
    imfs = np.zeros((n_levels, n), dtype=np.float64)
    for b in branch_imfs:
        for k, imf in enumerate(b):
            imfs[k] += imf
    imfs /= n_branches
    residual = np.mean(branch_res, axis=0) if branch_res else x.copy()
    return ImfSet(imfs=imfs, residual=residual, source_len=n)


def ceemd(signal, cfg: CeemdConfig | None = None) -> ImfSet:
    """Decompose a series into IMFs plus residual with complementary noise.

    Real input yields real IMFs. Complex input is decomposed as independent
    I and Q channels with identical noise seeds and recombined, so the
    reconstruction identity holds per channel.

    Raises
    ------
    ValueError
        "signal too short" for fewer than 16 samples, "non-finite input"
        when the series contains NaN or infinity.
    """
    if cfg is None:
        cfg = CeemdConfig()
    x = np.asarray(signal)
    if x.ndim != 1:
        raise ValueError("signal must be 1-D")
    if x.size < 16:
        raise ValueError("signal too short")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")

    if not np.iscomplexobj(x):
        return _ceemd_real(x.astype(np.float64), cfg)

    re = _ceemd_real(np.ascontiguousarray(x.real), cfg)
    im = _ceemd_real(np.ascontiguousarray(x.imag), cfg)
    n_levels = max(re.n_imfs, im.n_imfs)

    def _pad(a: np.ndarray) -> np.ndarray:
        out = np.zeros((n_levels, x.size), dtype=np.float64)
        out[: a.shape[0]] = a
        return out

    imfs = _pad(re.imfs) + 1j * _pad(im.imfs)
    residual = re.residual + 1j * im.residual
    return ImfSet(imfs=imfs, residual=residual, source_len=x.size)


def write_imfs_csv(imf_set: ImfSet, path, cfg: CeemdConfig | None = None) -> None:
    """Write IMFs and residual as CSV columns plus a JSON config sidecar.

    Complex decompositions get paired ``_re``/``_im`` columns. The sidecar
    at ``<path>.json`` records the decomposition config and seed.
    """
    complex_data = np.iscomplexobj(imf_set.imfs) or np.iscomplexobj(imf_set.residual)
    names = []
    cols = []
    for k in range(imf_set.n_imfs):
        if complex_data:
            names += [f"imf{k + 1}_re", f"imf{k + 1}_im"]
            cols += [imf_set.imfs[k].real, imf_set.imfs[k].imag]
        else:
            names.append(f"imf{k + 1}")
            cols.append(imf_set.imfs[k])
    if complex_data:
        names += ["residual_re", "residual_im"]
        cols += [np.asarray(imf_set.residual).real, np.asarray(imf_set.residual).imag]
    else:
        names.append("residual")
        cols.append(imf_set.residual)

    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

    sidecar = {
        "n_imfs": imf_set.n_imfs,
        "source_len": imf_set.source_len,
        "complex": bool(complex_data),
    }
    if cfg is not None:
        sidecar["config"] = dataclasses.asdict(cfg)
        sidecar["seed"] = cfg.rng_seed
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
