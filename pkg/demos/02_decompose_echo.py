"""Decompose a radar echo into intrinsic mode functions.

Shows the sifting building blocks on a toy two-tone signal first (extrema,
envelopes, a single sift), then runs the full complementary-ensemble
decomposition on a synthetic echo and prints the per-mode energy ladder:
high-frequency limb content occupies the first modes, the slow trunk
return sinks into the late modes and residual.

Run:  python demos/02_decompose_echo.py
"""

import numpy as np

from microdoppler import (
    CeemdConfig,
    MotionScene,
    SimConfig,
    ceemd,
    envelope_pair,
    find_extrema,
    sift_imf,
    synth_echo,
)
from microdoppler.emd import write_imfs_csv
from microdoppler.simulate import default_radars
from pathlib import Path

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# --- sifting anatomy on a two-tone signal --------------------------------
fs = 1000.0
t = np.arange(3000) / fs
toy = np.sin(2 * np.pi * 50 * t) + 0.6 * np.sin(2 * np.pi * 3 * t)

maxima, minima = find_extrema(toy)
print(f"two-tone toy: {maxima.size} maxima, {minima.size} minima")

upper, lower = envelope_pair(toy)
print(f"envelope mean magnitude: {np.mean(np.abs((upper + lower) / 2)):.4f} "
      "(the slow tone, which sifting removes)")

imf, remainder = sift_imf(toy, CeemdConfig())
corr = np.corrcoef(imf, np.sin(2 * np.pi * 50 * t))[0, 1]
print(f"first sifted mode correlates with the 50 Hz tone at r = {corr:.4f}\n")

# --- full decomposition of a synthetic echo ------------------------------
scene = MotionScene(motion_class="single_arm_swing")
echo = synth_echo(scene, default_radars()[0], cfg=SimConfig(duration_s=2.0, rng_seed=3))

cfg = CeemdConfig(ensemble_pairs=2, noise_amplitude_rel=0.2, rng_seed=0)
modes = ceemd(echo.samples, cfg)

total = np.sum(np.abs(echo.samples) ** 2)
print(f"decomposed {len(echo)} samples into {modes.n_imfs} modes + residual")
for k in range(modes.n_imfs):
    share = np.sum(np.abs(modes.imfs[k]) ** 2) / total
    print(f"  mode {k + 1}: {100 * share:5.1f}% of signal energy")
print(f"  residual: {100 * np.sum(np.abs(modes.residual) ** 2) / total:5.1f}%")

err = np.linalg.norm(modes.reconstruct() - echo.samples) / np.linalg.norm(echo.samples)
print(f"reconstruction error (modes + residual vs input): {err:.2e}")

path = out / "echo_imfs.csv"
write_imfs_csv(modes, path, cfg)
print(f"wrote {path} (+ JSON sidecar with the config)")
