"""Synthetic multistatic human-echo generator.

The body is an ellipsoid whose geometric-optics backscatter sets the
aspect-dependent echo strength; body parts (trunk plus four limbs) are
weighted by their skin-area fractions and move along sinusoidal radial
trajectories whose phase pattern encodes the motion class. Limb motion runs
along the body's front-back axis, so a side-aspect radar sees only a small
projected radial velocity and the limb micro-Doppler collapses toward the
trunk band, as observed when the same motion is viewed from 90 degrees.

Sampling is desk-scale baseband: the chirp is assumed de-ramped and the
pulse envelope flat over the dwell, leaving only the Doppler phase history.
An effective-wavelength scale factor keeps the peak Doppler within a 2 kHz
sample rate at millimeter-wave carriers.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .signals import ComplexSignal

__all__ = [
    "BodyEllipsoid",
    "RadarPose",
    "MotionScene",
    "SimConfig",
    "DatasetRequest",
    "MOTION_CLASSES",
    "aspect_angles",
    "ellipsoid_rcs",
    "frontal_rcs",
    "synth_echo",
    "part_echoes",
    "constant_velocity_echo",
    "generate_dataset",
    "write_signal_file",
    "read_signal_file",
    "calibrated_area_fractions",
]

SPEED_OF_LIGHT = 299_792_458.0

MOTION_CLASSES = ("single_arm_swing", "alternating_arms", "alternating_legs")

SIGNAL_FORMAT = "iq-f64le-v1"
DATASET_FORMAT = "dataset-v1"

DEFAULT_AREA_FRACTIONS = {
    "trunk_head": 0.36,
    "legs": 0.34,
    "arms": 0.18,
    "arms_each": 0.09,
    "legs_each": 0.17,
}


def calibrated_area_fractions() -> dict:
    """Area fractions renormalized so limbs carry exactly 64% of the total.

    The per-limb split keeps the 18:34 arms-to-legs proportion; the trunk
    stays at 36%, so the construction-level limb energy share is 0.64.
    """
    arms = 0.64 * 0.18 / 0.52
    legs = 0.64 * 0.34 / 0.52
    return {
        "trunk_head": 0.36,
        "legs": legs,
        "arms": arms,
        "arms_each": arms / 2.0,
        "legs_each": legs / 2.0,
    }


@dataclass(frozen=True)
class BodyEllipsoid:
    """Semi-axes of the body ellipsoid in meters (x, y, z)."""

    a: float = 0.25
    b: float = 0.15
    c: float = 0.90

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise ValueError("semi-axes must be positive")


@dataclass(frozen=True)
class RadarPose:
    """Radar position, carrier, and identifying label."""

    position: tuple
    carrier_hz: float = 77e9
    radar_id: str = "radar"
    validate_band: bool = True

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3:
            raise ValueError("position must be (x, y, z)")
        if pos == (0.0, 0.0, 0.0):
            raise ValueError("radar cannot sit at the origin")
        if self.validate_band and not 76e9 <= self.carrier_hz <= 81e9:
            raise ValueError("carrier outside the 76-81 GHz band (set validate_band=False to override)")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class MotionScene:
    """Motion class and kinematic parameters of one recording.

    ``part_area_fractions`` weights the per-part echo amplitudes;
    ``min_motion_projection`` is the residual fraction of limb velocity
    seen along the line of sight when the swing axis is perpendicular to
    it (limb arcs are never perfectly planar).
    """

    motion_class: str = "single_arm_swing"
    swing_rate_hz: float = 1.0
    limb_peak_speed_mps: float = 2.0
    trunk_sway_speed_mps: float = 0.1
    idle_limb_speed_mps: float = 1.0
    swing_phase_rad: float = 0.0
    min_motion_projection: float = 0.1
    part_area_fractions: dict = field(default_factory=lambda: dict(DEFAULT_AREA_FRACTIONS))

    def __post_init__(self):
        if self.motion_class not in MOTION_CLASSES:
            raise ValueError(f"motion_class must be one of {MOTION_CLASSES}")
        if not self.swing_rate_hz > 0:
            raise ValueError("swing_rate_hz must be > 0")
        if not self.limb_peak_speed_mps > 0:
            raise ValueError("limb_peak_speed_mps must be > 0")
        if self.trunk_sway_speed_mps < 0 or self.idle_limb_speed_mps < 0:
            raise ValueError("sway speeds must be >= 0")
        fr = self.part_area_fractions
        for key in DEFAULT_AREA_FRACTIONS:
            if key not in fr or fr[key] <= 0:
                raise ValueError(f"part_area_fractions missing or non-positive: {key}")
        cover = fr["trunk_head"] + fr["legs"] + fr["arms"]
        if not 0.88 - 1e-9 <= cover <= 1.0 + 1e-9:
            raise ValueError("trunk_head + legs + arms must lie in [0.88, 1.0]")


@dataclass(frozen=True)
class SimConfig:
    """Sampling, noise, and wavelength-scaling parameters.

    ``snr_db`` is referenced to the frontal-aspect echo power of the scene;
    the receiver noise floor is absolute, so a weaker aspect (lower
    backscatter) sees a proportionally worse effective SNR.
    """

    sample_rate_hz: float = 2000.0
    duration_s: float = 4.5
    snr_db: float = 20.0
    rng_seed: int = 0
    wavelength_scale: float = 2.2

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be > 0")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be > 0")
        if not self.wavelength_scale > 0:
            raise ValueError("wavelength_scale must be > 0")


def aspect_angles(position) -> tuple[float, float]:
    """Incidence and azimuth (theta, phi) of a radar position.

    theta is measured from the body's vertical (z) axis into [0, pi]; phi
    is the quadrant-aware azimuth in (-pi, pi]. A radar in the horizontal
    plane has theta = pi/2.
    """
    x, y, z = (float(v) for v in position)
    if x == 0.0 and y == 0.0 and z == 0.0:
        raise ValueError("position must not be the origin")
    theta = math.atan2(math.hypot(x, y), z)
    phi = math.atan2(y, x)
    return theta, phi


def ellipsoid_rcs(body: BodyEllipsoid, theta: float, phi: float) -> float:
    """Geometric-optics backscatter cross section of an ellipsoid (m^2)."""
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    denom = (
        body.a**2 * st**2 * cp**2
        + body.b**2 * st**2 * sp**2
        + body.c**2 * ct**2
    )
    return math.pi * body.a**2 * body.b**2 * body.c**2 / denom**2


def frontal_rcs(body: BodyEllipsoid) -> float:
    """Frontal-aspect simplification ``sqrt(pi) * a * c / b``.

    Equals the square root of :func:`ellipsoid_rcs` at
    ``theta = phi = pi/2`` (note the differing units: m, not m^2); kept as
    the documented frontal approximation. Downstream use is ratio-only, so
    the convention does not affect selection.
    """
    return math.sqrt(math.pi) * body.a * body.c / body.b


_IDLE_PHASES = {
    "arm_left": 0.4 * math.pi,
    "arm_right": 0.9 * math.pi,
    "leg_left": 1.3 * math.pi,
    "leg_right": 1.8 * math.pi,
}

# fixed radial geometry offsets (m); decorrelate the parts' static phases
_RANGE_OFFSETS = {
    "trunk_head": 0.0,
    "arm_left": 0.151,
    "arm_right": -0.143,
    "leg_left": 0.297,
    "leg_right": -0.304,
}

LIMB_PARTS = ("arm_left", "arm_right", "leg_left", "leg_right")


def _active_phases(motion_class: str) -> dict:
    if motion_class == "single_arm_swing":
        return {"arm_right": 0.0}
    if motion_class == "alternating_arms":
        return {"arm_right": 0.0, "arm_left": math.pi}
    return {"leg_right": 0.0, "leg_left": math.pi}


def _motion_projection(position, floor: float) -> float:
    pos = np.asarray(position, dtype=np.float64)
    u = pos / np.linalg.norm(pos)
    # limbs swing along the body's front-back (y) axis
    return max(abs(float(u[1])), floor)


def part_echoes(
    scene: MotionScene,
    radar: RadarPose,
    body: BodyEllipsoid | None = None,
    cfg: SimConfig | None = None,
) -> dict[str, np.ndarray]:
    """Noise-free per-part echo components of one scene.

    Each part contributes ``A_p * exp(j * 4*pi/lambda * R_p(t))`` where
    ``A_p = sqrt(area_fraction * aspect_rcs_factor)`` and ``R_p`` combines
    whole-body sway with the part's swing, projected onto the line of
    sight. Summing the returned arrays gives the clean echo.
    """
    if body is None:
        body = BodyEllipsoid()
    if cfg is None:
        cfg = SimConfig()
    theta, phi = aspect_angles(radar.position)
    rcs_factor = ellipsoid_rcs(body, theta, phi) / ellipsoid_rcs(body, math.pi / 2, math.pi / 2)
    proj = _motion_projection(radar.position, scene.min_motion_projection)

    lam = SPEED_OF_LIGHT / radar.carrier_hz * cfg.wavelength_scale
    peak_speed = proj * (scene.limb_peak_speed_mps + scene.trunk_sway_speed_mps)
    if 2.0 * peak_speed / lam > cfg.sample_rate_hz / 2.0:
        raise ValueError("undersampled Doppler")

    n = round(cfg.duration_s * cfg.sample_rate_hz)
    t = np.arange(n) / cfg.sample_rate_hz
    omega = 2.0 * math.pi * scene.swing_rate_hz
    phase0 = scene.swing_phase_rad

    sway = proj * scene.trunk_sway_speed_mps / omega * np.sin(omega * t + phase0)
    active = _active_phases(scene.motion_class)
    fractions = scene.part_area_fractions

    parts: dict[str, np.ndarray] = {}
    for part in ("trunk_head",) + LIMB_PARTS:
        frac = fractions["trunk_head"] if part == "trunk_head" else (
            fractions["arms_each"] if part.startswith("arm") else fractions["legs_each"]
        )
        amplitude = math.sqrt(frac * rcs_factor)
        radial = sway + _RANGE_OFFSETS[part]
        if part in active:
            swing_amp = proj * scene.limb_peak_speed_mps / omega
            radial = radial + swing_amp * np.sin(omega * t + phase0 + active[part])
        elif part != "trunk_head":
            idle_amp = proj * scene.idle_limb_speed_mps / omega
            radial = radial + idle_amp * np.sin(omega * t + phase0 + _IDLE_PHASES[part])
        parts[part] = amplitude * np.exp(1j * (4.0 * math.pi / lam) * radial)
    return parts


def synth_echo(
    scene: MotionScene,
    radar: RadarPose,
    body: BodyEllipsoid | None = None,
    cfg: SimConfig | None = None,
) -> ComplexSignal:
    """Baseband echo of one motion scene seen by one radar.

    The noise floor is set by ``cfg.snr_db`` against the scene's frontal
    echo power (incoherent part sum), so off-frontal aspects with weaker
    backscatter come out with a lower effective SNR.
    """
    if cfg is None:
        cfg = SimConfig()
    clean = sum(part_echoes(scene, radar, body, cfg).values())
    fr = scene.part_area_fractions
    frontal_power = fr["trunk_head"] + 2.0 * fr["arms_each"] + 2.0 * fr["legs_each"]
    noise_power = frontal_power / 10.0 ** (cfg.snr_db / 10.0)
    rng = np.random.default_rng(cfg.rng_seed)
    noise = math.sqrt(noise_power / 2.0) * (
        rng.standard_normal(clean.size) + 1j * rng.standard_normal(clean.size)
    )
    return ComplexSignal(clean + noise, cfg.sample_rate_hz)


def constant_velocity_echo(
    speed_mps: float,
    radar: RadarPose,
    cfg: SimConfig | None = None,
    amplitude: float = 1.0,
) -> ComplexSignal:
    """Echo of a single point scatterer receding at constant radial speed.

    Produces a pure Doppler tone at ``2 * speed / lambda_eff``; handy as a
    known-frequency reference for spectrogram checks.
    """
    if cfg is None:
        cfg = SimConfig()
    lam = SPEED_OF_LIGHT / radar.carrier_hz * cfg.wavelength_scale
    doppler = 2.0 * speed_mps / lam
    if doppler > cfg.sample_rate_hz / 2.0:
        raise ValueError("undersampled Doppler")
    n = round(cfg.duration_s * cfg.sample_rate_hz)
    t = np.arange(n) / cfg.sample_rate_hz
    return ComplexSignal(amplitude * np.exp(2j * math.pi * doppler * t), cfg.sample_rate_hz)


def default_radars(distance_m: float = 1.0) -> tuple[RadarPose, RadarPose]:
    """The frontal (0 deg, 77 GHz) and side (90 deg, 79 GHz) radar poses."""
    return (
        RadarPose(position=(0.0, distance_m, 0.0), carrier_hz=77e9, radar_id="0deg"),
        RadarPose(position=(distance_m, 0.0, 0.0), carrier_hz=79e9, radar_id="90deg"),
    )


@dataclass(frozen=True)
class DatasetRequest:
    """Shape of a labeled synthetic dataset."""

    n_train: int = 120
    n_test: int = 48
    classes: tuple = MOTION_CLASSES
    master_seed: int = 0
    swing_rate_jitter: float = 0.15
    speed_jitter: float = 0.10
    base_scene: MotionScene = MotionScene()
    body: BodyEllipsoid = BodyEllipsoid()
    sim: SimConfig = SimConfig()
    radars: tuple = default_radars()
    csv: bool = False

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError("n_train must be >= 1 and n_test >= 0")
        for c in self.classes:
            if c not in MOTION_CLASSES:
                raise ValueError(f"unknown motion class {c!r}")


def write_signal_file(path, signal: ComplexSignal, meta: dict, csv: bool = False) -> None:
    """Write interleaved little-endian float64 I/Q (or CSV) plus a JSON sidecar."""
    path = Path(path)
    if csv:
        with open(path, "w") as fh:
            fh.write("t_s,i,q\n")
            for ts, v in zip(signal.times_s, signal.samples):
                fh.write(f"{float(ts)!r},{float(v.real)!r},{float(v.imag)!r}\n")
    else:
        interleaved = np.empty(2 * signal.samples.size, dtype="<f8")
        interleaved[0::2] = signal.samples.real
        interleaved[1::2] = signal.samples.imag
        path.write_bytes(interleaved.tobytes())
    sidecar = dict(meta)
    sidecar.setdefault("format", "csv-tiq-v1" if csv else SIGNAL_FORMAT)
    sidecar["sample_rate_hz"] = signal.sample_rate_hz
    sidecar["duration_s"] = signal.duration_s
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_signal_file(path) -> tuple[ComplexSignal, dict]:
    """Read a signal written by :func:`write_signal_file`."""
    path = Path(path)
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    if meta.get("format") == "csv-tiq-v1":
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        samples = rows[:, 1] + 1j * rows[:, 2]
    elif meta.get("format") == SIGNAL_FORMAT:
        raw = np.frombuffer(path.read_bytes(), dtype="<f8")
        samples = raw[0::2] + 1j * raw[1::2]
    else:
        raise ValueError(f"unsupported signal format: {meta.get('format')!r}")
    return ComplexSignal(samples, float(meta["sample_rate_hz"])), meta


def _entry_seed(*key) -> int:
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0] & 0x7FFFFFFF)


def generate_dataset(request: DatasetRequest, out_dir) -> dict:
    """Synthesize the labeled multistatic dataset and its manifest.

    Every (class, sample) entry draws jittered kinematics from a seed
    derived from the master seed and entry index; both radar poses see the
    same motion (shared phases) with independent receiver noise. Returns
    the manifest, also written to ``<out_dir>/manifest.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_class = request.n_train + request.n_test
    entries = []
    for ci, cls in enumerate(request.classes):
        for si in range(per_class):
            entry_index = ci * per_class + si
            rng = np.random.default_rng(np.random.SeedSequence((request.master_seed, entry_index)))
            scene = dataclasses.replace(
                request.base_scene,
                motion_class=cls,
                swing_rate_hz=request.base_scene.swing_rate_hz
                * (1.0 + request.swing_rate_jitter * (2.0 * rng.random() - 1.0)),
                limb_peak_speed_mps=request.base_scene.limb_peak_speed_mps
                * (1.0 + request.speed_jitter * (2.0 * rng.random() - 1.0)),
                swing_phase_rad=2.0 * math.pi * rng.random(),
            )
            split = "train" if si < request.n_train else "test"
            for ri, radar in enumerate(request.radars):
                seed = _entry_seed(request.master_seed, entry_index, ri)
                sim = dataclasses.replace(request.sim, rng_seed=seed)
                signal = synth_echo(scene, radar, request.body, sim)
                ext = "csv" if request.csv else "iq"
                fname = f"{cls}_{si:03d}_{radar.radar_id}.{ext}"
                meta = {
                    "class": cls,
                    "radar_id": radar.radar_id,
                    "seed": seed,
                    "scene_index": si,
                }
                write_signal_file(out / fname, signal, meta, csv=request.csv)
                entries.append(
                    {
                        "file": fname,
                        "class": cls,
                        "radar_id": radar.radar_id,
                        "split": split,
                        "seed": seed,
                        "scene_index": si,
                    }
                )
    manifest = {
        "format": DATASET_FORMAT,
        "master_seed": request.master_seed,
        "n_train": request.n_train,
        "n_test": request.n_test,
        "classes": list(request.classes),
        "radar_ids": [r.radar_id for r in request.radars],
        "sample_rate_hz": request.sim.sample_rate_hz,
        "duration_s": request.sim.duration_s,
        "entries": entries,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
