"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the classification criterion builds a full synthetic dataset and
takes a few minutes.
"""

import json
import math
import time

import numpy as np
import pytest

from microdoppler.elm import ElmConfig, elm_predict, elm_train
from microdoppler.emd import CeemdConfig, ceemd
from microdoppler.features import EmbeddingConfig, approximate_entropy, permutation_entropy
from microdoppler.pipeline import PipelineConfig, run_pipeline, write_report
from microdoppler.selection import EsConfig, limb_energy_ratio, otsu_filter
from microdoppler.signals import Spectrogram
from microdoppler.simulate import (
    BodyEllipsoid,
    DatasetRequest,
    MotionScene,
    SimConfig,
    calibrated_area_fractions,
    default_radars,
    ellipsoid_rcs,
    frontal_rcs,
    synth_echo,
)

ACCEPT_CEEMD = CeemdConfig(ensemble_pairs=1, noise_amplitude_rel=0.1, rng_seed=0)


def announce(num, ok, detail):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_1_ceemd_reconstruction():
    t0 = time.time()
    worst = 0.0
    cfg = CeemdConfig(ensemble_pairs=2, noise_amplitude_rel=0.2)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(2048)
        result = ceemd(x, CeemdConfig(**{**cfg.__dict__, "rng_seed": seed}))
        err = np.linalg.norm(result.reconstruct() - x) / np.linalg.norm(x)
        worst = max(worst, err)
    elapsed = time.time() - t0
    announce(
        1,
        worst <= 1e-8 and elapsed <= 60.0,
        f"100 signals, worst relative L2 {worst:.2e}, {elapsed:.1f}s (limit 60s)",
    )


def brute_force_apen(x, m, r):
    x = np.asarray(x, dtype=float)
    n = x.size

    def phi(mm):
        nm = n - mm + 1
        templates = np.array([x[i : i + mm] for i in range(nm)])
        total = 0.0
        for i in range(nm):
            dist = np.max(np.abs(templates - templates[i]), axis=1)
            total += math.log(np.count_nonzero(dist <= r) / nm)
        return total / nm

    return phi(m) - phi(m + 1)


def brute_force_pe_counts(x, m):
    counts = {}
    for i in range(len(x) - m + 1):
        window = x[i : i + m]
        pattern = tuple(sorted(range(m), key=lambda k: (window[k], k)))
        counts[pattern] = counts.get(pattern, 0) + 1
    return counts


def test_criterion_2_entropy_oracles():
    cfg = EmbeddingConfig(m=2, r_rel=0.2)
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(20, 201))
        x = rng.standard_normal(n)
        r = cfg.r_rel * float(np.std(x))
        got = approximate_entropy(x, cfg)
        ref = brute_force_apen(x, cfg.m, r)
        worst = max(worst, abs(got - ref))
    apen_ok = worst <= 1e-12

    pe_ok = True
    for seed in range(30):
        rng = np.random.default_rng(2000 + seed)
        x = rng.standard_normal(200)
        for m in (2, 3):
            counts = brute_force_pe_counts(x, m)
            total = sum(counts.values())
            ref = -sum((c / total) * math.log(c / total) for c in sorted(counts.values()))
            got = permutation_entropy(x, EmbeddingConfig(m=m))
            if abs(got - ref) > 1e-12:
                pe_ok = False

    alternating = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    hand = approximate_entropy(alternating, EmbeddingConfig(m=2, r_rel=0.5))
    hand_ok = abs(hand - 0.0201) <= 1e-4

    announce(
        2,
        apen_ok and pe_ok and hand_ok,
        f"ApEn worst dev {worst:.2e} (<=1e-12), PE exhaustive match {pe_ok}, "
        f"alternating ApEn {hand:.6f} (0.0201 +- 1e-4)",
    )


def test_criterion_3_otsu_exhaustive():
    n_bins = 64
    all_match = True
    for seed in range(50):
        rng = np.random.default_rng(3000 + seed)
        mag = rng.random((16, 16)) * rng.uniform(1.0, 50.0)
        spec = Spectrogram(mag, np.arange(16.0), np.arange(16.0))
        got, _ = otsu_filter(spec, n_bins=n_bins)

        lo, hi = float(mag.min()), float(mag.max())
        counts, edges = np.histogram(mag, bins=n_bins, range=(lo, hi))
        mids = 0.5 * (edges[:-1] + edges[1:])
        best_t, best_var = 1, -1.0
        for t in range(1, n_bins):
            n0, n1 = counts[:t].sum(), counts[t:].sum()
            if n0 == 0 or n1 == 0:
                continue
            mu0 = float(np.dot(counts[:t], mids[:t])) / n0
            mu1 = float(np.dot(counts[t:], mids[t:])) / n1
            var = (n0 / mag.size) * (n1 / mag.size) * (mu0 - mu1) ** 2
            if var > best_var:
                best_var, best_t = var, t
        if got != float(edges[best_t]):
            all_match = False
    announce(3, all_match, "50 random matrices, thresholds equal exhaustive search bin-for-bin")


def test_criterion_4_rcs_identities():
    sphere_ok = True
    for radius in (0.2, 1.0, 3.7):
        body = BodyEllipsoid(a=radius, b=radius, c=radius)
        for theta, phi in ((0.3, 1.1), (math.pi / 2, math.pi / 2), (2.2, -0.4)):
            if not math.isclose(ellipsoid_rcs(body, theta, phi), math.pi * radius**2, rel_tol=1e-12):
                sphere_ok = False

    rng = np.random.default_rng(4)
    frontal_ok = True
    ordering_ok = True
    for _ in range(100):
        b = rng.uniform(0.05, 0.5)
        a = b * rng.uniform(1.001, 3.0)
        c = rng.uniform(0.2, 1.8)
        body = BodyEllipsoid(a=a, b=b, c=c)
        full = ellipsoid_rcs(body, math.pi / 2, math.pi / 2)
        if not math.isclose(frontal_rcs(body), math.sqrt(full), rel_tol=1e-12):
            frontal_ok = False
        if full < ellipsoid_rcs(body, math.pi / 2, 0.0):
            ordering_ok = False
    announce(
        4,
        sphere_ok and frontal_ok and ordering_ok,
        f"sphere pi*R^2 {sphere_ok}, frontal sqrt identity {frontal_ok}, "
        f"frontal >= side for a > b on 100 bodies {ordering_ok}",
    )


def test_criterion_5_radar_selection():
    r0, r90 = default_radars()
    es = EsConfig()
    selected_frontal = 0
    ratios0 = []
    rng = np.random.default_rng(55)
    n_scenes = 50
    for k in range(n_scenes):
        scene = MotionScene(
            motion_class="alternating_arms",
            swing_rate_hz=1.0 * (1 + 0.15 * (2 * rng.random() - 1)),
            swing_phase_rad=2 * math.pi * rng.random(),
            part_area_fractions=calibrated_area_fractions(),
        )
        sim = SimConfig(duration_s=2.0, snr_db=20.0, rng_seed=5000 + k)
        cfg = CeemdConfig(ensemble_pairs=1, noise_amplitude_rel=0.1, rng_seed=k)
        ratio0 = limb_energy_ratio(synth_echo(scene, r0, cfg=sim), cfg, es)
        ratio90 = limb_energy_ratio(synth_echo(scene, r90, cfg=sim), cfg, es)
        if abs(ratio0 - es.target_ratio) <= abs(ratio90 - es.target_ratio):
            selected_frontal += 1
        ratios0.append(ratio0)
    ratios0 = np.array(ratios0)
    frac = selected_frontal / n_scenes
    in_band = np.all(np.abs(ratios0 - 0.64) <= 0.10)
    announce(
        5,
        frac >= 0.95 and in_band,
        f"0deg selected in {100 * frac:.0f}% of {n_scenes} scenes (>=95%), "
        f"0deg ratio range [{ratios0.min():.3f}, {ratios0.max():.3f}] within 0.64 +- 0.10",
    )


def test_criterion_6_classification(tmp_path):
    t0 = time.time()
    cfg = PipelineConfig(
        data_dir=str(tmp_path / "acceptance_ds"),
        request=DatasetRequest(
            n_train=120,
            n_test=48,
            master_seed=7,
            base_scene=MotionScene(part_area_fractions=calibrated_area_fractions()),
            sim=SimConfig(duration_s=2.0, snr_db=20.0),
        ),
        ceemd=ACCEPT_CEEMD,
        trials=50,
        compare_fixed_radars=True,
    )
    report = run_pipeline(cfg)
    elapsed = time.time() - t0
    acc_selected = report["results"]["selected"]["mean_accuracy_pct"]
    acc_fixed_90 = report["results"]["fixed_90deg"]["mean_accuracy_pct"]
    announce(
        6,
        acc_selected >= 95.0 and acc_selected >= acc_fixed_90 and elapsed <= 600.0,
        f"selected-radar accuracy {acc_selected:.2f}% (>=95), fixed-90deg {acc_fixed_90:.2f}% "
        f"(ordering holds: {acc_selected >= acc_fixed_90}), {elapsed:.0f}s (limit 600s)",
    )


def test_criterion_7_elm_properties():
    interp_ok = True
    for seed in range(10):
        rng = np.random.default_rng(7000 + seed)
        X = rng.standard_normal((30, 4))
        y = rng.integers(0, 3, size=30)
        model = elm_train(X, y, ElmConfig(hidden_units=64, ridge_lambda=0.0, rng_seed=seed))
        labels, _ = elm_predict(model, X)
        if not np.array_equal(labels, y):
            interp_ok = False

    rng = np.random.default_rng(77)
    X = rng.standard_normal((60, 5))
    y = rng.integers(0, 3, size=60)
    m1 = elm_train(X, y, ElmConfig(rng_seed=13))
    m2 = elm_train(X, y, ElmConfig(rng_seed=13))
    determinism_ok = (
        np.array_equal(m1.input_weights, m2.input_weights)
        and np.array_equal(m1.biases, m2.biases)
        and np.array_equal(m1.output_weights, m2.output_weights)
    )

    residuals = []
    for lam in (0.0, 1e-6, 1e-3, 1.0):
        model = elm_train(X, y, ElmConfig(hidden_units=40, ridge_lambda=lam, rng_seed=3))
        X_norm = (X - model.feature_means) / np.where(model.feature_stds > 0, model.feature_stds, 1.0)
        H = np.maximum(X_norm @ model.input_weights.T + model.biases, 0.0)
        T = np.zeros((60, len(model.label_map)))
        for i, lab in enumerate(y):
            T[i, model.label_map.index(lab)] = 1.0
        residuals.append(float(np.linalg.norm(H @ model.output_weights - T)))
    monotone_ok = all(residuals[i] <= residuals[i + 1] + 1e-9 for i in range(len(residuals) - 1))

    announce(
        7,
        interp_ok and determinism_ok and monotone_ok,
        f"interpolation 10/10 seeds {interp_ok}, determinism {determinism_ok}, "
        f"residuals {['%.3g' % r for r in residuals]} non-decreasing {monotone_ok}",
    )


def test_criterion_8_end_to_end_determinism(tmp_path):
    cfg = PipelineConfig(
        data_dir=str(tmp_path / "det_ds"),
        request=DatasetRequest(n_train=4, n_test=2, master_seed=21, sim=SimConfig(duration_s=1.0)),
        ceemd=ACCEPT_CEEMD,
        trials=2,
    )
    report_a = run_pipeline(cfg)
    report_b = run_pipeline(cfg)
    path_a = tmp_path / "report_a.json"
    path_b = tmp_path / "report_b.json"
    write_report(report_a, path_a)
    write_report(report_b, path_b)
    identical = path_a.read_bytes() == path_b.read_bytes()
    announce(8, identical, f"two pipeline runs, report bytes identical: {identical}")
