"""End-to-end orchestration: dataset, selection, features, training, report.

The pipeline synthesizes (or loads) the labeled multistatic dataset, scores
every scene's radars by limb-energy ratio, extracts the feature bank from
the selected radar's echo, trains the classifier across repeated trials,
and emits a deterministic JSON report. Scenes are processed independently
and may run in parallel; results aggregate in scene order, so reports are
byte-identical for identical configs and seeds.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .elm import ElmConfig, elm_train, evaluate
from .emd import CeemdConfig, ceemd
from .features import (
    EmbeddingConfig,
    FEATURE_GROUPS,
    MseConfig,
    build_feature_vector,
    feature_schema,
)
from .selection import EsConfig, limb_energy_ratio, reconstruct_limb
from .signals import ComplexSignal, StftConfig
from .simulate import (
    BodyEllipsoid,
    DatasetRequest,
    MotionScene,
    RadarPose,
    SimConfig,
    generate_dataset,
    read_signal_file,
)

__all__ = ["PipelineConfig", "run_pipeline", "config_to_dict", "config_from_dict"]

REPORT_FORMAT = "report-v1"

FEATURE_SOURCES = ("full_signal", "limb_reconstruction")


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the end-to-end run, nested per subsystem."""

    data_dir: str = "dataset"
    request: DatasetRequest = DatasetRequest()
    ceemd: CeemdConfig = CeemdConfig()
    es: EsConfig = EsConfig()
    stft: StftConfig = StftConfig()
    embedding: EmbeddingConfig = EmbeddingConfig()
    mse_max_scale: int = 5
    elm: ElmConfig = ElmConfig()
    feature_groups: tuple = FEATURE_GROUPS
    features_source: str = "full_signal"
    trials: int = 1000
    reshuffle_splits: bool = False
    compare_fixed_radars: bool = False
    ablation: bool = False
    jobs: int = 1

    def __post_init__(self):
        if not self.feature_groups:
            raise ValueError("at least one feature group must be enabled")
        for g in self.feature_groups:
            if g not in FEATURE_GROUPS:
                raise ValueError(f"unknown feature group {g!r}")
        if self.features_source not in FEATURE_SOURCES:
            raise ValueError(f"features_source must be one of {FEATURE_SOURCES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.mse_max_scale < 1:
            raise ValueError("mse_max_scale must be >= 1")
        object.__setattr__(self, "feature_groups", tuple(self.feature_groups))


def config_to_dict(cfg: PipelineConfig) -> dict:
    d = dataclasses.asdict(cfg)
    # tuples serialize as lists; radar positions stay plain 3-lists
    return json.loads(json.dumps(d))


def config_from_dict(d: dict) -> PipelineConfig:
    d = dict(d)
    kwargs: dict = {}
    if "request" in d:
        r = dict(d.pop("request"))
        if "base_scene" in r:
            r["base_scene"] = MotionScene(**r["base_scene"])
        if "body" in r:
            r["body"] = BodyEllipsoid(**r["body"])
        if "sim" in r:
            r["sim"] = SimConfig(**r["sim"])
        if "radars" in r:
            r["radars"] = tuple(RadarPose(**rp) for rp in r["radars"])
        if "classes" in r:
            r["classes"] = tuple(r["classes"])
        kwargs["request"] = DatasetRequest(**r)
    for key, cls in (
        ("ceemd", CeemdConfig),
        ("es", EsConfig),
        ("stft", StftConfig),
        ("embedding", EmbeddingConfig),
        ("elm", ElmConfig),
    ):
        if key in d:
            kwargs[key] = cls(**d.pop(key))
    if "feature_groups" in d:
        d["feature_groups"] = tuple(d["feature_groups"])
    kwargs.update(d)
    return PipelineConfig(**kwargs)


def set_config_path(d: dict, dotted: str, raw_value: str) -> None:
    """Override a nested config entry by dot path, JSON-decoding the value."""
    keys = dotted.split(".")
    node = d
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            raise KeyError(f"unknown config path: {dotted}")
        node = node[k]
    if keys[-1] not in node:
        raise KeyError(f"unknown config path: {dotted}")
    try:
        node[keys[-1]] = json.loads(raw_value)
    except json.JSONDecodeError:
        node[keys[-1]] = raw_value


def _ensure_dataset(cfg: PipelineConfig) -> dict:
    manifest_path = Path(cfg.data_dir) / "manifest.json"
    if manifest_path.exists():
        with open(manifest_path) as fh:
            return json.load(fh)
    return generate_dataset(cfg.request, cfg.data_dir)


def _scene_groups(manifest: dict) -> list:
    """Group manifest entries into scenes keyed by (class, scene_index)."""
    scenes: dict = {}
    for entry in manifest["entries"]:
        key = (entry["class"], entry["scene_index"])
        scenes.setdefault(key, {"class": entry["class"], "scene_index": entry["scene_index"],
                                "split": entry["split"], "files": {}})
        scenes[key]["files"][entry["radar_id"]] = entry["file"]
    return [scenes[k] for k in sorted(scenes.keys())]


def _process_scene(args) -> dict:
    scene, data_dir, cfg = args
    mse_cfg = MseConfig(max_scale=cfg.mse_max_scale, base=cfg.embedding)
    ratios: dict = {}
    feats: dict = {}
    signals: dict = {}
    imf_sets: dict = {}
    for radar_id in sorted(scene["files"]):
        sig, _meta = read_signal_file(Path(data_dir) / scene["files"][radar_id])
        signals[radar_id] = sig
        try:
            imf = ceemd(sig.samples, cfg.ceemd)
            imf_sets[radar_id] = imf
            ratios[radar_id] = limb_energy_ratio(sig, cfg.ceemd, cfg.es, cfg.stft, imf_set=imf)
        except ValueError:
            ratios[radar_id] = None

    valid = {r: v for r, v in ratios.items() if v is not None}
    if not valid:
        return {"class": scene["class"], "scene_index": scene["scene_index"],
                "split": scene["split"], "ratios": ratios, "selected": None, "features": {}}
    selected = min(valid, key=lambda r: (abs(valid[r] - cfg.es.target_ratio), r))

    wanted = sorted(scene["files"]) if cfg.compare_fixed_radars else [selected]
    for radar_id in wanted:
        sig = signals[radar_id]
        if cfg.features_source == "limb_reconstruction":
            if radar_id not in imf_sets or imf_sets[radar_id].n_imfs == 0:
                feats[radar_id] = (None, False, "limb_reconstruction: no IMFs")
                continue
            limb = reconstruct_limb(imf_sets[radar_id], cfg.es).astype(np.complex128)
            sig = ComplexSignal(limb, sig.sample_rate_hz, sig.t0_s)
        vec = build_feature_vector(sig, cfg.embedding, mse_cfg, cfg.feature_groups,
                                   source_id=scene["files"][radar_id])
        feats[radar_id] = (vec.values if vec.valid else None, vec.valid, vec.error)
    return {"class": scene["class"], "scene_index": scene["scene_index"],
            "split": scene["split"], "ratios": ratios, "selected": selected,
            "features": feats}


def _trial_metrics(rows, cfg: PipelineConfig, columns=None) -> dict:
    """Train/evaluate over trials, re-drawing only the classifier seed."""
    classes = sorted({r["class"] for r in rows})
    values = np.array([r["values"] for r in rows])
    if columns is not None:
        values = values[:, columns]
    labels = np.array([r["class"] for r in rows])
    base_split = np.array([r["split"] for r in rows])

    accuracies = []
    confusion_total = None
    recall_sums: dict = {}
    for trial in range(cfg.trials):
        if cfg.reshuffle_splits:
            split = base_split.copy()
            rng = np.random.default_rng(
                np.random.SeedSequence((cfg.request.master_seed, 104729, trial))
            )
            for cls in classes:
                idx = np.flatnonzero(labels == cls)
                n_train = int(np.sum(base_split[idx] == "train"))
                perm = rng.permutation(idx)
                split[perm[:n_train]] = "train"
                split[perm[n_train:]] = "test"
        else:
            split = base_split
        train = split == "train"
        test = ~train
        model = elm_train(
            values[train],
            labels[train],
            dataclasses.replace(cfg.elm, rng_seed=cfg.elm.rng_seed + trial),
        )
        metrics = evaluate(model, values[test], labels[test])
        accuracies.append(metrics["accuracy_pct"])
        conf = np.array(metrics["confusion"])
        confusion_total = conf if confusion_total is None else confusion_total + conf
        for lab, rec in metrics["per_class_recall"].items():
            recall_sums[lab] = recall_sums.get(lab, 0.0) + rec

    acc = np.array(accuracies)
    return {
        "trials": cfg.trials,
        "n_train": int(np.sum(base_split == "train")),
        "n_test": int(np.sum(base_split == "test")),
        "mean_accuracy_pct": float(np.mean(acc)),
        "std_accuracy_pct": float(np.std(acc)),
        "min_accuracy_pct": float(np.min(acc)),
        "max_accuracy_pct": float(np.max(acc)),
        "per_class_recall_mean": {lab: v / cfg.trials for lab, v in sorted(recall_sums.items())},
        "confusion_total": confusion_total.tolist(),
        "labels": [str(c) for c in classes],
    }


def _group_columns(schema, group: str):
    prefix = {"time_domain": ("td_",), "frequency_domain": ("fd_",),
              "entropy": ("apen", "perm_entropy", "mse_")}[group]
    return [i for i, name in enumerate(schema) if name.startswith(prefix)]


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run the full chain and return the report dictionary.

    Scenes failing every channel or yielding invalid features are excluded
    and counted. The report is stable under re-runs with identical config
    and master seed.
    """
    manifest = _ensure_dataset(cfg)
    scenes = _scene_groups(manifest)
    tasks = [(scene, cfg.data_dir, cfg) for scene in scenes]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_process_scene, tasks, chunksize=4))
    else:
        outcomes = [_process_scene(t) for t in tasks]

    radar_ids = sorted(manifest["radar_ids"])
    counts = {r: 0 for r in radar_ids}
    ratio_sums = {r: 0.0 for r in radar_ids}
    ratio_counts = {r: 0 for r in radar_ids}
    excluded_selection = 0
    for out in outcomes:
        if out["selected"] is None:
            excluded_selection += 1
            continue
        counts[out["selected"]] += 1
        for r, v in out["ratios"].items():
            if v is not None:
                ratio_sums[r] += v
                ratio_counts[r] += 1
    n_selected = sum(counts.values())

    schema = feature_schema(cfg.feature_groups, cfg.mse_max_scale)
    variants: dict = {"selected": []}
    if cfg.compare_fixed_radars:
        for r in radar_ids:
            variants[f"fixed_{r}"] = []
    excluded_features = 0
    for out in outcomes:
        if out["selected"] is None:
            continue
        values, valid, _err = out["features"].get(out["selected"], (None, False, "missing"))
        if valid:
            variants["selected"].append(
                {"values": values, "class": out["class"], "split": out["split"]}
            )
        else:
            excluded_features += 1
        if cfg.compare_fixed_radars:
            for r in radar_ids:
                v, ok, _e = out["features"].get(r, (None, False, "missing"))
                if ok:
                    variants[f"fixed_{r}"].append(
                        {"values": v, "class": out["class"], "split": out["split"]}
                    )

    results = {}
    for name, rows in variants.items():
        if not rows:
            continue
        results[name] = _trial_metrics(rows, cfg)

    ablation = {}
    if cfg.ablation:
        for group in cfg.feature_groups:
            cols = _group_columns(schema, group)
            ablation[group] = _trial_metrics(variants["selected"], cfg, columns=cols)

    report = {
        "format": REPORT_FORMAT,
        "config": config_to_dict(cfg),
        "dataset": {
            "classes": manifest["classes"],
            "radar_ids": manifest["radar_ids"],
            "n_scenes": len(scenes),
            "n_train": manifest["n_train"],
            "n_test": manifest["n_test"],
            "sample_rate_hz": manifest["sample_rate_hz"],
            "duration_s": manifest["duration_s"],
        },
        "selection": {
            "target_ratio": cfg.es.target_ratio,
            "selected_counts": counts,
            "selected_fractions": {
                r: (counts[r] / n_selected if n_selected else 0.0) for r in radar_ids
            },
            "mean_ratio": {
                r: (ratio_sums[r] / ratio_counts[r] if ratio_counts[r] else None)
                for r in radar_ids
            },
            "majority_radar": min(counts, key=lambda r: (-counts[r], r)) if n_selected else None,
        },
        "excluded": {
            "selection_failures": excluded_selection,
            "feature_failures": excluded_features,
        },
        "feature_schema": list(schema),
        "results": results,
        "ablation": ablation,
    }
    return report


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
