"""Command-line front end over the library operations.

Every subcommand is a thin wrapper: ``simulate`` writes a dataset,
``decompose``/``select``/``features``/``train``/``eval`` run one stage on
files, ``spectrogram`` exports time-frequency images, and ``pipeline`` runs
the whole chain from a JSON config with dot-path overrides. Errors leave a
machine-readable JSON object on stderr and a non-zero exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .elm import ElmConfig, elm_train, evaluate, load_model, save_model
from .emd import CeemdConfig, ceemd, write_imfs_csv
from .features import EmbeddingConfig, FEATURE_GROUPS, MseConfig, build_feature_vector, write_feature_csv
from .pipeline import (
    PipelineConfig,
    config_from_dict,
    config_to_dict,
    run_pipeline,
    set_config_path,
    write_report,
)
from .selection import EsConfig, limb_energy_ratio, otsu_filter, write_mask_pgm
from .signals import StftConfig, stft, write_spectrogram_csv, write_spectrogram_pgm
from .simulate import DatasetRequest, SimConfig, generate_dataset, read_signal_file


def _load_manifest(data_dir: Path) -> dict:
    with open(data_dir / "manifest.json") as fh:
        return json.load(fh)


def _cmd_simulate(args) -> int:
    request = DatasetRequest(
        n_train=args.n_train,
        n_test=args.n_test,
        master_seed=args.seed,
        sim=SimConfig(duration_s=args.duration, snr_db=args.snr),
        csv=args.csv,
    )
    manifest = generate_dataset(request, args.out)
    print(f"wrote {len(manifest['entries'])} signal files to {args.out}")
    return 0


def _cmd_decompose(args) -> int:
    signal, _meta = read_signal_file(args.infile)
    cfg = CeemdConfig(
        noise_amplitude_rel=args.noise,
        ensemble_pairs=args.pairs,
        max_imfs=args.max_imfs,
        rng_seed=args.seed,
    )
    imf_set = ceemd(signal.samples, cfg)
    write_imfs_csv(imf_set, args.out, cfg)
    print(f"wrote {imf_set.n_imfs} IMFs + residual to {args.out}")
    return 0


def _cmd_select(args) -> int:
    data_dir = Path(args.indir)
    manifest = _load_manifest(data_dir)
    ceemd_cfg = CeemdConfig(ensemble_pairs=args.pairs, rng_seed=args.seed)
    es_cfg = EsConfig(target_ratio=args.target)
    scenes: dict = {}
    for entry in manifest["entries"]:
        scenes.setdefault((entry["class"], entry["scene_index"]), []).append(entry)
    per_scene = []
    counts: dict = {}
    for key in sorted(scenes):
        ratios = {}
        for entry in scenes[key]:
            sig, _ = read_signal_file(data_dir / entry["file"])
            try:
                ratios[entry["radar_id"]] = limb_energy_ratio(sig, ceemd_cfg, es_cfg)
            except ValueError:
                ratios[entry["radar_id"]] = None
        valid = {r: v for r, v in ratios.items() if v is not None}
        selected = min(valid, key=lambda r: (abs(valid[r] - es_cfg.target_ratio), r)) if valid else None
        if selected is not None:
            counts[selected] = counts.get(selected, 0) + 1
        per_scene.append(
            {"class": key[0], "scene_index": key[1], "ratios": ratios, "selected": selected}
        )
    doc = {
        "target_ratio": es_cfg.target_ratio,
        "scenes": per_scene,
        "selected_counts": counts,
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"selection over {len(per_scene)} scenes -> {args.out}")
    return 0


def _cmd_features(args) -> int:
    data_dir = Path(args.indir)
    manifest = _load_manifest(data_dir)
    embed = EmbeddingConfig()
    mse = MseConfig(max_scale=args.mse_scales, base=embed)
    groups = tuple(args.groups.split(","))
    vectors = []
    labels = []
    for entry in manifest["entries"]:
        if args.split != "all" and entry["split"] != args.split:
            continue
        if args.radar and entry["radar_id"] != args.radar:
            continue
        sig, _ = read_signal_file(data_dir / entry["file"])
        vectors.append(build_feature_vector(sig, embed, mse, groups, source_id=entry["file"]))
        labels.append(entry["class"])
    write_feature_csv(vectors, args.out, labels)
    n_valid = sum(v.valid for v in vectors)
    print(f"wrote {n_valid} feature rows ({len(vectors) - n_valid} invalid skipped) to {args.out}")
    return 0


def _read_feature_csv(path):
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(parts)
    schema = header[2:]
    X = np.array([[float(v) for v in r[2:]] for r in rows])
    y = np.array([r[1] for r in rows])
    return X, y, schema


def _cmd_train(args) -> int:
    X, y, _schema = _read_feature_csv(args.features)
    cfg = ElmConfig(hidden_units=args.hidden, ridge_lambda=args.ridge, rng_seed=args.seed)
    model = elm_train(X, y, cfg)
    save_model(model, args.out)
    metrics = evaluate(model, X, y)
    print(f"trained on {X.shape[0]} rows, training accuracy {metrics['accuracy_pct']:.2f}% -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    X, y, _schema = _read_feature_csv(args.features)
    model = load_model(args.model)
    metrics = evaluate(model, X, y)
    with open(args.out, "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"accuracy {metrics['accuracy_pct']:.2f}% on {X.shape[0]} rows -> {args.out}")
    return 0


def _cmd_spectrogram(args) -> int:
    signal, _meta = read_signal_file(args.infile)
    cfg = StftConfig(window_len=args.window, hop=args.hop, fft_len=max(args.fft, args.window))
    spec = stft(signal, cfg)
    write_spectrogram_pgm(spec, args.out)
    outputs = [str(args.out)]
    if args.csv_out:
        write_spectrogram_csv(spec, args.csv_out)
        outputs.append(str(args.csv_out))
    if args.otsu_out:
        _thr, mask = otsu_filter(spec)
        write_mask_pgm(mask, args.otsu_out)
        outputs.append(str(args.otsu_out))
    print("wrote " + ", ".join(outputs))
    return 0


def _cmd_pipeline(args) -> int:
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    else:
        doc = config_to_dict(PipelineConfig())
    for override in args.set or []:
        dotted, _, raw = override.partition("=")
        if not _:
            raise ValueError(f"--set expects key.path=value, got {override!r}")
        set_config_path(doc, dotted, raw)
    if args.trials is not None:
        doc["trials"] = args.trials
    if args.jobs is not None:
        doc["jobs"] = args.jobs
    if args.data_dir is not None:
        doc["data_dir"] = args.data_dir
    cfg = config_from_dict(doc)
    report = run_pipeline(cfg)
    write_report(report, args.out)
    sel = report["selection"]
    res = report["results"].get("selected", {})
    print(
        f"majority radar {sel['majority_radar']}, "
        f"mean accuracy {res.get('mean_accuracy_pct', float('nan')):.2f}% "
        f"over {res.get('trials', 0)} trials -> {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microdoppler", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a labeled dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=120)
    p.add_argument("--n-test", type=int, default=48)
    p.add_argument("--duration", type=float, default=4.5)
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("decompose", help="CEEMD of one signal file to CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--max-imfs", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("select", help="limb-energy radar selection over a dataset")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pairs", type=int, default=1)
    p.add_argument("--target", type=float, default=0.64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("features", help="extract feature vectors to CSV")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.add_argument("--radar", default=None, help="restrict to one radar id")
    p.add_argument("--groups", default=",".join(FEATURE_GROUPS))
    p.add_argument("--mse-scales", type=int, default=5)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="train the classifier on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", type=int, default=200)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("spectrogram", help="export a spectrogram image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv-out", default=None)
    p.add_argument("--otsu-out", default=None)
    p.add_argument("--window", type=int, default=256)
    p.add_argument("--hop", type=int, default=64)
    p.add_argument("--fft", type=int, default=256)
    p.set_defaults(func=_cmd_spectrogram)

    p = sub.add_parser("pipeline", help="run the full chain from a JSON config")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--set", action="append", metavar="KEY.PATH=VALUE")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface every failure as machine-readable JSON
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
