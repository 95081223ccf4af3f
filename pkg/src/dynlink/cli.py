"""Command-line entry point: ingest, train, evaluate, ablate, analyze.

Exit codes: 0 success, 2 input error, 3 numeric failure. Every command is
deterministic given identical inputs and seeds; run directories are keyed by
a hash of the resolved configuration, and artifacts contain no timestamps.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .analysis import density_series, null_model_report
from .config import resolve_train_config, config_dict
from .data import split_train_test
from .datasets import (
    DatasetManifest,
    data_root,
    load_container,
    load_raw,
    resolve_manifest,
    save_container,
)
from .errors import DynlinkError, NumericError
from .evaluation import REGIMES, EvalConfig, evaluate
from .model import config_hash, load_checkpoint, save_checkpoint
from .rng import split_run_streams
from .training import train_model

INPUT_ERRORS = (FileNotFoundError, ValueError, KeyError, DynlinkError)

ABLATION_STAGES = (
    ("prediction", {"use_reconstruction": False, "use_local_nce": False, "use_global_nce": False}),
    ("prediction+reconstruction", {"use_local_nce": False, "use_global_nce": False}),
    ("prediction+reconstruction+local_nce", {"use_global_nce": False}),
    ("full", {}),
)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(run_dir: Path, payload: dict, inputs: list[Path], outputs: list[Path]) -> None:
    payload = dict(payload)
    payload["input_hashes"] = {str(p): _sha256(p) for p in inputs}
    payload["output_hashes"] = {str(p): _sha256(p) for p in sorted(outputs)}
    with open(run_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_seeds(args) -> list[int]:
    if args.seeds:
        return [int(tok) for tok in args.seeds.split(",") if tok.strip() != ""]
    return [args.seed if args.seed is not None else 0]


def _container_path(out: Path, name: str) -> Path:
    return out / "data" / f"{name}.npz"


def _load_ingested(out: Path, dataset: str):
    path = _container_path(out, dataset)
    if not path.exists():
        raise FileNotFoundError(f"dataset {dataset!r} is not ingested; run `dynlink ingest` first")
    return load_container(path)


def _train_overrides(args) -> dict:
    keys = (
        "epochs",
        "alpha",
        "beta",
        "nce_negatives",
        "d_enc",
        "d_state",
        "lr",
        "weight_decay",
    )
    overrides = {key: getattr(args, key, None) for key in keys}
    if getattr(args, "exhaustive_nce", False):
        overrides["exhaustive_nce"] = True
    return overrides


def cmd_ingest(args) -> int:
    out = Path(args.out)
    if args.path:
        manifest = DatasetManifest(
            name=args.dataset,
            path=str(Path(args.path).resolve()),
            format=args.format,
            n_steps=args.steps,
        )
    else:
        manifest = resolve_manifest(args.dataset, data_root(args.data_root))
        if args.steps is not None:
            manifest = DatasetManifest(**{**asdict(manifest), "n_steps": args.steps})
    root = data_root(args.data_root)
    seq = load_raw(manifest, root)
    out_dir = out / "data"
    out_dir.mkdir(parents=True, exist_ok=True)
    container = _container_path(out, manifest.name)
    save_container(container, seq)
    with open(out_dir / f"{manifest.name}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"nodes={seq.n} edges={seq.total_edges} steps={seq.N}")
    print(f"wrote {container}")
    return 0


def cmd_train(args) -> int:
    out = Path(args.out)
    seq = _load_ingested(out, args.dataset)
    manifest = (
        resolve_manifest(args.dataset)
        if args.dataset in ("enron", "colab", "facebook", "synthetic")
        else None
    )
    base = {"alpha": manifest.alpha, "beta": manifest.beta} if manifest else {}
    overrides = _train_overrides(args)
    seeds = _parse_seeds(args)
    train_seq, test_indices = split_train_test(seq, n_test=args.n_test)
    config0 = resolve_train_config(args.config, {**base, **overrides})
    run_hash = config_hash({"dataset": args.dataset, "train": config_dict(config0), "seeds": seeds})
    run_dir = out / f"train-{args.dataset}-{run_hash}"
    run_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for seed in seeds:
        config = config0.with_overrides(seed=seed)
        model, history = train_model(train_seq, config)
        ckpt = run_dir / f"seed{seed}.ckpt"
        save_checkpoint(
            ckpt, model, seed=seed, epoch=getattr(model, "best_epoch", 0),
            train_config=config_dict(config),
        )
        hist_path = run_dir / f"history-seed{seed}.csv"
        history.to_csv(hist_path)
        outputs += [ckpt, hist_path]
        last = history.records[-1] if history.records else None
        final = f"total={last.total:.4f}" if last else "untrained"
        print(f"seed {seed}: {len(history)} epochs, {final} -> {ckpt}")
    _write_manifest(
        run_dir,
        {
            "command": "train",
            "dataset": args.dataset,
            "config_path": args.config,
            "config": config_dict(config0),
            "seeds": seeds,
            "test_indices": test_indices,
            "out_dir": str(run_dir),
        },
        inputs=[_container_path(out, args.dataset)],
        outputs=outputs,
    )
    print(f"run dir: {run_dir}")
    return 0


def _checkpoint_models(checkpoint_dir: Path):
    paths = sorted(checkpoint_dir.glob("seed*.ckpt"))
    if not paths:
        raise FileNotFoundError(f"no seed*.ckpt checkpoints under {checkpoint_dir}")
    models = []
    for path in paths:
        model, meta = load_checkpoint(path)
        models.append((model, int(meta["seed"])))
    return models, paths


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    seq = _load_ingested(out, args.dataset)
    _, test_indices = split_train_test(seq, n_test=args.n_test)
    regimes = tuple(REGIMES) if args.regime == "all" else (args.regime,)
    models, ckpt_paths = _checkpoint_models(Path(args.checkpoints))
    config = EvalConfig(regimes=regimes, n_test=args.n_test)
    report = evaluate(models, seq, test_indices, config)
    run_hash = config_hash(
        {
            "dataset": args.dataset,
            "regimes": list(regimes),
            "checkpoints": [p.name for p in ckpt_paths],
            "n_test": args.n_test,
        }
    )
    run_dir = out / f"eval-{args.dataset}-{run_hash}"
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = run_dir / "metrics.jsonl"
    report.to_jsonl(metrics_path)
    summary_path = run_dir / "summary.json"
    summary_path.write_text(report.summary_json() + "\n", encoding="utf-8")
    table_path = run_dir / "table.txt"
    table_path.write_text(report.format_table() + "\n", encoding="utf-8")
    _write_manifest(
        run_dir,
        {
            "command": "evaluate",
            "dataset": args.dataset,
            "regimes": list(regimes),
            "seeds": [seed for _, seed in models],
            "out_dir": str(run_dir),
        },
        inputs=[_container_path(out, args.dataset), *ckpt_paths],
        outputs=[metrics_path, summary_path, table_path],
    )
    print(report.format_table())
    print(f"run dir: {run_dir}")
    return 0


def cmd_ablate(args) -> int:
    out = Path(args.out)
    seq = _load_ingested(out, args.dataset)
    manifest = (
        resolve_manifest(args.dataset)
        if args.dataset in ("enron", "colab", "facebook", "synthetic")
        else None
    )
    base = {"alpha": manifest.alpha, "beta": manifest.beta} if manifest else {}
    overrides = _train_overrides(args)
    seeds = _parse_seeds(args)
    train_seq, test_indices = split_train_test(seq, n_test=args.n_test)
    config0 = resolve_train_config(args.config, {**base, **overrides})
    run_hash = config_hash(
        {"dataset": args.dataset, "train": config_dict(config0), "seeds": seeds, "ablate": True}
    )
    run_dir = out / f"ablate-{args.dataset}-{run_hash}"
    run_dir.mkdir(parents=True, exist_ok=True)
    eval_config = EvalConfig(regimes=("randpos-randneg",), n_test=args.n_test)
    rows = []
    outputs = []
    for stage_name, toggles in ABLATION_STAGES:
        models = []
        for seed in seeds:
            config = config0.with_overrides(seed=seed, **toggles)
            model, _ = train_model(train_seq, config)
            ckpt = run_dir / f"{stage_name.replace('+', '_')}-seed{seed}.ckpt"
            save_checkpoint(ckpt, model, seed=seed, epoch=getattr(model, "best_epoch", 0),
                            train_config=config_dict(config))
            outputs.append(ckpt)
            models.append((model, seed))
        report = evaluate(models, seq, test_indices, eval_config)
        agg = report.aggregate()["randpos-randneg"]
        rows.append(
            {
                "loss": stage_name,
                "auc_mean": agg["auc"][0],
                "auc_std": agg["auc"][1],
                "ap_mean": agg["ap"][0],
                "ap_std": agg["ap"][1],
            }
        )
    table_lines = [f"{'Loss':<40} {'AUC':>16} {'AP':>16}"]
    for row in rows:
        table_lines.append(
            f"{row['loss']:<40} "
            f"{100 * row['auc_mean']:.2f} +/- {100 * row['auc_std']:.2f} "
            f"{100 * row['ap_mean']:.2f} +/- {100 * row['ap_std']:.2f}"
        )
    table = "\n".join(table_lines)
    json_path = run_dir / "ablation.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
    table_path = run_dir / "ablation_table.txt"
    table_path.write_text(table + "\n", encoding="utf-8")
    _write_manifest(
        run_dir,
        {
            "command": "ablate",
            "dataset": args.dataset,
            "config": config_dict(config0),
            "seeds": seeds,
            "out_dir": str(run_dir),
        },
        inputs=[_container_path(out, args.dataset)],
        outputs=[*outputs, json_path, table_path],
    )
    print(table)
    print(f"run dir: {run_dir}")
    return 0


def cmd_analyze(args) -> int:
    out = Path(args.out)
    seq = _load_ingested(out, args.dataset)
    streams = split_run_streams(args.seed if args.seed is not None else 0)
    report = null_model_report(seq, samples=args.samples, rng=streams.null_models)
    density = density_series(seq)
    run_dir = out / f"analysis-{args.dataset}"
    run_dir.mkdir(parents=True, exist_ok=True)
    null_path = run_dir / "null_models.json"
    null_path.write_text(report.to_json() + "\n", encoding="utf-8")
    density_path = run_dir / "density.json"
    density_path.write_text(json.dumps(density) + "\n", encoding="utf-8")
    _write_manifest(
        run_dir,
        {"command": "analyze", "dataset": args.dataset, "samples": args.samples,
         "out_dir": str(run_dir)},
        inputs=[_container_path(out, args.dataset)],
        outputs=[null_path, density_path],
    )
    summary = report.summary()
    print(f"temporal correlation C = {summary['original']:.4f}")
    for name, stats in summary["null_models"].items():
        print(f"{name} null ({stats['flavor']}): max of {args.samples} samples = {stats['max']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", required=True, help="builtin name or manifest JSON path")
    common.add_argument("--out", default="runs", help="artifact root directory")

    p_ingest = sub.add_parser("ingest", parents=[common], help="parse a dataset into the canonical container")
    p_ingest.add_argument("--path", help="raw file path (overrides the builtin manifest)")
    p_ingest.add_argument("--format", choices=("events", "snapshots"), default="events")
    p_ingest.add_argument("--steps", type=int, help="number of snapshots for event data")
    p_ingest.add_argument("--data-root", help="directory holding raw dataset files")
    p_ingest.set_defaults(func=cmd_ingest)

    train_common = argparse.ArgumentParser(add_help=False)
    train_common.add_argument("--config", help="YAML config file")
    train_common.add_argument("--seed", type=int)
    train_common.add_argument("--seeds", help="comma-separated run seeds")
    train_common.add_argument("--epochs", type=int)
    train_common.add_argument("--alpha", type=float)
    train_common.add_argument("--beta", type=float)
    train_common.add_argument("--nce-negatives", dest="nce_negatives", type=int)
    train_common.add_argument("--exhaustive-nce", dest="exhaustive_nce", action="store_true")
    train_common.add_argument("--lr", type=float)
    train_common.add_argument("--weight-decay", dest="weight_decay", type=float)
    train_common.add_argument("--d-enc", dest="d_enc", type=int)
    train_common.add_argument("--d-state", dest="d_state", type=int)
    train_common.add_argument("--n-test", dest="n_test", type=int, default=3)

    p_train = sub.add_parser("train", parents=[common, train_common], help="train per-seed checkpoints")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", parents=[common], help="evaluate trained checkpoints")
    p_eval.add_argument("--checkpoints", required=True, help="directory with seed*.ckpt files")
    p_eval.add_argument("--regime", default="all", choices=("all",) + REGIMES)
    p_eval.add_argument("--n-test", dest="n_test", type=int, default=3)
    p_eval.set_defaults(func=cmd_evaluate)

    p_ablate = sub.add_parser("ablate", parents=[common, train_common], help="train/evaluate the four loss stages")
    p_ablate.set_defaults(func=cmd_ablate)

    p_analyze = sub.add_parser("analyze", parents=[common], help="null models and density series")
    p_analyze.add_argument("--samples", type=int, default=100)
    p_analyze.add_argument("--seed", type=int)
    p_analyze.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(json.dumps(exc.diagnostics, sort_keys=True), file=sys.stderr)
        return 3
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
