"""Command-line entry point.

Subcommands: ``validate`` (closure-check a complex file), ``sample`` (dump
walks), ``featurize`` (dump walk feature matrices), ``train``, ``eval``, and
``ablate``. Runs are configured by an INI file with sections [dataset],
[task], [model], and [train]; every flag overrides its config key. All
output files embed the fully resolved configuration and seeds.

Exit codes: 0 success, 1 validation/data failure, 2 configuration error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .complex import SimplicialComplex
from .datasets import (
    LoadedDataset,
    load_dataset,
    make_classification_task,
    make_imputation_task,
    synth_citation,
    synth_contact,
)
from .errors import (
    AllMasked,
    ClosureViolation,
    ConfigError,
    ConfigHashMismatch,
    DuplicateSimplex,
    EmptyDataset,
    EmptyEvalMask,
    FeatureShapeMismatch,
    ParseError,
    ScrawlError,
    UnknownSimplex,
)
from .features import build_feature_matrix
from .io import read_complex_file
from .model import (
    EVAL_WALK_TAG,
    ModelConfig,
    ScrawlModel,
    load_checkpoint,
    run_metrics,
    save_checkpoint,
    train_epoch,
)
from .nn import Adam, PlateauSchedule
from .walks import WalkConfig, sample_walk_set

_DATA_ERRORS = (
    ClosureViolation,
    DuplicateSimplex,
    FeatureShapeMismatch,
    ParseError,
    EmptyDataset,
    UnknownSimplex,
    AllMasked,
    EmptyEvalMask,
)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    plateau_factor: float = 0.5
    patience: int = 10
    stop_lr: float = 1e-6
    min_epochs: int = 100
    max_epochs: int = 400
    repeats: int = 1
    seed: int = 0
    strict_determinism: bool = False


@dataclass
class RunConfig:
    """Fully resolved run description: dataset, task, model, training."""

    dataset: dict
    task: dict
    model: ModelConfig
    train: TrainConfig
    out_dir: Path

    def as_json_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "task": self.task,
            "model": dataclasses.asdict(self.model),
            "train": dataclasses.asdict(self.train),
            "out_dir": str(self.out_dir),
        }


# -- config file parsing -------------------------------------------------------


def _coerce(value: str, kind: str):
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if kind == "bool":
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {value!r}")
    return value


_MODEL_KEYS = {
    "max_order": "int",
    "layers": "int",
    "window": "int",
    "walk_length": "int",
    "walks": "walks",
    "hidden": "int",
    "kernel_widths": "ints",
    "pooling": "str",
    "strategy": "str",
    "adjacency": "str",
    "include_self": "bool",
    "exclude_return": "bool",
    "dtype": "str",
    "seed": "int",
}

_TRAIN_KEYS = {
    "lr": "float",
    "plateau_factor": "float",
    "patience": "int",
    "stop_lr": "float",
    "min_epochs": "int",
    "max_epochs": "int",
    "repeats": "int",
    "seed": "int",
    "strict_determinism": "bool",
}


def _parse_walks(value: str):
    if str(value).strip().lower() == "all":
        return None
    return int(value)


def _parse_section(section: dict, schema: dict) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r}")
        kind = schema[key]
        if kind == "walks":
            out[key] = _parse_walks(raw)
        elif kind == "ints":
            out[key] = tuple(int(x) for x in str(raw).split(",") if x.strip())
        else:
            out[key] = _coerce(str(raw), kind)
    return out


def load_run_config(args) -> RunConfig:
    sections: dict[str, dict] = {"dataset": {}, "task": {}, "model": {}, "train": {}}
    if args.config:
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise ConfigError(f"config file {args.config} not found")
        for name in parser.sections():
            if name not in sections:
                raise ConfigError(f"unknown config section [{name}]")
            sections[name] = dict(parser.items(name))

    # flag overrides
    overrides = {
        ("train", "seed"): args.seed,
        ("train", "repeats"): args.repeats,
        ("train", "min_epochs"): args.min_epochs,
        ("train", "max_epochs"): getattr(args, "max_epochs", None),
        ("train", "lr"): getattr(args, "lr", None),
        ("model", "walks"): args.walks,
        ("model", "walk_length"): args.walk_length,
        ("model", "window"): args.window,
        ("model", "strategy"): args.strategy,
        ("model", "adjacency"): args.adjacency,
        ("model", "pooling"): args.pool,
        ("model", "max_order"): getattr(args, "max_order", None),
        ("model", "layers"): getattr(args, "layers", None),
        ("model", "hidden"): getattr(args, "hidden", None),
    }
    for (section, key), value in overrides.items():
        if value is not None:
            sections[section][key] = str(value)
    if args.strict_determinism:
        sections["train"]["strict_determinism"] = "true"

    model_kwargs = _parse_section(sections["model"], _MODEL_KEYS)
    train_kwargs = _parse_section(sections["train"], _TRAIN_KEYS)
    model_cfg = ModelConfig(**model_kwargs)
    train_cfg = TrainConfig(**train_kwargs)
    out_dir = Path(args.out) if args.out else Path("runs/latest")
    return RunConfig(
        dataset=dict(sections["dataset"]),
        task=dict(sections["task"]),
        model=model_cfg,
        train=train_cfg,
        out_dir=out_dir,
    )


# -- dataset / task assembly ---------------------------------------------------


def load_run_dataset(spec: dict) -> LoadedDataset:
    fmt = spec.get("format")
    if not fmt:
        raise ConfigError("[dataset] needs a format key")
    if fmt == "synth-contact":
        cx, labels = synth_contact(
            n_vertices=int(spec.get("vertices", 60)),
            n_classes=int(spec.get("classes", 4)),
            groups_per_class=int(spec.get("groups_per_class", 30)),
            group_size_range=(
                int(spec.get("group_min", 2)),
                int(spec.get("group_max", 4)),
            ),
            noise=float(spec.get("noise", 0.05)),
            seed=int(spec.get("seed", 0)),
        )
        return LoadedDataset(cx=cx, labels=labels)
    if fmt == "synth-citation":
        bases = tuple(
            float(x) for x in str(spec.get("bases", "10,25,60,150")).split(",")
        )
        cx, values = synth_citation(
            n_authors=int(spec.get("authors", 48)),
            n_communities=int(spec.get("communities", 4)),
            papers_per_community=int(spec.get("papers_per_community", 30)),
            paper_size_range=(
                int(spec.get("group_min", 2)),
                int(spec.get("group_max", 4)),
            ),
            base_values=bases,
            noise=float(spec.get("noise", 0.05)),
            seed=int(spec.get("seed", 0)),
        )
        return LoadedDataset(cx=cx, values=values)
    if fmt in ("complex", "contact", "coauthor"):
        path = spec.get("path")
        if not path:
            raise ConfigError(f"[dataset] format {fmt} needs a path")
        value_paths = {
            int(k.split("_", 1)[1]): v
            for k, v in spec.items()
            if k.startswith("values_")
        }
        feature_paths = {
            int(k.split("_", 1)[1]): v
            for k, v in spec.items()
            if k.startswith("features_")
        }
        return load_dataset(
            path,
            fmt,
            labels_path=spec.get("labels"),
            value_paths=value_paths or None,
            feature_paths=feature_paths or None,
        )
    raise ConfigError(f"unknown dataset format {fmt!r}")


def build_task(task_spec: dict, data: LoadedDataset, default_seed: int):
    kind = task_spec.get("type")
    mask_seed = int(task_spec.get("mask_seed", default_seed))
    if kind == "classification":
        if data.labels is None:
            raise ConfigError("classification needs vertex labels")
        return make_classification_task(
            data.cx,
            data.labels,
            missing_rate=float(task_spec.get("missing", 0.4)),
            seed=mask_seed,
            use_complex_features=_coerce(
                str(task_spec.get("use_features", "false")), "bool"
            ),
        )
    if kind == "imputation":
        if data.values is None:
            raise ConfigError("imputation needs per-order values")
        return make_imputation_task(
            data.cx,
            data.values,
            missing_rate=float(task_spec.get("missing", 0.1)),
            seed=mask_seed,
            train_remask_rate=float(task_spec.get("train_remask", 0.3)),
        )
    raise ConfigError(f"unknown task type {kind!r}")


# -- training ------------------------------------------------------------------

METRIC_COLUMNS = [
    "trial",
    "epoch",
    "train_loss",
    "train_metric",
    "val_loss",
    "val_metric",
    "lr",
]


def _run_trial(run_cfg: RunConfig, trial: int) -> dict:
    trial_seed = run_cfg.train.seed + trial
    data = load_run_dataset(run_cfg.dataset)
    task = build_task(run_cfg.task, data, default_seed=run_cfg.train.seed)
    model_cfg = dataclasses.replace(run_cfg.model, seed=trial_seed)
    model = ScrawlModel(
        data.cx, model_cfg, head_dims=task.head_dims, input_dims=task.input_dims
    )
    optimizer = Adam(model.params, lr=run_cfg.train.lr)
    schedule = PlateauSchedule(
        factor=run_cfg.train.plateau_factor,
        patience=run_cfg.train.patience,
        stop_lr=run_cfg.train.stop_lr,
        min_epochs=run_cfg.train.min_epochs,
    )
    # validation always runs on one fixed walk collection per trial, so the
    # plateau signal tracks the model rather than walk resampling noise
    eval_walks = model.sample_epoch_walks([trial_seed, EVAL_WALK_TAG])
    rows = []
    record = {}
    epoch = -1
    for epoch in range(run_cfg.train.max_epochs):
        train_record = train_epoch(model, task, optimizer, [trial_seed, epoch])
        record = dict(run_metrics(model, task, eval_walks))
        record["train_loss"] = train_record["train_loss"]
        lr, stop = schedule.step(optimizer, record["val_loss"])
        rows.append(
            [
                trial,
                epoch,
                record["train_loss"],
                record.get("train_metric", float("nan")),
                record["val_loss"],
                record.get("val_metric", float("nan")),
                lr,
            ]
        )
        if stop:
            break
    meta = {
        "model": dataclasses.asdict(model_cfg),
        "input_dims": {str(k): v for k, v in model.input_dims.items()},
        "head_dims": {str(k): v for k, v in model.head_dims.items()},
        "dataset": run_cfg.dataset,
        "task": run_cfg.task,
        "mask_seed": int(run_cfg.task.get("mask_seed", run_cfg.train.seed)),
        "trial": trial,
        "trial_seed": trial_seed,
        "epochs_run": epoch + 1,
        "eval_seed": [trial_seed, EVAL_WALK_TAG],
    }
    ckpt_path = run_cfg.out_dir / f"checkpoint-{trial}.npz"
    save_checkpoint(ckpt_path, model, optimizer, meta)
    return {
        "trial": trial,
        "seed": trial_seed,
        "rows": rows,
        "final": record,
        "epochs": epoch + 1,
        "checkpoint": str(ckpt_path),
    }


def _trial_worker(payload):
    run_cfg_dict, trial = payload
    run_cfg = _runconfig_from_dict(run_cfg_dict)
    return _run_trial(run_cfg, trial)


def _runconfig_from_dict(d: dict) -> RunConfig:
    model_kwargs = dict(d["model"])
    if model_kwargs.get("kernel_widths") is not None:
        model_kwargs["kernel_widths"] = tuple(model_kwargs["kernel_widths"])
    if model_kwargs.get("head_hidden") is not None:
        model_kwargs["head_hidden"] = tuple(model_kwargs["head_hidden"])
    return RunConfig(
        dataset=d["dataset"],
        task=d["task"],
        model=ModelConfig(**model_kwargs),
        train=TrainConfig(**d["train"]),
        out_dir=Path(d["out_dir"]),
    )


def run_training(run_cfg: RunConfig) -> dict:
    """Run all repeats, write metrics.csv / summary.json / checkpoints."""
    run_cfg.out_dir.mkdir(parents=True, exist_ok=True)
    n_workers = int(os.environ.get("SCRAWL_THREADS", "1"))
    trials = list(range(run_cfg.train.repeats))
    if n_workers > 1 and len(trials) > 1 and not run_cfg.train.strict_determinism:
        payloads = [(run_cfg.as_json_dict(), t) for t in trials]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_trial_worker, payloads))
    else:
        results = [_run_trial(run_cfg, t) for t in trials]

    config_line = json.dumps(run_cfg.as_json_dict(), sort_keys=True)
    metrics_path = run_cfg.out_dir / "metrics.csv"
    with open(metrics_path, "w", newline="") as fh:
        fh.write(f"# scrawl-run-config: {config_line}\n")
        fh.write(f"# trial-seeds: {[r['seed'] for r in results]}\n")
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for result in results:
            for row in result["rows"]:
                writer.writerow(
                    [row[0], row[1]] + [f"{v:.10g}" for v in row[2:]]
                )

    finals = [r["final"].get("val_metric", float("nan")) for r in results]
    summary = {
        "config": run_cfg.as_json_dict(),
        "seeds": [r["seed"] for r in results],
        "trials": [
            {
                "trial": r["trial"],
                "seed": r["seed"],
                "epochs": r["epochs"],
                "final": r["final"],
                "checkpoint": r["checkpoint"],
            }
            for r in results
        ],
        "final_val_metric": {
            "mean": float(np.mean(finals)),
            "std": float(np.std(finals)),
            "values": [float(v) for v in finals],
        },
    }
    with open(run_cfg.out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


# -- commands --------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        cx = read_complex_file(args.path, auto_close=args.auto_close)
    except _DATA_ERRORS as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 1
    counts = " ".join(f"n_{k}={n}" for k, n in enumerate(cx.counts))
    print(f"{counts}, closure OK")
    for k in range(1, cx.max_order + 1):
        b = cx.boundary_matrix(k)
        density = b.nnz / (b.shape[0] * b.shape[1]) if b.shape[0] * b.shape[1] else 0.0
        print(f"B_{k}: shape {b.shape[0]}x{b.shape[1]}, density {density:.4f}")
    return 0


def _walk_config_from_args(args) -> WalkConfig:
    return WalkConfig(
        length=args.walk_length or 10,
        walks=_parse_walks(args.walks) if args.walks else None,
        strategy=args.strategy or "connection",
        adjacency=args.adjacency or "both",
        include_self=not args.exclude_self,
        exclude_return=args.exclude_return,
    )


def cmd_sample(args) -> int:
    cx = read_complex_file(args.path, auto_close=True)
    cfg = _walk_config_from_args(args)
    orders = (
        [int(k) for k in args.orders.split(",")]
        if args.orders
        else range(cx.max_order + 1)
    )
    ws = sample_walk_set(cx, orders, cfg, epoch_seed=args.seed or 0)
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        for k in sorted(ws.slots):
            for walk in ws.slot(k).walks():
                print(walk.to_line(), file=sink)
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_featurize(args) -> int:
    cx = read_complex_file(args.path, auto_close=True)
    cfg = _walk_config_from_args(args)
    window = args.window or 4
    orders = (
        [int(k) for k in args.orders.split(",")]
        if args.orders
        else range(cx.max_order + 1)
    )
    out_dir = Path(args.out or "featurized")
    out_dir.mkdir(parents=True, exist_ok=True)
    ws = sample_walk_set(cx, orders, cfg, epoch_seed=args.seed or 0)
    written = []
    for k in sorted(ws.slots):
        for j, walk in enumerate(ws.slot(k).walks()):
            fm = build_feature_matrix(walk, cx, window=window, walk_ref=(k, j))
            path = out_dir / f"walk_k{k}_{j}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(fm.column_names())
                for row in fm.data:
                    writer.writerow([f"{v:.10g}" for v in row])
            written.append(path)
    print(f"wrote {len(written)} walk matrices to {out_dir}")
    return 0


def cmd_train(args) -> int:
    run_cfg = load_run_config(args)
    summary = run_training(run_cfg)
    stats = summary["final_val_metric"]
    print(
        f"final val metric: {stats['mean']:.4f} +- {stats['std']:.4f}"
        f" over {len(stats['values'])} trials -> {run_cfg.out_dir}"
    )
    return 0


def cmd_eval(args) -> int:
    meta, arrays = load_checkpoint(args.checkpoint)
    model_kwargs = dict(meta["model"])
    if model_kwargs.get("kernel_widths") is not None:
        model_kwargs["kernel_widths"] = tuple(model_kwargs["kernel_widths"])
    if model_kwargs.get("head_hidden") is not None:
        model_kwargs["head_hidden"] = tuple(model_kwargs["head_hidden"])
    model_cfg = ModelConfig(**model_kwargs)
    if args.walk_length:
        model_cfg = dataclasses.replace(model_cfg, walk_length=args.walk_length)
    if args.walks:
        model_cfg = dataclasses.replace(model_cfg, walks=_parse_walks(args.walks))

    dataset_spec = dict(meta["dataset"])
    if args.dataset_path:
        dataset_spec["path"] = args.dataset_path
    data = load_run_dataset(dataset_spec)
    task = build_task(meta["task"], data, default_seed=meta["mask_seed"])
    model = ScrawlModel(
        data.cx, model_cfg, head_dims=task.head_dims, input_dims=task.input_dims
    )
    if model.config_hash() != meta["config_hash"]:
        raise ConfigHashMismatch(
            f"checkpoint hash {meta['config_hash']} does not match"
            f" {model.config_hash()} for this dataset"
        )
    model.load_parameter_arrays(arrays)
    epoch_seed = meta["eval_seed"] if args.seed is None else args.seed
    walk_set = sample_walk_set(
        data.cx, model.orders, model_cfg.walk_config(), epoch_seed
    )
    record = run_metrics(model, task, walk_set)
    print(json.dumps(record, indent=2, sort_keys=True))
    return 0


SWEEPS = {
    "adjacency": ("model", "adjacency", ["both", "upper", "lower"]),
    "window": ("model", "window", list(range(1, 9))),
    "walk-length": ("model", "walk_length", list(range(5, 55, 5))),
}


def cmd_ablate(args) -> int:
    run_cfg = load_run_config(args)
    section, key, default_values = SWEEPS[args.sweep]
    values = default_values
    if args.values:
        raw = args.values.split(",")
        values = [v if args.sweep == "adjacency" else int(v) for v in raw]
    run_cfg.out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        model_cfg = dataclasses.replace(run_cfg.model, **{key: value})
        sub_cfg = RunConfig(
            dataset=run_cfg.dataset,
            task=run_cfg.task,
            model=model_cfg,
            train=run_cfg.train,
            out_dir=run_cfg.out_dir / f"{args.sweep}-{value}",
        )
        summary = run_training(sub_cfg)
        stats = summary["final_val_metric"]
        rows.append([args.sweep, value, stats["mean"], stats["std"]])
        print(f"{args.sweep}={value}: {stats['mean']:.4f} +- {stats['std']:.4f}")
    table_path = run_cfg.out_dir / "ablation.csv"
    with open(table_path, "w", newline="") as fh:
        fh.write(
            "# scrawl-ablation-config: "
            + json.dumps(run_cfg.as_json_dict(), sort_keys=True)
            + "\n"
        )
        writer = csv.writer(fh)
        writer.writerow(["sweep", "value", "mean", "std"])
        for row in rows:
            writer.writerow(row)
    print(f"ablation table -> {table_path}")
    return 0


# -- parser ----------------------------------------------------------------


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--repeats", type=int, default=None, help="seeded trial count")
    p.add_argument("--walks", default=None, help="walk count per order: all or N")
    p.add_argument("--walk-length", type=int, default=None, dest="walk_length")
    p.add_argument("--window", type=int, default=None, help="structural window size")
    p.add_argument("--strategy", choices=["connection", "neighbor"], default=None)
    p.add_argument("--adjacency", choices=["both", "upper", "lower"], default=None)
    p.add_argument("--pool", choices=["mean", "sum"], default=None)
    p.add_argument("--min-epochs", type=int, default=None, dest="min_epochs")
    p.add_argument("--max-epochs", type=int, default=None, dest="max_epochs")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--max-order", type=int, default=None, dest="max_order")
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument(
        "--strict-determinism",
        action="store_true",
        dest="strict_determinism",
        help="force sequential in-process trials",
    )
    p.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scrawl",
        description="Random-walk neural networks on simplicial complexes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="closure-check a complex file")
    p.add_argument("path")
    p.add_argument("--auto-close", action="store_true", dest="auto_close")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="sample walks and dump one per line")
    p.add_argument("path")
    p.add_argument("--orders", default=None, help="comma-separated orders")
    p.add_argument("--exclude-self", action="store_true", dest="exclude_self")
    p.add_argument("--exclude-return", action="store_true", dest="exclude_return")
    _add_common_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("featurize", help="dump per-walk feature matrices as CSV")
    p.add_argument("path")
    p.add_argument("--orders", default=None)
    p.add_argument("--exclude-self", action="store_true", dest="exclude_self")
    p.add_argument("--exclude-return", action="store_true", dest="exclude_return")
    _add_common_flags(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train with seeded repeats")
    _add_common_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--dataset-path", default=None, dest="dataset_path")
    p.add_argument("--walks", default=None)
    p.add_argument("--walk-length", type=int, default=None, dest="walk_length")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="sweep one hyperparameter")
    p.add_argument("--sweep", choices=sorted(SWEEPS), required=True)
    p.add_argument("--values", default=None, help="comma-separated sweep values")
    _add_common_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigHashMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except (FloatingPointError, ScrawlError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
