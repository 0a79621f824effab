"""Command-line harness: train, eval, sweep, inspect-graph, and the
embedding-file template exporter.

Configs are flat ``key = value`` text files; any key can be overridden on
the command line with ``--set key=value``. Exit codes: 0 success, 1 runtime
failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .data import (Dataset, FusionMode, load_embeddings, load_mnist_idx,
                   save_embeddings, split, synth_blobs)
from .graph import GeneratorSpec, generate, has_cycle, predecessors, to_edge_list
from .network import load_checkpoint, save_checkpoint
from .numerics import make_rng
from .training import Metrics, TrainConfig, evaluate, run_config


class ConfigError(Exception):
    pass


DEFAULTS = {
    "graph": "complete",
    "n": "4",
    "ws_k": "2",
    "ws_p": "0.3",
    "ba_m": "2",
    "d_out": "200",
    "T": "3",
    "theta": "1.0",
    "lr": "0.001",
    "weight_decay": "0.0",
    "batch_size": "64",
    "max_epochs": "100",
    "patience": "10",
    "seed": "0",
    "freeze_neurons": "false",
    "freeze_readout": "false",
    "fusion": "concat",
    "baseline": "none",
    "dataset": "synth",
    "val_fraction": "0.2",
    "mnist_images": "train-images-idx3-ubyte.gz",
    "mnist_labels": "train-labels-idx1-ubyte.gz",
    "mnist_test_images": "t10k-images-idx3-ubyte.gz",
    "mnist_test_labels": "t10k-labels-idx1-ubyte.gz",
    "embeddings_train": "",
    "embeddings_test": "",
    "synth_n_per_class": "1000",
    "synth_dim": "20",
    "synth_classes": "2",
    "synth_separation": "6.0",
    "out_dir": ".",
}


def parse_config_file(path: str) -> dict[str, str]:
    try:
        lines = open(path).read().splitlines()
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from None
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def apply_overrides(cfg: dict[str, str], sets: list[str]) -> dict[str, str]:
    cfg = dict(cfg)
    for item in sets or []:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"--set: unknown key {key!r}")
        cfg[key] = value.strip()
    return cfg


def effective_config(config_path: str | None, sets: list[str]) -> dict[str, str]:
    cfg = dict(DEFAULTS)
    if config_path:
        cfg.update(parse_config_file(config_path))
    return apply_overrides(cfg, sets)


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def to_train_config(cfg: dict[str, str]) -> TrainConfig:
    try:
        gen = GeneratorSpec(kind=cfg["graph"], n=int(cfg["n"]),
                            ws_k=int(cfg["ws_k"]), ws_p=float(cfg["ws_p"]),
                            ba_m=int(cfg["ba_m"]), seed=int(cfg["seed"]))
        tc = TrainConfig(
            generator=gen, d_out=int(cfg["d_out"]), T=int(cfg["T"]),
            theta=float(cfg["theta"]), lr=float(cfg["lr"]),
            weight_decay=float(cfg["weight_decay"]),
            batch_size=int(cfg["batch_size"]),
            max_epochs=int(cfg["max_epochs"]), patience=int(cfg["patience"]),
            seed=int(cfg["seed"]),
            freeze_neurons=_bool(cfg["freeze_neurons"]),
            freeze_readout=_bool(cfg["freeze_readout"]),
            fusion=FusionMode(cfg["fusion"]), baseline=cfg["baseline"])
        tc.validate()
        return tc
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from None


def _data_path(cfg_value: str) -> str:
    if os.path.isabs(cfg_value) or os.path.exists(cfg_value):
        return cfg_value
    root = os.environ.get("CYCLIC_FF_DATA_DIR", ".")
    return os.path.join(root, cfg_value)


def load_datasets(cfg: dict[str, str]) -> tuple[Dataset, Dataset, Dataset]:
    """Resolve (train, val, test) from the config's dataset block."""
    kind = cfg["dataset"]
    seed = int(cfg["seed"])
    val_fraction = float(cfg["val_fraction"])
    if kind == "mnist":
        # Fixed 50k/10k/10k split of the canonical files.
        full = load_mnist_idx(_data_path(cfg["mnist_images"]),
                              _data_path(cfg["mnist_labels"]))
        train = full.subset(np.arange(0, 50000))
        val = full.subset(np.arange(50000, full.n_samples))
        test = load_mnist_idx(_data_path(cfg["mnist_test_images"]),
                              _data_path(cfg["mnist_test_labels"]))
        return train, val, test
    if kind == "embeddings":
        full = load_embeddings(_data_path(cfg["embeddings_train"]))
        train, val = split(full, val_fraction, make_rng(seed, "data-shuffle"))
        test = load_embeddings(_data_path(cfg["embeddings_test"]))
        return train, val, test
    if kind == "synth":
        n = int(cfg["synth_n_per_class"])
        dim = int(cfg["synth_dim"])
        classes = int(cfg["synth_classes"])
        sep = float(cfg["synth_separation"])
        full = synth_blobs(n, dim, classes, sep, make_rng(seed, 100))
        train, val = split(full, val_fraction, make_rng(seed, "data-shuffle"))
        test = synth_blobs(max(n // 4, 1), dim, classes, sep,
                           make_rng(seed, 101))
        return train, val, test
    raise ConfigError(f"unknown dataset {cfg['dataset']!r}")


def config_hash(cfg: dict[str, str]) -> str:
    items = sorted((k, v) for k, v in cfg.items() if k != "seed")
    return hashlib.sha256(repr(items).encode()).hexdigest()[:8]


def _git_describe() -> str:
    try:
        return subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5).stdout.strip()
    except OSError:
        return ""


def write_manifest(path: str, cfg: dict[str, str], seeds: list[int],
                   artifacts: dict[str, str], started: float) -> None:
    manifest = {
        "config": cfg,
        "seeds": seeds,
        "artifacts": artifacts,
        "git_describe": _git_describe(),
        "started": started,
        "ended": time.time(),
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    os.replace(tmp, path)


def cmd_train(args) -> int:
    cfg = effective_config(args.config, args.set)
    if args.seed is not None:
        cfg["seed"] = str(args.seed)
    tc = to_train_config(cfg)
    train, val, test = load_datasets(cfg)

    started = time.time()
    model, metrics = run_config(tc, train, val, test)

    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    stem = f"run-{config_hash(cfg)}-{tc.seed}"
    csv_path = os.path.join(out_dir, stem + ".csv")
    with open(csv_path, "w") as f:
        f.write(metrics.to_csv())
    artifacts = {"metrics_csv": csv_path}
    if tc.baseline == "none":
        ckpt_path = os.path.join(out_dir, stem + ".ckpt")
        save_checkpoint(model, ckpt_path)
        artifacts["checkpoint"] = ckpt_path
    write_manifest(os.path.join(out_dir, stem + ".manifest.json"),
                   cfg, [tc.seed], artifacts, started)
    print(f"test_error_pct={metrics.test_err}")
    return 0


def cmd_eval(args) -> int:
    cfg = effective_config(args.config, args.set)
    net = load_checkpoint(args.checkpoint)
    _, _, test = load_datasets(cfg)
    print(f"test_error_pct={evaluate(net, test)}")
    return 0


def _parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s.strip()]


def _one_sweep_run(payload):
    cfg, datasets = payload
    tc = to_train_config(cfg)
    _, metrics = run_config(tc, *datasets)
    return metrics.test_err


def cmd_sweep(args) -> int:
    base = effective_config(args.config, None)
    axes = []
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=v1,v2,...")
        key, values = item.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"--set: unknown key {key!r}")
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ConfigError(f"--set {key}: empty value list")
        axes.append((key, vals))
    if not axes:
        raise ConfigError("sweep: need at least one --set key=v1,v2,...")
    seeds = _parse_seeds(args.seeds)
    if not seeds:
        raise ConfigError("sweep: empty seed list")

    combos = list(itertools.product(*(vals for _, vals in axes)))
    keys = [k for k, _ in axes]

    jobs = []
    for combo in combos:
        for seed in seeds:
            cfg = dict(base)
            cfg.update(dict(zip(keys, combo)))
            cfg["seed"] = str(seed)
            jobs.append(cfg)

    datasets_cache = {}

    def datasets_for(cfg):
        key = (cfg["dataset"], cfg["seed"])
        if key not in datasets_cache:
            datasets_cache[key] = load_datasets(cfg)
        return datasets_cache[key]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            errs = list(pool.map(_one_sweep_run,
                                 [(cfg, datasets_for(cfg)) for cfg in jobs]))
    else:
        errs = [_one_sweep_run((cfg, datasets_for(cfg))) for cfg in jobs]

    out_dir = base["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    summary = os.path.join(out_dir, f"sweep-{config_hash(base)}.csv")
    with open(summary, "w") as f:
        f.write(",".join(keys) + ",mean_test_err,std_test_err,n_seeds\n")
        for i, combo in enumerate(combos):
            es = errs[i * len(seeds):(i + 1) * len(seeds)]
            f.write(",".join(combo)
                    + f",{np.mean(es):.6g},{np.std(es):.6g},{len(seeds)}\n")
    print(summary)
    return 0


def cmd_inspect_graph(args) -> int:
    cfg = effective_config(args.config, args.set)
    tc = to_train_config(cfg)
    topo = generate(tc.generator)
    sys.stdout.write(to_edge_list(topo))
    train_dim = None
    base = None
    for j in range(topo.n_neurons):
        preds = predecessors(topo, j)
        out_deg = sum(1 for s, _ in topo.synapses if s == j)
        d_in = f"base + {len(preds)}*{tc.d_out}"
        print(f"neuron {j}: in-degree {len(preds)}, out-degree {out_deg}, "
              f"d_in = {d_in}")
    print(f"cyclic: {'yes' if has_cycle(topo) else 'no'}")
    return 0


def cmd_export_embeddings_template(args) -> int:
    rng = make_rng(0, 0)
    d = synth_blobs(args.samples // max(args.classes, 1) or 1, args.dim,
                    args.classes, 1.0, rng)
    save_embeddings(d, args.out)
    print(f"wrote template embedding file: {args.out} "
          f"({d.n_samples} samples, dim {d.dim}, {d.n_classes} classes)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclicff")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key")

    p = sub.add_parser("train", help="train one model and write artifacts")
    common(p)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test set")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="grid sweep with per-config summaries")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=V1,V2,...")
    p.add_argument("--seeds", default="0")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("inspect-graph", help="print topology diagnostics")
    common(p)
    p.set_defaults(fn=cmd_inspect_graph)

    p = sub.add_parser("export-embeddings-template",
                       help="write a small example embedding file")
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--classes", type=int, default=2)
    p.set_defaults(fn=cmd_export_embeddings_template)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
