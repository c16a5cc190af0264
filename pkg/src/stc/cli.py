"""Command-line entry point: synth / pretrain / probe / benchmark / symbolize.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import data as data_mod
from . import evaluate as evaluate_mod
from .errors import DataError, NumericalError
from .symbolize import ChannelStats, fit_channel_stats, make_cutlines, symbolize
from .trainer import load_checkpoint, pretrain, save_checkpoint, write_training_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

DEFAULT_SUBJECTS = "1,2,5,6,8"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="stc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic shifted-subject dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--subjects", type=int, default=3, help="number of subjects")
    p.add_argument("--n-per-class", type=int, default=25)
    p.add_argument("--length", type=int, default=128, help="window length L")
    p.add_argument("--channels", type=int, default=3, help="channel count K")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("pretrain", help="self-supervised pretraining on one subject")
    p.add_argument("--data", required=True, help="dataset directory or CSV file")
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log CSV (default: <out>.log.csv)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key")

    p = sub.add_parser("probe", help="linear-probe a checkpoint on a subject pair")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--mode", choices=["zt", "zt-zs"], default="zt")
    p.add_argument("--probe-on", choices=["source", "target"], default="source")

    p = sub.add_parser("benchmark", help="pairwise source->target benchmark")
    p.add_argument("--data", required=True)
    p.add_argument("--subjects", default=DEFAULT_SUBJECTS)
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--baselines", action="store_true")
    p.add_argument("--mode", choices=["zt", "zt-zs"], default="zt")
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("symbolize", help="emit normalized bag-of-symbol vectors")
    p.add_argument("--input", required=True, help="dataset CSV")
    p.add_argument("--n-symbols", type=int, default=64)
    p.add_argument("--stats", required=True,
                   help="channel-stats JSON; fitted from the input if absent")
    p.add_argument("--out", help="output CSV (default: stdout)")
    return parser


def _merged_config(args) -> tuple[dict, "config_mod.TrainConfig"]:
    file_values = config_mod.parse_config_file(args.config) if args.config else {}
    overrides = {}
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise DataError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    values = config_mod.merge_config(file_values, overrides)
    return values, config_mod.build_train_config(values)


def _load_samples(data_path, values: dict) -> list:
    """Dataset CSV (file or dir/data.csv) or a PAMAP2 directory."""
    path = Path(data_path)
    if path.is_file():
        samples, _ = data_mod.load_dataset(path)
        return samples
    if (path / "data.csv").exists():
        samples, _ = data_mod.load_dataset(path / "data.csv")
        return samples
    if path.is_dir():
        dats = sorted(path.glob("subject10?.dat")) + sorted(
            (path / "Protocol").glob("subject10?.dat") if (path / "Protocol").is_dir() else []
        )
        if dats:
            subjects = sorted({int(p.stem[-1]) for p in dats})
            streams = data_mod.load_pamap2(path, subjects)
            length = values.get("data.window_len", 256)
            stride = values.get("data.stride", 128)
            samples = []
            for segments in streams.values():
                samples.extend(data_mod.window(segments, length, stride))
            return samples
    raise DataError(f"no dataset found at {data_path}")


def _synth_specs(n_subjects: int, seed: int) -> dict[int, data_mod.SynthSpec]:
    specs = {}
    for i in range(n_subjects):
        specs[i + 1] = data_mod.SynthSpec(
            shift=0.25 * i,
            warp=1.0 + 0.3 * i,
            noise_std=0.08 + 0.03 * i,
            amplitude=1.0,
            seed=seed * 100003 + 100 + i,
        )
    return specs


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    specs = _synth_specs(args.subjects, args.seed)
    samples = data_mod.synth_generate(
        specs, n_per_class=args.n_per_class, length=args.length,
        n_channels=args.channels,
    )
    meta = {
        "command": "synth",
        "seed": args.seed,
        "subjects": args.subjects,
        "n_per_class": args.n_per_class,
        "channels": args.channels,
    }
    data_mod.save_dataset(samples, out / "data.csv", meta=meta)
    print(f"wrote {len(samples)} windows to {out / 'data.csv'}")
    return EXIT_OK


def cmd_pretrain(args) -> int:
    values, cfg = _merged_config(args)
    samples = _load_samples(args.data, values)
    source_samples = [s for s in samples if s.subject_id == args.source]
    if not source_samples:
        raise DataError(f"no windows for source subject {args.source}")
    split = data_mod.DatasetSplit(
        pretrain=[replace(s, label=None) for s in source_samples],
        probe_train=source_samples,
        test=[],
    )
    model, report = pretrain(split, cfg)
    save_checkpoint(model, cfg, args.out)
    log_path = args.log or f"{args.out}.log.csv"
    meta = {"config": config_mod.effective_config_string(values), "seed": cfg.seed,
            "source": args.source}
    write_training_log(report, log_path, meta=meta)
    print(f"wrote checkpoint {args.out} and log {log_path}")
    return EXIT_OK


def cmd_probe(args, parser) -> int:
    if args.source == args.target:
        parser.error("--source and --target must differ")
    model, _header = load_checkpoint(args.ckpt)
    samples = _load_samples(args.data, {})
    split = data_mod.make_split(samples, args.source, args.target)
    mode = evaluate_mod.ZT_ONLY if args.mode == "zt" else evaluate_mod.ZT_PLUS_ZS
    accuracy = evaluate_mod.probe(model, split, mode=mode, probe_on=args.probe_on)
    print(f"source={args.source} target={args.target} mode={args.mode} "
          f"probe_on={args.probe_on} accuracy={accuracy:.6f}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    values, cfg = _merged_config(args)
    samples = _load_samples(args.data, values)
    try:
        subjects = [int(s) for s in args.subjects.split(",") if s.strip()]
    except ValueError:
        raise DataError(f"bad --subjects list: {args.subjects!r}")
    mode = evaluate_mod.ZT_ONLY if args.mode == "zt" else evaluate_mod.ZT_PLUS_ZS
    matrix = evaluate_mod.pairwise_benchmark(
        samples, subjects, cfg, mode=mode, baselines=args.baselines,
    )
    meta = {"config": config_mod.effective_config_string(values), "seed": cfg.seed,
            "subjects": args.subjects}
    text = evaluate_mod.report(matrix, args.out, meta=meta)
    print(text, end="")
    return EXIT_OK


def cmd_symbolize(args) -> int:
    samples, _ = data_mod.load_dataset(args.input)
    stats_path = Path(args.stats)
    if stats_path.exists():
        blob = json.loads(stats_path.read_text())
        stats = ChannelStats(
            mean=np.array(blob["mean"]), sigma=np.array(blob["sigma"])
        )
    else:
        stats = fit_channel_stats(samples)
        stats_path.write_text(json.dumps(
            {"mean": stats.mean.tolist(), "sigma": stats.sigma.tolist()}
        ))
    cuts = make_cutlines(stats, args.n_symbols)
    lines = [f"# command=symbolize n_symbols={args.n_symbols} stats={stats_path.name}"]
    for sample in samples:
        vec = symbolize(sample, cuts)
        lines.append(",".join(repr(float(v)) for v in vec.normalized))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "pretrain":
            return cmd_pretrain(args)
        if args.command == "probe":
            return cmd_probe(args, parser)
        if args.command == "benchmark":
            return cmd_benchmark(args)
        if args.command == "symbolize":
            return cmd_symbolize(args)
        parser.error(f"unknown command {args.command!r}")
    except DataError as exc:
        print(f"stc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"stc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
