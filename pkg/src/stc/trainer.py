"""Self-supervised pretraining loop and checkpoint IO."""

from __future__ import annotations

import json
import struct
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .augment import AugmentConfig, jitter, perturb_symbols
from .data import DatasetSplit
from .errors import DataError, NumericalError
from .losses import LossConfig, total_loss
from .model import (
    ModelDims,
    PARAM_GROUPS,
    StcModel,
    backward_embeddings,
    build_model,
    forward_embeddings,
)
from .nn_core import (
    MlpParams,
    PlateauScheduler,
    adam_init,
    adam_step,
    plateau_step,
)
from .symbolize import (
    ChannelStats,
    count_symbols,
    discretize,
    fit_channel_stats,
    make_cutlines,
    normalize_histogram,
)

CHECKPOINT_MAGIC = b"STC1"


@dataclass(frozen=True)
class SchedulerConfig:
    factor: float = 0.5
    patience: int = 10
    min_lr: float = 1e-6


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    lr: float = 5e-4
    seed: int = 0
    n_symbols: int = 64
    h_dim: int = 128
    z_dim: int = 32
    encoder_hidden: tuple[int, ...] = (256,)
    projector_hidden: tuple[int, ...] = (64,)
    loss: LossConfig = field(default_factory=LossConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)

    def __post_init__(self):
        if self.batch_size < 2:
            raise DataError("batch_size must be >= 2 (contrastive losses need negatives)")
        if self.epochs < 0:
            raise DataError("epochs must be >= 0")


@dataclass
class EpochRow:
    epoch: int
    time: float
    symbol: float
    consistency: float
    total: float
    lr: float


@dataclass
class TrainReport:
    epochs: list[EpochRow]
    wall_seconds: float


def standardize(values: np.ndarray, stats: ChannelStats) -> np.ndarray:
    """Per-channel standardization with the pretrain-split statistics."""
    return (values - stats.mean[:, None]) / stats.sigma[:, None]


def pretrain(split: DatasetSplit, cfg: TrainConfig) -> tuple[StcModel, TrainReport]:
    """Train the twin encoders on the unlabeled pretraining split."""
    samples = split.pretrain
    if not samples:
        raise DataError("pretraining split is empty")
    start = time.perf_counter()
    stats = fit_channel_stats(samples)
    cuts = make_cutlines(stats, cfg.n_symbols)
    n = len(samples)
    n_channels, length = samples[0].values.shape

    # discretization and counting are augmentation-independent; cache raw
    # counts once and only re-run the per-epoch symbol edits
    raw_counts = [count_symbols(discretize(s, cuts)) for s in samples]
    xs = np.stack([normalize_histogram(c).normalized for c in raw_counts])
    xt = np.stack([standardize(s.values, stats).ravel() for s in samples])

    dims = ModelDims(
        n_channels=n_channels,
        window_len=length,
        n_symbols=cfg.n_symbols,
        h_dim=cfg.h_dim,
        z_dim=cfg.z_dim,
    )
    model = build_model(
        dims,
        stats.mean,
        stats.sigma,
        encoder_hidden=cfg.encoder_hidden,
        projector_hidden=cfg.projector_hidden,
        seed=cfg.seed,
    )
    arrays, names = model.parameter_arrays()
    opt = adam_init(arrays, lr=cfg.lr)
    sched = PlateauScheduler(
        lr=cfg.lr,
        factor=cfg.scheduler.factor,
        patience=cfg.scheduler.patience,
        min_lr=cfg.scheduler.min_lr,
    )
    rng = np.random.default_rng([cfg.seed, cfg.augment.seed])

    batch = min(cfg.batch_size, n)
    rows: list[EpochRow] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        sums = np.zeros(4)
        n_batches = n // batch  # drop the last undersized batch
        for b in range(n_batches):
            idx = order[b * batch:(b + 1) * batch]
            xt_b = xt[idx]
            xt_aug = np.stack([
                standardize(jitter(samples[i], stats, cfg.augment, rng).values, stats).ravel()
                for i in idx
            ])
            xs_b = xs[idx]
            xs_aug = np.stack([
                perturb_symbols(raw_counts[i], cfg.augment, rng).normalized for i in idx
            ])
            embeddings, caches = forward_embeddings(model, xt_b, xt_aug, xs_b, xs_aug)
            breakdown, egrads = total_loss(embeddings, cfg.loss)
            if not np.isfinite(breakdown.total):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {b}"
                )
            group_grads = backward_embeddings(model, caches, egrads)
            grad_arrays = []
            for group in PARAM_GROUPS:
                grad_arrays.extend(group_grads[group].arrays())
            opt.lr = sched.lr
            adam_step(opt, arrays, grad_arrays, names=names)
            sums += (breakdown.time, breakdown.symbol,
                     breakdown.consistency, breakdown.total)
        means = sums / max(n_batches, 1)
        plateau_step(sched, means[3])
        rows.append(EpochRow(
            epoch=epoch, time=float(means[0]), symbol=float(means[1]),
            consistency=float(means[2]), total=float(means[3]), lr=sched.lr,
        ))
    return model, TrainReport(epochs=rows, wall_seconds=time.perf_counter() - start)


def write_training_log(report: TrainReport, path, meta: dict | None = None) -> None:
    lines = []
    for key in sorted(meta or {}):
        lines.append(f"# {key}={meta[key]}")
    lines.append("epoch,L_T,L_S,L_TS,total,lr")
    for row in report.epochs:
        lines.append(
            f"{row.epoch},{row.time!r},{row.symbol!r},{row.consistency!r},"
            f"{row.total!r},{row.lr!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _config_echo(cfg: TrainConfig) -> dict:
    echo = asdict(cfg)
    echo["loss"]["lam"] = cfg.loss.lam
    return echo


def save_checkpoint(model: StcModel, cfg: TrainConfig, path) -> None:
    """Binary checkpoint: magic, length-prefixed JSON header, float64 LE blobs."""
    arrays, names = model.parameter_arrays()
    arrays = [model.channel_mean, model.channel_sigma] + arrays
    names = ["preproc.mean", "preproc.sigma"] + names
    header = {
        "dims": asdict(model.dims),
        "architecture": {
            group: {
                "sizes": [model.group(group).in_dim]
                + [w.shape[1] for w in model.group(group).weights],
                "activations": model.group(group).activations,
            }
            for group in PARAM_GROUPS
        },
        "config": _config_echo(cfg),
        "seed": cfg.seed,
        "params": [{"name": n, "shape": list(a.shape)} for n, a in zip(names, arrays)],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for array in arrays:
            fh.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[StcModel, dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{path} is not an STC checkpoint")
    if len(raw) < 8:
        raise DataError(f"{path} is truncated")
    (header_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + header_len:
        raise DataError(f"{path} is truncated (incomplete header)")
    header = json.loads(raw[8:8 + header_len].decode("utf-8"))
    offset = 8 + header_len
    arrays = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(raw) < offset + nbytes:
            raise DataError(f"{path} is truncated (parameter {entry['name']})")
        arrays[entry["name"]] = np.frombuffer(
            raw, dtype="<f8", count=count, offset=offset
        ).reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise DataError(f"{path} has {len(raw) - offset} trailing bytes")

    def rebuild(group: str) -> MlpParams:
        arch = header["architecture"][group]
        n_layers = len(arch["sizes"]) - 1
        return MlpParams(
            weights=[arrays[f"{group}.w{l}"] for l in range(n_layers)],
            biases=[arrays[f"{group}.b{l}"] for l in range(n_layers)],
            activations=list(arch["activations"]),
        )

    dims = ModelDims(**header["dims"])
    model = StcModel(
        time_encoder=rebuild("time_encoder"),
        symbol_encoder=rebuild("symbol_encoder"),
        time_projector=rebuild("time_projector"),
        symbol_projector=rebuild("symbol_projector"),
        dims=dims,
        channel_mean=arrays["preproc.mean"],
        channel_sigma=arrays["preproc.sigma"],
    )
    return model, header
