"""Plain-text key-value configuration with dotted keys, e.g. `loss.tau = 0.2`.

Flags override file values; the merged, effective configuration is echoed
into every output artifact so runs are reproducible from files alone.
"""

from __future__ import annotations

from pathlib import Path

from .augment import AugmentConfig
from .errors import DataError
from .losses import LossConfig
from .trainer import SchedulerConfig, TrainConfig


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


# key -> (parser, default provider is the dataclass default)
CONFIG_KEYS = {
    "loss.tau": float,
    "loss.delta": float,
    "loss.lambda": float,
    "loss.denominator_mode": str,
    "augment.jitter_sigma": float,
    "augment.symbol_edit_rate": float,
    "augment.seed": int,
    "model.h_dim": int,
    "model.z_dim": int,
    "model.hidden": _int_list,
    "model.projector_hidden": _int_list,
    "train.epochs": int,
    "train.batch_size": int,
    "train.lr": float,
    "train.seed": int,
    "train.n_symbols": int,
    "scheduler.factor": float,
    "scheduler.patience": int,
    "scheduler.min_lr": float,
    "data.window_len": int,
    "data.stride": int,
}


def parse_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise DataError(f"{path}:{lineno}: expected `key = value`")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in CONFIG_KEYS:
            raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value
    return values


def merge_config(
    file_values: dict[str, str], overrides: dict[str, str] | None = None
) -> dict[str, object]:
    merged = dict(file_values)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    parsed: dict[str, object] = {}
    for key, raw in merged.items():
        if key not in CONFIG_KEYS:
            raise DataError(f"unknown config key {key!r}")
        try:
            parsed[key] = CONFIG_KEYS[key](raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise DataError(f"bad value for {key}: {raw!r}") from exc
    return parsed


def build_train_config(values: dict[str, object]) -> TrainConfig:
    def get(key, default):
        return values.get(key, default)

    loss = LossConfig(
        tau=get("loss.tau", 0.2),
        delta=get("loss.delta", 1.0),
        lam=get("loss.lambda", 0.5),
        denominator_mode=get("loss.denominator_mode", "simclr_standard"),
    )
    augment = AugmentConfig(
        jitter_sigma=get("augment.jitter_sigma", 0.1),
        symbol_edit_rate=get("augment.symbol_edit_rate", 0.02),
        seed=get("augment.seed", 0),
    )
    scheduler = SchedulerConfig(
        factor=get("scheduler.factor", 0.5),
        patience=get("scheduler.patience", 10),
        min_lr=get("scheduler.min_lr", 1e-6),
    )
    return TrainConfig(
        epochs=get("train.epochs", 100),
        batch_size=get("train.batch_size", 64),
        lr=get("train.lr", 5e-4),
        seed=get("train.seed", 0),
        n_symbols=get("train.n_symbols", 64),
        h_dim=get("model.h_dim", 128),
        z_dim=get("model.z_dim", 32),
        encoder_hidden=tuple(get("model.hidden", (256,))),
        projector_hidden=tuple(get("model.projector_hidden", (64,))),
        loss=loss,
        augment=augment,
        scheduler=scheduler,
    )


def effective_config_string(values: dict[str, object]) -> str:
    """Canonical one-line echo of the effective settings."""
    return " ".join(f"{k}={values[k]}" for k in sorted(values))
