"""Linear-probe evaluation, the pairwise cross-subject benchmark, supervised
baselines, and result reporting."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import DatasetSplit, TimeSeriesSample, make_split
from .errors import DataError
from .model import StcModel, embed_symbol, embed_time
from .nn_core import adam_init, adam_step, init_mlp, mlp_backward, mlp_forward, softmax, train_logistic
from .symbolize import ChannelStats, make_cutlines, symbolize
from .trainer import TrainConfig, pretrain, standardize

ZT_ONLY = "zt_only"
ZT_PLUS_ZS = "zt_plus_zs"
PROBE_MODES = (ZT_ONLY, ZT_PLUS_ZS)


@dataclass
class BenchmarkRow:
    source: int
    target: int
    method: str
    mode: str
    accuracy: float


@dataclass
class BenchmarkMatrix:
    rows: list[BenchmarkRow]

    def average(self, method: str, mode: str) -> float:
        vals = [r.accuracy for r in self.rows if r.method == method and r.mode == mode]
        if not vals:
            raise DataError(f"no rows for method={method} mode={mode}")
        return float(np.mean(vals))

    def methods(self) -> list[tuple[str, str]]:
        seen = []
        for row in self.rows:
            key = (row.method, row.mode)
            if key not in seen:
                seen.append(key)
        return seen


def _model_stats(model: StcModel) -> ChannelStats:
    return ChannelStats(mean=model.channel_mean, sigma=model.channel_sigma)


def embed_features(model: StcModel, samples: list[TimeSeriesSample], mode: str) -> np.ndarray:
    """Frozen-model features for the probe: z_t, optionally concat z_s."""
    if mode not in PROBE_MODES:
        raise DataError(f"unknown probe mode {mode!r}")
    if not samples:
        raise DataError("cannot embed an empty sample list")
    if samples[0].values.shape != (model.dims.n_channels, model.dims.window_len):
        raise DataError(
            f"sample shape {samples[0].values.shape} does not match model dims "
            f"({model.dims.n_channels}, {model.dims.window_len})"
        )
    stats = _model_stats(model)
    xt = np.stack([standardize(s.values, stats).ravel() for s in samples])
    zt, _ = embed_time(model, xt)
    if mode == ZT_ONLY:
        return zt
    cuts = make_cutlines(stats, model.dims.n_symbols)
    xs = np.stack([symbolize(s, cuts).normalized for s in samples])
    zs, _ = embed_symbol(model, xs)
    return np.concatenate([zt, zs], axis=1)


def probe(
    model: StcModel,
    split: DatasetSplit,
    mode: str = ZT_ONLY,
    probe_on: str = "source",
    reg: float = 1e-4,
    epochs: int = 300,
) -> float:
    """Logistic-regression probe on frozen embeddings; top-1 accuracy on test.

    probe_on="target" instead trains and tests on a deterministic even/odd
    split of the target windows.
    """
    if probe_on == "source":
        train_samples, test_samples = split.probe_train, split.test
    elif probe_on == "target":
        train_samples = split.test[0::2]
        test_samples = split.test[1::2]
    else:
        raise DataError(f"unknown probe_on {probe_on!r}")
    train_x = embed_features(model, train_samples, mode)
    test_x = embed_features(model, test_samples, mode)
    train_y = np.array([s.label for s in train_samples])
    test_y = np.array([s.label for s in test_samples])
    clf = train_logistic(train_x, train_y, reg=reg, epochs=epochs)
    return float((clf.predict(test_x) == test_y).mean())


def baseline_lr(split: DatasetSplit, cfg: TrainConfig) -> float:
    """Logistic regression on flattened raw windows (source-standardized)."""
    from .symbolize import fit_channel_stats

    stats = fit_channel_stats(split.probe_train)
    train_x = np.stack([standardize(s.values, stats).ravel() for s in split.probe_train])
    test_x = np.stack([standardize(s.values, stats).ravel() for s in split.test])
    train_y = np.array([s.label for s in split.probe_train])
    test_y = np.array([s.label for s in split.test])
    clf = train_logistic(train_x, train_y)
    return float((clf.predict(test_x) == test_y).mean())


def baseline_mlp(
    split: DatasetSplit,
    cfg: TrainConfig,
    hidden: tuple[int, ...] = (128, 64),
    epochs: int = 200,
    lr: float = 1e-3,
) -> float:
    """Supervised MLP on flattened raw windows, same windows as the SSL path."""
    from .symbolize import fit_channel_stats

    stats = fit_channel_stats(split.probe_train)
    train_x = np.stack([standardize(s.values, stats).ravel() for s in split.probe_train])
    test_x = np.stack([standardize(s.values, stats).ravel() for s in split.test])
    train_y = np.array([s.label for s in split.probe_train])
    test_y = np.array([s.label for s in split.test])
    n_classes = int(train_y.max()) + 1
    rng = np.random.default_rng(cfg.seed)
    net = init_mlp([train_x.shape[1], *hidden, n_classes], rng)
    arrays = net.arrays()
    opt = adam_init(arrays, lr=lr)
    n = train_x.shape[0]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), train_y] = 1.0
    for _ in range(epochs):
        cache = mlp_forward(net, train_x)
        probs = softmax(cache.output)
        grads, _ = mlp_backward(net, cache, (probs - onehot) / n)
        adam_step(opt, arrays, grads.arrays())
    preds = mlp_forward(net, test_x).output.argmax(axis=1)
    return float((preds == test_y).mean())


def pairwise_benchmark(
    samples: list[TimeSeriesSample],
    subjects: list[int],
    cfg: TrainConfig,
    mode: str = ZT_ONLY,
    baselines: bool = False,
    probe_on: str = "source",
) -> BenchmarkMatrix:
    """All ordered (source, target) pairs: pretrain on source, probe, record."""
    if len(subjects) < 2:
        raise DataError("benchmark needs at least 2 subjects")
    rows: list[BenchmarkRow] = []
    for source in subjects:
        for target in subjects:
            if source == target:
                continue
            split = make_split(samples, source, target)
            model, _ = pretrain(split, cfg)
            rows.append(BenchmarkRow(
                source=source, target=target, method="stc", mode=mode,
                accuracy=probe(model, split, mode=mode, probe_on=probe_on),
            ))
            if baselines:
                rows.append(BenchmarkRow(
                    source=source, target=target, method="mlp", mode="raw",
                    accuracy=baseline_mlp(split, cfg),
                ))
                rows.append(BenchmarkRow(
                    source=source, target=target, method="lr", mode="raw",
                    accuracy=baseline_lr(split, cfg),
                ))
    return BenchmarkMatrix(rows=rows)


def report(matrix: BenchmarkMatrix, path, meta: dict | None = None) -> str:
    """Write the results CSV plus an aligned text table; returns the table."""
    if not matrix.rows:
        raise DataError("cannot report an empty benchmark matrix")
    path = Path(path)
    lines = []
    for key in sorted(meta or {}):
        lines.append(f"# {key}={meta[key]}")
    lines.append("source,target,method,mode,accuracy")
    for row in matrix.rows:
        lines.append(f"{row.source},{row.target},{row.method},{row.mode},{row.accuracy!r}")
    for method, mode in matrix.methods():
        lines.append(f"average,,{method},{mode},{matrix.average(method, mode)!r}")
    path.write_text("\n".join(lines) + "\n")

    pairs: list[tuple[int, int]] = []
    for row in matrix.rows:
        if (row.source, row.target) not in pairs:
            pairs.append((row.source, row.target))
    columns = matrix.methods()
    header = ["source", "target"] + [f"{m}[{d}]" for m, d in columns] + ["best"]
    table_rows = [header]
    for source, target in pairs:
        cells = [str(source), str(target)]
        accs = {}
        for method, mode in columns:
            acc = next(
                r.accuracy for r in matrix.rows
                if (r.source, r.target, r.method, r.mode) == (source, target, method, mode)
            )
            accs[(method, mode)] = acc
            cells.append(f"{acc:.3f}")
        best = max(accs, key=accs.get)
        cells.append(best[0])
        table_rows.append(cells)
    avg_cells = ["average", ""]
    for method, mode in columns:
        avg_cells.append(f"{matrix.average(method, mode):.3f}")
    avg_cells.append("")
    table_rows.append(avg_cells)
    widths = [max(len(r[c]) for r in table_rows) for c in range(len(header))]
    text = "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
        for r in table_rows
    ) + "\n"
    path.with_suffix(".txt").write_text(text)
    return text


def read_results_csv(path) -> BenchmarkMatrix:
    """Inverse of report()'s CSV (average rows are skipped)."""
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or line.startswith("source,") or not line.strip():
            continue
        source, target, method, mode, acc = line.split(",")
        if source == "average":
            continue
        rows.append(BenchmarkRow(
            source=int(source), target=int(target), method=method, mode=mode,
            accuracy=float(acc),
        ))
    return BenchmarkMatrix(rows=rows)
