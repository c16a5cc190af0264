"""Datasets: PAMAP2 ingestion, activity-segment windowing, cross-subject
splits, the synthetic shifted-subject generator, and the CSV cache format."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError

# PAMAP2 protocol files: 54 space-separated columns per row.
# 0 timestamp, 1 activity id, 2 heart rate, then hand/chest/ankle IMUs of 17
# columns each; the 3-axis +-16g accelerometer sits at offsets 1..3 inside
# each IMU block.
PAMAP2_N_COLUMNS = 54
PAMAP2_ACCEL_COLUMNS = (4, 5, 6, 21, 22, 23, 38, 39, 40)
PAMAP2_ACTIVITY_LABELS = {3: 0, 4: 1, 5: 2}  # standing, walking, running
PAMAP2_SAMPLE_RATE = 100.0

LABEL_NAMES = {0: "standing", 1: "walking", 2: "running"}


@dataclass
class TimeSeriesSample:
    """One windowed multichannel series: values (K, L), subject id, optional label."""

    values: np.ndarray
    subject_id: int
    label: int | None = None


@dataclass
class Segment:
    """A contiguous single-activity channel stream, pre-windowing."""

    values: np.ndarray  # (K, T)
    subject_id: int
    label: int


@dataclass
class DatasetSplit:
    pretrain: list[TimeSeriesSample]     # source windows, labels hidden
    probe_train: list[TimeSeriesSample]  # source windows with labels
    test: list[TimeSeriesSample]         # target windows with labels


@dataclass(frozen=True)
class SynthSpec:
    """Per-subject distortion of the shared class templates."""

    shift: float = 0.0
    warp: float = 1.0        # frequency scaling
    noise_std: float = 0.1
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.warp <= 0:
            raise DataError("warp factor must be > 0")


def _pamap2_path(directory: Path, subject: int) -> Path:
    for candidate in (
        directory / f"subject10{subject}.dat",
        directory / "Protocol" / f"subject10{subject}.dat",
    ):
        if candidate.exists():
            return candidate
    raise DataError(f"no PAMAP2 file for subject {subject} under {directory}")


def load_pamap2(directory, subjects: list[int]) -> dict[int, list[Segment]]:
    """Load per-subject streams, keeping standing/walking/running only.

    Interior NaNs are linearly interpolated per channel; rows still NaN at the
    segment edges are dropped.
    """
    directory = Path(directory)
    streams: dict[int, list[Segment]] = {}
    for subject in subjects:
        path = _pamap2_path(directory, subject)
        try:
            frame = pd.read_csv(path, sep=r"\s+", header=None, dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"malformed row in {path}: {exc}") from exc
        if frame.shape[1] != PAMAP2_N_COLUMNS:
            raise DataError(
                f"{path}: expected {PAMAP2_N_COLUMNS} columns, found {frame.shape[1]}"
            )
        activity = frame.iloc[:, 1].to_numpy()
        if np.any(~np.isfinite(activity)):
            bad = int(np.argmax(~np.isfinite(activity)))
            raise DataError(f"malformed row in {path}: line {bad + 1} has no activity id")
        segments: list[Segment] = []
        boundaries = np.flatnonzero(np.diff(activity) != 0) + 1
        for start, stop in zip(
            np.concatenate(([0], boundaries)),
            np.concatenate((boundaries, [len(activity)])),
        ):
            act = int(activity[start])
            if act not in PAMAP2_ACTIVITY_LABELS:
                continue
            block = frame.iloc[start:stop, list(PAMAP2_ACCEL_COLUMNS)]
            block = block.interpolate(method="linear", limit_area="inside")
            block = block.dropna()
            if block.empty:
                continue
            segments.append(
                Segment(
                    values=block.to_numpy().T,
                    subject_id=subject,
                    label=PAMAP2_ACTIVITY_LABELS[act],
                )
            )
        streams[subject] = segments
    return streams


def window(segments: list[Segment], length: int, stride: int) -> list[TimeSeriesSample]:
    """Slide fixed-size windows over each segment; windows never cross segments."""
    if length <= 0 or stride <= 0:
        raise DataError("window length and stride must be positive")
    samples: list[TimeSeriesSample] = []
    for segment in segments:
        total = segment.values.shape[1]
        for start in range(0, total - length + 1, stride):
            samples.append(
                TimeSeriesSample(
                    values=segment.values[:, start:start + length].copy(),
                    subject_id=segment.subject_id,
                    label=segment.label,
                )
            )
    return samples


def make_split(
    samples: list[TimeSeriesSample], source: int, target: int
) -> DatasetSplit:
    """Cross-subject protocol: pretrain and probe on source, test on target."""
    if source == target:
        raise DataError("source and target subjects must differ")
    by_subject: dict[int, list[TimeSeriesSample]] = {}
    for sample in samples:
        by_subject.setdefault(sample.subject_id, []).append(sample)
    for subject in (source, target):
        if subject not in by_subject:
            raise DataError(f"subject {subject} not present in dataset")
        labels = {s.label for s in by_subject[subject]}
        missing = set(LABEL_NAMES) - labels
        if missing:
            names = ", ".join(LABEL_NAMES[m] for m in sorted(missing))
            raise DataError(f"subject {subject} lacks activities: {names}")
    return DatasetSplit(
        pretrain=[replace(s, label=None) for s in by_subject[source]],
        probe_train=list(by_subject[source]),
        test=list(by_subject[target]),
    )


# synthetic class templates: standing = per-channel constant, walking = 1.5 Hz
# sinusoid, running = 3 Hz sinusoid at twice the amplitude
_SYNTH_FREQ = {1: 1.5, 2: 3.0}
_SYNTH_AMP = {1: 1.0, 2: 2.0}


def synth_generate(
    specs: dict[int, SynthSpec],
    n_per_class: int,
    length: int,
    n_channels: int,
    sample_rate: float = 100.0,
) -> list[TimeSeriesSample]:
    """Deterministic labeled dataset of shifted/warped/noisy subjects."""
    if len(specs) < 2:
        raise DataError("need at least 2 subjects")
    samples: list[TimeSeriesSample] = []
    t = np.arange(length) / sample_rate
    channel_gain = 1.0 + 0.1 * np.arange(n_channels)
    for subject in sorted(specs):
        spec = specs[subject]
        rng = np.random.default_rng(spec.seed)
        for label in sorted(LABEL_NAMES):
            for _ in range(n_per_class):
                if label == 0:
                    base = 0.5 * spec.amplitude * channel_gain[:, None]
                    base = np.broadcast_to(base, (n_channels, length)).copy()
                else:
                    freq = _SYNTH_FREQ[label] * spec.warp
                    amp = _SYNTH_AMP[label] * spec.amplitude
                    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_channels)
                    base = (amp * channel_gain)[:, None] * np.sin(
                        2.0 * np.pi * freq * t[None, :] + phase[:, None]
                    )
                values = base + spec.shift
                if spec.noise_std > 0:
                    values = values + rng.normal(0.0, spec.noise_std, size=values.shape)
                samples.append(
                    TimeSeriesSample(values=values, subject_id=subject, label=label)
                )
    return samples


def save_dataset(samples: list[TimeSeriesSample], path, meta: dict | None = None) -> None:
    """CSV cache: one row per window (subject, label, then K*L values),
    preceded by comment lines carrying shape and run metadata."""
    if not samples:
        raise DataError("refusing to write an empty dataset")
    n_channels, length = samples[0].values.shape
    lines = [f"# stc-dataset v1 K={n_channels} L={length}"]
    for key in sorted(meta or {}):
        lines.append(f"# {key}={meta[key]}")
    for sample in samples:
        label = "" if sample.label is None else str(sample.label)
        values = ",".join(repr(float(v)) for v in sample.values.ravel())
        lines.append(f"{sample.subject_id},{label},{values}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> tuple[list[TimeSeriesSample], dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    meta: dict[str, str] = {}
    shape: tuple[int, int] | None = None
    rows: list[str] = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("stc-dataset"):
                fields = dict(p.split("=") for p in body.split()[2:])
                shape = (int(fields["K"]), int(fields["L"]))
            elif "=" in body:
                key, value = body.split("=", 1)
                meta[key] = value
        elif line.strip():
            rows.append(line)
    if shape is None:
        raise DataError(f"{path} is not an stc dataset (missing header)")
    n_channels, length = shape
    samples = []
    for i, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != 2 + n_channels * length:
            raise DataError(f"{path}: row {i + 1} has {len(parts)} fields")
        label = None if parts[1] == "" else int(parts[1])
        values = np.array([float(v) for v in parts[2:]]).reshape(n_channels, length)
        samples.append(
            TimeSeriesSample(values=values, subject_id=int(parts[0]), label=label)
        )
    return samples, meta
