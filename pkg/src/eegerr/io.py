"""Recording and annotation I/O, clap synchronization, trial segmentation.

File formats
------------
Recording (``.eegc``, UTF-8, LF)::

    EEGC v1
    fs=<float Hz>
    subject=<string>
    <channel>,<channel>,...
    <v>,<v>,...        # one row per time sample, one column per channel, uV

Annotations (CSV): header ``onset_s,offset_s,label`` with labels drawn from
OK | NCH | OOT | SIL | MIS. Events must not overlap; rows may arrive in any
order and are sorted by onset.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError

ANNOTATION_LABELS = ("OK", "NCH", "OOT", "SIL", "MIS")
ERROR_EVENT_LABELS = frozenset({"NCH", "OOT", "MIS"})

TRIAL_OK = "OK"
TRIAL_ERR = "ERR"

# Moving-RMS window used to estimate the signal envelope for clap detection.
SYNC_ENVELOPE_WINDOW_S = 0.050
# The sync offset is the first time the envelope reaches this fraction of its
# global maximum; a relative threshold keeps the result gain-invariant.
SYNC_THRESHOLD_FRACTION = 0.5


@dataclass
class EegRecording:
    """Multichannel sampled signal in microvolts."""

    sample_rate_hz: float
    channel_names: list[str]
    samples: np.ndarray  # (n_channels, n_samples)
    subject_id: str

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.sample_rate_hz <= 0:
            raise DataError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.samples.ndim != 2:
            raise DataError("samples must be a channels x time matrix")
        if self.samples.shape[0] != len(self.channel_names):
            raise DataError(
                f"{self.samples.shape[0]} sample rows but "
                f"{len(self.channel_names)} channel names"
            )
        if self.samples.shape[1] < 1:
            raise DataError("recording must contain at least one sample")
        if len(set(self.channel_names)) != len(self.channel_names):
            raise DataError("duplicate channel name")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("recording contains non-finite values")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True)
class AnnotationEvent:
    onset_s: float
    offset_s: float
    label: str

    def __post_init__(self):
        if self.label not in ANNOTATION_LABELS:
            raise DataError(f"unknown label {self.label!r}")
        if self.onset_s < 0:
            raise DataError(f"onset {self.onset_s} is negative")
        if self.offset_s <= self.onset_s:
            raise DataError(
                f"offset before onset: [{self.onset_s}, {self.offset_s}]"
            )


@dataclass
class AnnotationTrack:
    """Events sorted by onset, pairwise non-overlapping."""

    events: list[AnnotationEvent]

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: e.onset_s)
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.onset_s < prev.offset_s:
                raise DataError(
                    f"overlapping events: [{prev.onset_s}, {prev.offset_s}] "
                    f"{prev.label} and [{cur.onset_s}, {cur.offset_s}] {cur.label}"
                )

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class Trial:
    """One 1-second all-channel segment carrying a binary label."""

    subject_id: str
    trial_index: int
    start_s: float
    label: str  # TRIAL_OK | TRIAL_ERR
    samples: np.ndarray  # (n_channels, round(fs))

    def __post_init__(self):
        if self.label not in (TRIAL_OK, TRIAL_ERR):
            raise DataError(f"trial label must be OK or ERR, got {self.label!r}")


# ---------------------------------------------------------------------------
# Recording format


def _format_float(v: float) -> str:
    # repr gives the shortest string that round-trips the double exactly
    return repr(float(v))


def _check_field(value: str, what: str) -> str:
    if "," in value or "\n" in value or "\r" in value:
        raise DataError(f"{what} {value!r} may not contain commas or newlines")
    return value


def save_recording(rec: EegRecording, path) -> None:
    _check_field(rec.subject_id, "subject id")
    for name in rec.channel_names:
        _check_field(name, "channel name")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("EEGC v1\n")
        fh.write(f"fs={_format_float(rec.sample_rate_hz)}\n")
        fh.write(f"subject={rec.subject_id}\n")
        fh.write(",".join(rec.channel_names) + "\n")
        for col in rec.samples.T:
            fh.write(",".join(_format_float(v) for v in col) + "\n")


def load_recording(path) -> EegRecording:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 5:
        raise DataError(f"{path}: truncated EEGC file")
    if lines[0] != "EEGC v1":
        raise DataError(f"{path}: bad magic line {lines[0]!r}")
    if not lines[1].startswith("fs="):
        raise DataError(f"{path}: missing fs= header")
    try:
        fs = float(lines[1][3:])
    except ValueError:
        raise DataError(f"{path}: unparsable sample rate {lines[1]!r}") from None
    if not lines[2].startswith("subject="):
        raise DataError(f"{path}: missing subject= header")
    subject = lines[2][len("subject="):]
    channels = lines[3].split(",")
    if any(not c for c in channels):
        raise DataError(f"{path}: empty channel name")

    n_ch = len(channels)
    rows = []
    for i, line in enumerate(lines[4:], start=5):
        parts = line.split(",")
        if len(parts) != n_ch:
            raise DataError(
                f"{path}: ragged rows (line {i} has {len(parts)} values, "
                f"expected {n_ch})"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise DataError(f"{path}: unparsable value on line {i}") from None
    samples = np.array(rows, dtype=float).T
    if samples.size and not np.all(np.isfinite(samples)):
        raise DataError(f"{path}: non-finite value in sample data")
    return EegRecording(
        sample_rate_hz=fs,
        channel_names=channels,
        samples=samples,
        subject_id=subject,
    )


# ---------------------------------------------------------------------------
# Annotation format


def save_annotations(track: AnnotationTrack, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("onset_s,offset_s,label\n")
        for ev in track.events:
            fh.write(f"{_format_float(ev.onset_s)},{_format_float(ev.offset_s)},{ev.label}\n")


def load_annotations(path) -> AnnotationTrack:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines or lines[0] != "onset_s,offset_s,label":
        raise DataError(f"{path}: missing annotation header")
    events = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise DataError(f"{path}: line {i} needs onset,offset,label")
        try:
            onset, offset = float(parts[0]), float(parts[1])
        except ValueError:
            raise DataError(f"{path}: unparsable time on line {i}") from None
        events.append(AnnotationEvent(onset_s=onset, offset_s=offset, label=parts[2]))
    return AnnotationTrack(events=events)


# ---------------------------------------------------------------------------
# Synchronization


def moving_rms(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving RMS with a rectangular window, shrunk at the edges."""
    sq = np.concatenate([[0.0], np.cumsum(np.asarray(x, dtype=float) ** 2)])
    n = len(x)
    half = window // 2
    lo = np.clip(np.arange(n) - half, 0, n)
    hi = np.clip(np.arange(n) + (window - half), 0, n)
    return np.sqrt((sq[hi] - sq[lo]) / (hi - lo))


def find_sync_offset(signal: np.ndarray, sample_rate_hz: float) -> float:
    """Time (s) of the first envelope peak, used to anchor the trial grid.

    The envelope is a 50 ms moving RMS; the returned offset is the time of
    the first sample where it reaches half of its global maximum.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.size == 0:
        raise DataError("empty sync signal")
    if not np.all(np.isfinite(signal)):
        raise DataError("sync signal contains non-finite values")
    window = max(1, int(round(SYNC_ENVELOPE_WINDOW_S * sample_rate_hz)))
    env = moving_rms(signal, window)
    peak = env.max()
    if peak <= 0.0:
        raise DataError("all-zero signal: no envelope peak to synchronize on")
    first = int(np.argmax(env >= SYNC_THRESHOLD_FRACTION * peak))
    return first / sample_rate_hz


# ---------------------------------------------------------------------------
# Segmentation

# Tolerance when testing window containment against event boundaries,
# absorbing float error from the sample-grid arithmetic.
_CONTAINMENT_EPS = 1e-9


def trial_label_for_event(event_label: str) -> str | None:
    """Binary label for a window inside an event; None means discard.

    NCH/OOT/MIS collapse to ERR; SIL windows belong to neither class and are
    excluded from the binary task entirely.
    """
    if event_label == "OK":
        return TRIAL_OK
    if event_label in ERROR_EVENT_LABELS:
        return TRIAL_ERR
    return None


def segment_trials(
    rec: EegRecording, track: AnnotationTrack, offset_s: float = 0.0
) -> list[Trial]:
    """Cut consecutive non-overlapping 1 s windows anchored at ``offset_s``.

    A window becomes a trial only if it lies entirely within a single
    annotated event; windows inside SIL events, spanning event boundaries or
    falling into unlabeled gaps are discarded.
    """
    if offset_s < 0:
        raise DataError(f"offset_s must be >= 0, got {offset_s}")
    fs = rec.sample_rate_hz
    win = int(round(fs))
    start_sample = int(round(offset_s * fs))
    if rec.n_samples - start_sample < win:
        raise DataError(
            f"recording has less than 1 s of data after offset {offset_s}"
        )

    trials = []
    index = 0
    s0 = start_sample
    while s0 + win <= rec.n_samples:
        t0 = s0 / fs
        t1 = (s0 + win) / fs
        for ev in track.events:
            if ev.onset_s - _CONTAINMENT_EPS <= t0 and t1 <= ev.offset_s + _CONTAINMENT_EPS:
                label = trial_label_for_event(ev.label)
                if label is not None:
                    trials.append(
                        Trial(
                            subject_id=rec.subject_id,
                            trial_index=index,
                            start_s=t0,
                            label=label,
                            samples=rec.samples[:, s0 : s0 + win].copy(),
                        )
                    )
                    index += 1
                break
            if ev.onset_s > t0:
                break
        s0 += win
    return trials
