"""Synthetic labeled EEG-like datasets for desk-scale verification.

The generator tiles the duration with alternating OK/ERR blocks whose
labeled spans realize ``error_fraction`` exactly, and synthesizes per-channel
band-limited noise plus one class-keyed narrowband tone. The tone frequency
for a channel depends on the class and on a "signature" shared by every
dataset generated with the same ``signature_id``: two subjects with the same
signature are mutually classifiable, while different signatures place the
class tones at unrelated frequencies so nothing transfers but chance.

Everything is driven by a seeded generator; identical specs produce
bit-identical datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .io import AnnotationEvent, AnnotationTrack, EegRecording

# Base noise band (Hz) and the grid the class tones are drawn from. Both sit
# inside the usual EEG analysis bands, far below the 200 Hz feature ceiling.
NOISE_BAND_HZ = (1.0, 45.0)
TONE_GRID_HZ = np.arange(6.0, 40.0, 2.0)

# Alternating OK/ERR block period in seconds.
BLOCK_PERIOD_S = 10.0

ERR_EVENT_CYCLE = ("NCH", "OOT", "MIS")


@dataclass(frozen=True)
class SynthSpec:
    n_channels: int = 61
    duration_s: float = 60.0
    error_fraction: float = 0.2
    class_separation: float = 1.0
    seed: int = 0
    sample_rate_hz: float = 2500.0
    signature_id: int = 0

    def __post_init__(self):
        if self.n_channels < 1:
            raise DataError("n_channels must be >= 1")
        if not 0.0 <= self.error_fraction <= 1.0:
            raise DataError("error_fraction must lie in [0, 1]")
        if self.class_separation < 0:
            raise DataError("class_separation must be >= 0")
        if self.duration_s <= 0:
            raise DataError("duration_s must be > 0")
        if self.seed < 0:
            raise DataError("seed must be a non-negative integer")


def class_signature(signature_id: int, n_channels: int) -> np.ndarray:
    """Per-channel (f_ok, f_err) tone frequencies for a signature.

    Depends only on the signature id and channel count, never on the dataset
    seed, so independently generated subjects can share (or not share) the
    same class-to-frequency mapping.
    """
    rng = np.random.Generator(np.random.PCG64(0xE3E0 + signature_id))
    pairs = np.empty((n_channels, 2))
    for c in range(n_channels):
        pairs[c] = rng.choice(TONE_GRID_HZ, size=2, replace=False)
    return pairs


def _build_track(spec: SynthSpec) -> AnnotationTrack:
    """Tile [0, duration] with OK/ERR blocks; ERR span totals exactly
    error_fraction * duration."""
    events = []
    err_len = spec.error_fraction * BLOCK_PERIOD_S
    ok_len = BLOCK_PERIOD_S - err_len
    t = 0.0
    err_kind = 0
    while t < spec.duration_s - 1e-9:
        remaining = spec.duration_s - t
        if remaining >= BLOCK_PERIOD_S:
            ok_here, err_here = ok_len, err_len
        else:
            ok_here = (1.0 - spec.error_fraction) * remaining
            err_here = spec.error_fraction * remaining
        if ok_here > 1e-9:
            events.append(AnnotationEvent(t, t + ok_here, "OK"))
            t += ok_here
        if err_here > 1e-9:
            label = ERR_EVENT_CYCLE[err_kind % len(ERR_EVENT_CYCLE)]
            events.append(AnnotationEvent(t, t + err_here, label))
            err_kind += 1
            t += err_here
    return AnnotationTrack(events=events)


def _bandlimited_noise(rng: np.random.Generator, n: int, fs: float) -> np.ndarray:
    """Gaussian noise restricted to NOISE_BAND_HZ, unit RMS."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    lo, hi = NOISE_BAND_HZ
    spectrum[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spectrum, n=n)
    rms = np.sqrt(np.mean(x**2))
    return x / rms if rms > 0 else x


def synth_dataset(spec: SynthSpec) -> tuple[EegRecording, AnnotationTrack]:
    """Generate a labeled synthetic recording.

    OK and ERR segments share the same base noise; each segment additionally
    carries a per-channel tone at the class frequency given by the signature,
    with amplitude ``class_separation`` relative to the unit-RMS noise. At
    class_separation 0 the classes are statistically identical.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    track = _build_track(spec)
    pairs = class_signature(spec.signature_id, spec.n_channels)

    samples = np.empty((spec.n_channels, n))
    # 10 uV-RMS noise floor keeps values in a plausible EEG range.
    noise_rms_uv = 10.0
    tone_amp = spec.class_separation * noise_rms_uv * np.sqrt(2.0)

    for c in range(spec.n_channels):
        samples[c] = noise_rms_uv * _bandlimited_noise(rng, n, fs)

    if spec.class_separation > 0:
        t_axis = np.arange(n) / fs
        for ev in track.events:
            s0 = int(round(ev.onset_s * fs))
            s1 = min(int(round(ev.offset_s * fs)), n)
            col = 0 if ev.label == "OK" else 1
            phases = rng.uniform(0.0, 2.0 * np.pi, size=spec.n_channels)
            seg_t = t_axis[s0:s1]
            samples[:, s0:s1] += tone_amp * np.sin(
                2.0 * np.pi * pairs[:, col][:, None] * seg_t[None, :]
                + phases[:, None]
            )

    rec = EegRecording(
        sample_rate_hz=fs,
        channel_names=[f"ch{c:02d}" for c in range(spec.n_channels)],
        samples=samples,
        subject_id=f"synth-{spec.seed}",
    )
    return rec, track
