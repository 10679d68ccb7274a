"""Spectral analysis primitives used to characterize EEG channels.

All functions operate on 1-D float arrays and are deterministic: identical
inputs produce bit-identical outputs. The short-time framing convention is
shared by every feature (one FrameConfig drives the power spectrogram that
the instantaneous frequency, the spectral entropy and the MFCCs are all
derived from), which keeps the per-trial feature matrix coherent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .errors import DataError, ZeroPowerFrameError

# Log floor for Mel filterbank energies before the cepstral transform.
LOG_ENERGY_FLOOR = 1e-12

# Smallest DFT size the default config will resolve to. The Mel filters are
# rounded onto DFT bins; with a 0-200 Hz filterbank the bin spacing must be
# fine enough that 22 boundary points land on distinct bins (at 2500 Hz this
# needs n_dft >= ~280, so the next power of two is 512).
MIN_DEFAULT_N_DFT = 512


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class FrameConfig:
    """Short-time framing parameters.

    ``overlap_s`` is the literal overlap between consecutive frames, so the
    hop is ``frame_len_s - overlap_s`` (45 ms frames overlapping by 10 ms
    advance by 35 ms). ``n_dft`` of None resolves to a power of two that is
    at least the frame length and at least MIN_DEFAULT_N_DFT.
    """

    frame_len_s: float = 0.045
    overlap_s: float = 0.010
    window: str = "hamming"
    n_dft: int | None = None

    def __post_init__(self):
        if not 0.0 < self.overlap_s < self.frame_len_s:
            raise DataError(
                f"overlap_s must satisfy 0 < overlap < frame_len, "
                f"got frame_len_s={self.frame_len_s}, overlap_s={self.overlap_s}"
            )
        if self.window not in ("hamming", "rectangular"):
            raise DataError(f"unknown window {self.window!r}")

    def frame_samples(self, fs: float) -> int:
        return int(np.floor(self.frame_len_s * fs))

    def hop_samples(self, fs: float) -> int:
        return int(np.floor((self.frame_len_s - self.overlap_s) * fs))

    def resolve_n_dft(self, fs: float) -> int:
        n_frame = self.frame_samples(fs)
        if self.n_dft is None:
            return max(MIN_DEFAULT_N_DFT, _next_pow2(n_frame))
        if self.n_dft < n_frame:
            raise DataError(
                f"n_dft={self.n_dft} is smaller than the frame length "
                f"({n_frame} samples at fs={fs})"
            )
        return self.n_dft

    def window_values(self, fs: float) -> np.ndarray:
        n = self.frame_samples(fs)
        if self.window == "hamming":
            return np.hamming(n)
        return np.ones(n)


@dataclass
class Spectrogram:
    """One-sided power spectrogram: ``power[t, k]`` at frame t, bin k."""

    frame_times_s: np.ndarray  # (n_frames,) frame-center times
    freqs_hz: np.ndarray       # (n_bins,) ascending, spacing fs / n_dft
    power: np.ndarray          # (n_frames, n_bins), non-negative

    @property
    def n_frames(self) -> int:
        return self.power.shape[0]

    @property
    def n_bins(self) -> int:
        return self.power.shape[1]


def stft_power(x: np.ndarray, fs: float, cfg: FrameConfig) -> Spectrogram:
    """Short-time power spectrogram.

    Frames of ``cfg.frame_samples(fs)`` samples advance by the hop; each is
    windowed, zero-padded to ``n_dft`` and transformed; the per-frame power
    is |DFT|^2 / N with N the frame length, kept one-sided (bins 0..n_dft/2).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataError("stft_power expects a 1-D signal")
    if not np.all(np.isfinite(x)):
        raise DataError("signal contains non-finite values")
    n_frame = cfg.frame_samples(fs)
    hop = cfg.hop_samples(fs)
    if len(x) < n_frame:
        raise DataError(
            f"signal of {len(x)} samples is shorter than one frame ({n_frame})"
        )
    n_dft = cfg.resolve_n_dft(fs)
    n_frames = (len(x) - n_frame) // hop + 1

    starts = np.arange(n_frames) * hop
    idx = starts[:, None] + np.arange(n_frame)[None, :]
    frames = x[idx] * cfg.window_values(fs)[None, :]

    spectrum = np.fft.rfft(frames, n=n_dft, axis=1)
    power = (spectrum.real**2 + spectrum.imag**2) / n_frame

    freqs = np.arange(n_dft // 2 + 1) * (fs / n_dft)
    centers = (starts + (n_frame - 1) / 2.0) / fs
    return Spectrogram(frame_times_s=centers, freqs_hz=freqs, power=power)


def _frame_totals(spec: Spectrogram) -> np.ndarray:
    totals = spec.power.sum(axis=1)
    if np.any(totals <= 0.0):
        bad = int(np.argmax(totals <= 0.0))
        raise ZeroPowerFrameError(
            f"frame {bad} has zero total power; spectral statistics undefined"
        )
    return totals


def instantaneous_frequency(spec: Spectrogram) -> np.ndarray:
    """Per-frame spectral centroid (first conditional moment of power over
    frequency), in Hz. Requires strictly positive total power in each frame."""
    totals = _frame_totals(spec)
    return (spec.power * spec.freqs_hz[None, :]).sum(axis=1) / totals


def spectral_entropy(spec: Spectrogram, normalized: bool = False) -> np.ndarray:
    """Per-frame Shannon entropy of the normalized power spectrum, in bits.

    Each frame's power is normalized to a distribution over bins; the entropy
    is -sum p log2 p with 0*log2(0) treated as 0, bounded by log2(n_bins).
    With ``normalized=True`` the result is divided by log2(n_bins) to lie in
    [0, 1].
    """
    totals = _frame_totals(spec)
    p = spec.power / totals[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log2(p)  # -inf at zero bins; selected out below
        terms = np.where(p > 0.0, p * logs, 0.0)
    h = -terms.sum(axis=1)
    if normalized:
        h = h / np.log2(spec.n_bins)
    return h


def hz_to_mel(f):
    """Frequency in Hz to Mel units: 2595 * log10(1 + f/700)."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DataError("hz_to_mel requires f >= 0")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    m = np.asarray(m, dtype=float)
    out = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


def critical_bandwidth(f):
    """Critical bandwidth (Hz) around center frequency f:
    25 + 75 * (1 + 1.4 (f/1000)^2)^0.69. Utility only; filter spacing is
    done on the Mel scale."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DataError("critical_bandwidth requires f >= 0")
    out = 25.0 + 75.0 * (1.0 + 1.4 * (f / 1000.0) ** 2) ** 0.69
    return float(out) if out.ndim == 0 else out


@dataclass
class MelFilterbank:
    """Triangular filters with boundary points evenly spaced in Mel and
    rounded onto DFT bins. Filter m rises from boundary bin m to a peak of
    1 at boundary bin m+1 and falls to zero at boundary bin m+2, so each
    filter starts at the previous filter's peak."""

    num_filters: int
    weights: np.ndarray        # (num_filters, n_bins), values in [0, 1]
    f_min_hz: float
    f_max_hz: float
    bin_centers: np.ndarray    # (num_filters,) integer DFT bin of each peak
    bin_points: np.ndarray = field(default=None)  # (num_filters + 2,) boundaries

    @property
    def n_bins(self) -> int:
        return self.weights.shape[1]


def design_mel_filterbank(
    num_filters: int, fs: float, n_dft: int, f_max: float = 200.0
) -> MelFilterbank:
    """Build ``num_filters`` triangular filters over [0, f_max] Hz.

    num_filters + 2 boundary points are spaced evenly in Mel, converted back
    to Hz and rounded to the nearest DFT bin. Raises DataError if the DFT
    grid is too coarse for the boundary points to stay distinct (collapsed
    triangles would divide by zero).
    """
    if num_filters < 1:
        raise DataError("num_filters must be >= 1")
    if f_max > fs / 2:
        raise DataError(f"f_max={f_max} exceeds Nyquist {fs / 2}")
    n_bins_total = n_dft // 2 + 1
    df = fs / n_dft

    n_points = num_filters + 2
    bins_available = int(np.floor(f_max / df)) + 1
    if bins_available < n_points:
        raise DataError(
            f"only {bins_available} DFT bins below {f_max} Hz for "
            f"{n_points} filter boundary points; increase n_dft"
        )

    mel_points = np.linspace(0.0, hz_to_mel(f_max), n_points)
    bin_points = np.round(mel_to_hz(mel_points) / df).astype(int)
    if np.any(np.diff(bin_points) < 1):
        raise DataError(
            "filter boundary points collapse onto shared DFT bins; "
            "increase n_dft or reduce num_filters"
        )

    weights = np.zeros((num_filters, n_bins_total))
    k = np.arange(n_bins_total)
    for m in range(num_filters):
        left, center, right = bin_points[m], bin_points[m + 1], bin_points[m + 2]
        up = (k >= left) & (k <= center)
        down = (k > center) & (k <= right)
        weights[m, up] = (k[up] - left) / (center - left)
        weights[m, down] = (right - k[down]) / (right - center)

    return MelFilterbank(
        num_filters=num_filters,
        weights=weights,
        f_min_hz=0.0,
        f_max_hz=float(f_max),
        bin_centers=bin_points[1:-1].copy(),
        bin_points=bin_points,
    )


def mfcc_from_spectrogram(
    spec: Spectrogram, fb: MelFilterbank, n_coeffs: int = 11
) -> np.ndarray:
    """Cepstral coefficients from an existing power spectrogram.

    Filterbank energies -> log (floored at LOG_ENERGY_FLOOR) -> orthonormal
    DCT-II -> coefficients 1..n_coeffs. Coefficient 0 carries only the
    overall log energy and is dropped, which makes the result exactly
    invariant to amplitude scaling of the input signal.
    """
    if n_coeffs < 1 or n_coeffs >= fb.num_filters:
        raise DataError(
            f"n_coeffs={n_coeffs} must be in [1, num_filters-1={fb.num_filters - 1}]"
        )
    if fb.n_bins != spec.n_bins:
        raise DataError(
            f"filterbank designed for {fb.n_bins} bins, spectrogram has {spec.n_bins}"
        )
    energies = spec.power @ fb.weights.T
    log_e = np.log(energies + LOG_ENERGY_FLOOR)
    ceps = dct(log_e, type=2, norm="ortho", axis=1)
    return ceps[:, 1 : n_coeffs + 1]


def mfcc(
    x: np.ndarray,
    fs: float,
    cfg: FrameConfig,
    fb: MelFilterbank,
    n_coeffs: int = 11,
) -> np.ndarray:
    """Mel-frequency cepstral coefficients of a signal, one row per frame."""
    return mfcc_from_spectrogram(stft_power(x, fs, cfg), fb, n_coeffs)


def filterbank_to_csv(fb: MelFilterbank, path) -> None:
    """Dump nonzero filter weights as CSV rows ``filter,bin,weight``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("filter,bin,weight\n")
        for m in range(fb.num_filters):
            for k in np.flatnonzero(fb.weights[m] > 0.0):
                fh.write(f"{m},{k},{float(fb.weights[m, k])!r}\n")
