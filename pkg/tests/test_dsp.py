import numpy as np
import numpy.testing as npt
import pytest

from eegerr.dsp import (
    FrameConfig,
    Spectrogram,
    critical_bandwidth,
    design_mel_filterbank,
    hz_to_mel,
    instantaneous_frequency,
    mel_to_hz,
    mfcc,
    spectral_entropy,
    stft_power,
)
from eegerr.errors import DataError, ZeroPowerFrameError

from oracles import (
    oracle_dct2_ortho,
    oracle_entropy,
    oracle_instfreq,
    oracle_mel_weights,
    oracle_mfcc,
    oracle_power_spectrogram,
)

FS = 2500.0


def make_spec(power, fs=FS, n_dft=512):
    power = np.atleast_2d(np.asarray(power, dtype=float))
    freqs = np.arange(power.shape[1]) * fs / n_dft
    times = np.arange(power.shape[0]) * 0.035
    return Spectrogram(frame_times_s=times, freqs_hz=freqs, power=power)


# ---------------------------------------------------------------------------
# Framing and spectrogram


def test_default_framing_constants():
    cfg = FrameConfig()
    assert cfg.frame_samples(FS) == 112
    assert cfg.hop_samples(FS) == 87
    assert cfg.resolve_n_dft(FS) == 512


def test_frame_count_one_second():
    cfg = FrameConfig()
    spec = stft_power(np.random.default_rng(0).standard_normal(2500), FS, cfg)
    assert spec.n_frames == (2500 - 112) // 87 + 1 == 28
    assert spec.n_bins == 512 // 2 + 1


def test_stft_zero_signal_is_zero_power():
    spec = stft_power(np.zeros(2500), FS, FrameConfig())
    assert np.all(spec.power == 0.0)


def test_stft_too_short_signal_raises():
    with pytest.raises(DataError):
        stft_power(np.zeros(50), FS, FrameConfig())


def test_stft_rejects_nonfinite():
    x = np.zeros(2500)
    x[3] = np.nan
    with pytest.raises(DataError):
        stft_power(x, FS, FrameConfig())


def test_invalid_overlap_rejected():
    with pytest.raises(DataError):
        FrameConfig(frame_len_s=0.045, overlap_s=0.045)
    with pytest.raises(DataError):
        FrameConfig(frame_len_s=0.045, overlap_s=0.0)


def test_explicit_n_dft_must_cover_frame():
    cfg = FrameConfig(n_dft=64)
    with pytest.raises(DataError):
        cfg.resolve_n_dft(FS)  # frame is 112 samples


def test_stft_matches_naive_dft_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = rng.standard_normal(2500) * 40.0
        spec = stft_power(x, FS, FrameConfig())
        expected = oracle_power_spectrogram(x, FS)
        npt.assert_allclose(spec.power, expected, rtol=1e-9, atol=1e-12)


def test_stft_rectangular_parseval_identity():
    # With a rectangular window, 2 * sum(P) - P[0] - P[nyq] per frame equals
    # (n_dft / n_frame) * sum(x^2) over that frame exactly.
    rng = np.random.default_rng(8)
    x = rng.standard_normal(2500)
    cfg = FrameConfig(window="rectangular")
    spec = stft_power(x, FS, cfg)
    n_frame, hop, n_dft = 112, 87, 512
    for t in range(spec.n_frames):
        frame = x[t * hop : t * hop + n_frame]
        lhs = 2.0 * spec.power[t].sum() - spec.power[t, 0] - spec.power[t, -1]
        rhs = (n_dft / n_frame) * np.sum(frame**2)
        npt.assert_allclose(lhs, rhs, rtol=1e-9)


def test_stft_deterministic():
    x = np.random.default_rng(3).standard_normal(2500)
    a = stft_power(x, FS, FrameConfig())
    b = stft_power(x, FS, FrameConfig())
    assert np.array_equal(a.power, b.power)


# ---------------------------------------------------------------------------
# Instantaneous frequency


def test_instfreq_single_bin():
    power = np.zeros(257)
    k50 = int(round(50.0 / (FS / 512)))
    power[k50] = 3.0
    f = instantaneous_frequency(make_spec(power))
    npt.assert_allclose(f, [k50 * FS / 512])


def test_instfreq_flat_spectrum_is_half_band():
    spec = make_spec(np.ones(257))
    f = instantaneous_frequency(spec)
    npt.assert_allclose(f, [spec.freqs_hz.mean()])
    assert abs(f[0] - FS / 4) < FS / 512  # B/2 up to half-bin discretization


def test_instfreq_pure_tone_within_one_hz():
    t = np.arange(2500) / FS
    x = 80.0 * np.sin(2 * np.pi * 50.0 * t)
    spec = stft_power(x, FS, FrameConfig())
    f = instantaneous_frequency(spec)
    assert np.all(np.abs(f - 50.0) < 1.0)


def test_instfreq_matches_oracle():
    rng = np.random.default_rng(11)
    x = rng.standard_normal(2500)
    spec = stft_power(x, FS, FrameConfig())
    expected = oracle_instfreq(oracle_power_spectrogram(x, FS), FS, 512)
    npt.assert_allclose(instantaneous_frequency(spec), expected, rtol=1e-9)


def test_instfreq_bounded_by_nyquist():
    rng = np.random.default_rng(12)
    for _ in range(20):
        spec = make_spec(rng.uniform(0, 1, size=(4, 257)))
        f = instantaneous_frequency(spec)
        assert np.all(f >= 0.0) and np.all(f <= FS / 2)


def test_instfreq_zero_power_frame_raises():
    with pytest.raises(ZeroPowerFrameError):
        instantaneous_frequency(make_spec(np.zeros((2, 257))))


# ---------------------------------------------------------------------------
# Spectral entropy


def test_entropy_single_bin_is_zero():
    power = np.zeros(257)
    power[10] = 5.0
    npt.assert_allclose(spectral_entropy(make_spec(power)), [0.0])


def test_entropy_uniform_is_log2_bins():
    h = spectral_entropy(make_spec(np.full(257, 0.25)))
    npt.assert_allclose(h, [np.log2(257)], rtol=0, atol=1e-9)


def test_entropy_matches_direct_formula():
    rng = np.random.default_rng(13)
    power = rng.uniform(0.0, 2.0, size=(6, 257))
    h = spectral_entropy(make_spec(power))
    npt.assert_allclose(h, oracle_entropy(power), rtol=0, atol=1e-12)


def test_entropy_bounds_and_normalized_variant():
    rng = np.random.default_rng(14)
    power = rng.uniform(0.0, 1.0, size=(8, 257))
    spec = make_spec(power)
    h = spectral_entropy(spec)
    assert np.all(h >= 0.0) and np.all(h <= np.log2(257))
    npt.assert_allclose(spectral_entropy(spec, normalized=True), h / np.log2(257))


def test_entropy_zero_power_frame_raises():
    power = np.ones((3, 257))
    power[1] = 0.0
    with pytest.raises(ZeroPowerFrameError):
        spectral_entropy(make_spec(power))


# ---------------------------------------------------------------------------
# Mel scale and critical bandwidth


def test_hz_to_mel_anchors():
    assert hz_to_mel(0.0) == 0.0
    npt.assert_allclose(hz_to_mel(700.0), 2595.0 * np.log10(2.0))
    assert abs(hz_to_mel(700.0) - 781.17) < 0.01
    assert abs(hz_to_mel(200.0) - 283.2) < 0.1


def test_hz_to_mel_strictly_increasing_and_invertible():
    f = np.linspace(0.0, 1250.0, 200)
    m = hz_to_mel(f)
    assert np.all(np.diff(m) > 0)
    npt.assert_allclose(mel_to_hz(m), f, atol=1e-9)


def test_hz_to_mel_rejects_negative():
    with pytest.raises(DataError):
        hz_to_mel(-1.0)


def test_critical_bandwidth_values():
    npt.assert_allclose(critical_bandwidth(0.0), 100.0)
    assert abs(critical_bandwidth(1000.0) - (25.0 + 75.0 * 2.4**0.69)) < 1e-9
    assert abs(critical_bandwidth(1000.0) - 162.2) < 0.1


def test_critical_bandwidth_monotone():
    f = np.linspace(0.0, 1000.0, 101)
    bw = critical_bandwidth(f)
    assert np.all(np.diff(bw) > 0)


# ---------------------------------------------------------------------------
# Filterbank


def test_filterbank_matches_oracle_weights():
    fb = design_mel_filterbank(20, FS, 512, f_max=200.0)
    npt.assert_allclose(fb.weights, oracle_mel_weights(20, FS, 512, 200.0), atol=1e-12)


def test_filterbank_peaks_at_one_on_center_bins():
    fb = design_mel_filterbank(20, FS, 512)
    for m in range(fb.num_filters):
        assert fb.weights[m].max() == 1.0
        assert fb.weights[m, fb.bin_centers[m]] == 1.0
        assert np.argmax(fb.weights[m]) == fb.bin_centers[m]


def test_filterbank_adjacent_start_property():
    # filter m is zero at (and below) filter m-1's center bin and rises just after
    fb = design_mel_filterbank(20, FS, 512)
    for m in range(1, fb.num_filters):
        prev_center = fb.bin_centers[m - 1]
        assert fb.weights[m, prev_center] == 0.0
        assert np.all(fb.weights[m, : prev_center + 1] == 0.0)
        assert fb.weights[m, prev_center + 1] > 0.0


def test_filterbank_weights_unimodal_in_unit_range():
    fb = design_mel_filterbank(20, FS, 512)
    assert np.all(fb.weights >= 0.0) and np.all(fb.weights <= 1.0)
    for row in fb.weights:
        nz = np.flatnonzero(row)
        peak = np.argmax(row)
        assert np.all(np.diff(row[nz[0] : peak + 1]) > 0)
        assert np.all(np.diff(row[peak : nz[-1] + 1]) < 0)
    assert np.all(np.diff(fb.bin_centers) >= 1)


def test_filterbank_single_filter():
    fb = design_mel_filterbank(1, FS, 512, f_max=200.0)
    mid_hz = mel_to_hz(hz_to_mel(200.0) / 2.0)
    assert fb.bin_centers[0] == round(mid_hz / (FS / 512))
    assert fb.weights[0, fb.bin_centers[0]] == 1.0


def test_filterbank_collapse_raises():
    # 19.5 Hz bins cannot carry 22 distinct boundary points below 200 Hz
    with pytest.raises(DataError):
        design_mel_filterbank(20, FS, 128)


def test_filterbank_rejects_fmax_above_nyquist():
    with pytest.raises(DataError):
        design_mel_filterbank(20, FS, 512, f_max=2000.0)


# ---------------------------------------------------------------------------
# MFCC


@pytest.fixture(scope="module")
def fb20():
    return design_mel_filterbank(20, FS, 512)


def test_mfcc_zero_signal_gives_zero_coeffs(fb20):
    c = mfcc(np.zeros(2500), FS, FrameConfig(), fb20)
    assert c.shape == (28, 11)
    npt.assert_allclose(c, 0.0, atol=1e-12)


def test_mfcc_amplitude_invariance(fb20):
    rng = np.random.default_rng(21)
    x = rng.standard_normal(2500) * 50.0
    base = mfcc(x, FS, FrameConfig(), fb20)
    for alpha in (0.5, 2.0, 16.0):
        scaled = mfcc(alpha * x, FS, FrameConfig(), fb20)
        npt.assert_allclose(scaled, base, atol=1e-12)


def test_mfcc_matches_brute_force_pipeline(fb20):
    rng = np.random.default_rng(22)
    x = rng.standard_normal(2500) * 30.0
    ours = mfcc(x, FS, FrameConfig(), fb20)
    expected = oracle_mfcc(x, FS)
    npt.assert_allclose(ours, expected, rtol=1e-9, atol=1e-9)


def test_mfcc_needs_matching_filterbank(fb20):
    cfg = FrameConfig(n_dft=1024)
    with pytest.raises(DataError):
        mfcc(np.zeros(2500), FS, cfg, fb20)


def test_mfcc_rejects_too_many_coeffs(fb20):
    with pytest.raises(DataError):
        mfcc(np.zeros(2500), FS, FrameConfig(), fb20, n_coeffs=20)


def test_dct_oracle_self_check():
    # the textbook DCT used by the mfcc oracle agrees with an orthonormality check
    rng = np.random.default_rng(23)
    v = rng.standard_normal(20)
    c = oracle_dct2_ortho(v)
    npt.assert_allclose(np.sum(c**2), np.sum(v**2), rtol=1e-12)
