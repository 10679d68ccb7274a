"""EEG trial classification: spectral features and recurrent sequence models.

The pipeline mirrors a performance-error detection study: labeled 1 s trial
extraction from multichannel recordings, per-channel spectral features
(instantaneous frequency, spectral entropy, 11 MFCCs) assembled into an
N x 13 matrix per trial, and a bidirectional LSTM (or LSTM/GRU) classifier
evaluated with balanced repeated random splits.
"""

from ._version import __version__
from .errors import (
    ConfigError,
    DataError,
    TrainingDivergedError,
    ZeroPowerFrameError,
)
from .dsp import (
    FrameConfig,
    MelFilterbank,
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
from .io import (
    AnnotationEvent,
    AnnotationTrack,
    EegRecording,
    Trial,
    find_sync_offset,
    load_annotations,
    load_recording,
    save_annotations,
    save_recording,
    segment_trials,
)
from .synth import SynthSpec, synth_dataset
from .featurize import (
    Normalizer,
    TrialFeatures,
    apply_normalizer,
    featurize_trial,
    fit_normalizer,
    load_features,
    save_features,
)
from .estimator import SequenceClassifier, TrialFeaturizer
from .experiment import (
    ConfusionMatrix,
    ExperimentConfig,
    ExperimentReport,
    MetricsReport,
    compare_architectures,
    evaluate,
    evaluate_model,
    metrics,
    random_split,
    run_inter,
    run_intra,
    undersample,
)
