"""Exception types shared across the package.

The CLI maps these onto exit codes, so library code should raise the most
specific class that applies rather than bare ValueError.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (unknown key, bad type, ...)."""


class DataError(ValueError):
    """Malformed input data: file format violations, invalid annotations,
    signals that violate a precondition (non-finite, empty, zero power)."""


class ZeroPowerFrameError(DataError):
    """A spectrogram frame has zero total power, so normalized spectral
    quantities (centroid, entropy) are undefined for it."""


class TrainingDivergedError(RuntimeError):
    """A non-finite loss or activation was produced during training."""
