"""
Exception hierarchy shared by every app of the toolkit.

Library code raises these; management commands turn them into
``CommandError`` with the documented exit codes.
"""


class LamelError(Exception):
    """Base class for all toolkit errors."""


class SmilesParseError(LamelError, ValueError):
    """Malformed or unsupported SMILES text."""

    def __init__(self, message, offset, smiles=''):
        self.offset = offset
        self.smiles = smiles
        super().__init__(f'{message} at offset {offset}')


class GraphError(LamelError, ValueError):
    """Invalid molecular graph or graph operation."""


class GraphletError(LamelError, ValueError):
    """Invalid graphlet enumeration or canonicalization request."""


class DigestCollisionError(GraphletError):
    """Two distinct canonical forms produced the same digest."""


class RidgeError(LamelError, ValueError):
    """Invalid ridge regression input."""


class RankDeficientError(RidgeError):
    """Unregularized fit on a rank-deficient design with fallback disabled."""


class MetaLearningError(LamelError, ValueError):
    """Invalid meta-learning input."""


class LeakageError(LamelError):
    """Target-task samples found among support-task samples."""


class TaskDataError(LamelError, ValueError):
    """Dataset ingestion or task assembly failure."""


class UndefinedMetricError(LamelError, ValueError):
    """Metric is mathematically undefined for the given inputs."""


class ConfigError(LamelError, ValueError):
    """Invalid experiment configuration."""


class FormatError(LamelError, ValueError):
    """Malformed feature, coefficient or model file."""
