"""Shared exception types.

ConfigError marks bad user-facing configuration (CLI exits with status 2);
everything else surfaces as a runtime failure (CLI exits with status 1).
"""


class ConfigError(ValueError):
    """Invalid configuration: unsupported size, missing entry, bad argument."""


class PnmError(ValueError):
    """Malformed PPM/PGM input; message carries the offending byte offset."""


class ScalingListError(ValueError):
    """Malformed scaling-list file; message carries the offending line number."""


class BridgeError(RuntimeError):
    """External task-loss bridge failed: timeout, EOF, or protocol violation."""
