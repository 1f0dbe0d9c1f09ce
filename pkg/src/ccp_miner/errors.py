"""Exception hierarchy shared across modules.

ConfigError and InputError map to CLI exit codes 2 and 3; anything else
that escapes is treated as an internal error (exit 4).
"""


class CcpMinerError(Exception):
    """Base class for all ccp-miner errors."""


class ConfigError(CcpMinerError):
    """Bad configuration: missing files, malformed models, invalid constants."""


class ModelLoadError(ConfigError):
    """A term or english model file failed to parse or compile."""


class InputError(CcpMinerError):
    """Bad input data: unreadable streams, empty corpora, malformed series."""
