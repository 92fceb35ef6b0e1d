"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
InternalError (and anything unexpected) -> 3.
"""


class PipelineError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PipelineError):
    """Invalid configuration: unknown keys, bad values, missing paths."""


class DataError(PipelineError):
    """Malformed or unusable input data (files, corpora, catalogs)."""


class InternalError(PipelineError):
    """An internal invariant was violated; indicates a bug, not bad input."""
