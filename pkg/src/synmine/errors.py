"""Exception hierarchy and the CLI exit code for each error class."""


class SynmineError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1
    code = "error"


class ConfigError(SynmineError):
    """Invalid configuration: unknown format tag, bad flag value, malformed config file."""

    exit_code = 2
    code = "config"


class InputError(SynmineError):
    """Bad input data: unreadable file, gold/prediction coverage mismatch."""

    exit_code = 3
    code = "input"


class DomainError(SynmineError, ValueError):
    """Mathematical precondition violated: empty distribution, unknown word-piece, length-1 piece."""

    exit_code = 4
    code = "domain"


class DegenerateEmbeddingError(DomainError):
    """A value embedded to the zero vector and cannot be normalized."""

    code = "degenerate-embedding"


class TransportError(SynmineError):
    """Embedding service unreachable or persistently failing after retries."""

    exit_code = 5
    code = "transport"


class PipelineError(SynmineError):
    """Wraps a stage failure with the stage name and the underlying machine-readable code."""

    exit_code = 6
    code = "pipeline"

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        cause_code = getattr(cause, "code", "error")
        self.code = f"pipeline:{stage}:{cause_code}"
        super().__init__(f"stage {stage!r} failed [{cause_code}]: {cause}")
        if isinstance(cause, SynmineError):
            self.exit_code = cause.exit_code
