"""Exception hierarchy and the CLI exit code for each error class."""


class SynboostError(Exception):
    """Base class for all trainer errors."""

    exit_code = 1
    code = "error"


class ConfigError(SynboostError):
    """Invalid configuration: bad flag value, unknown key, malformed config file."""

    exit_code = 2
    code = "config"


class InputError(SynboostError):
    """Bad input data: unreadable file, malformed synset record, untokenizable sentence."""

    exit_code = 3
    code = "input"


class DomainError(SynboostError, ValueError):
    """Model precondition violated: unknown expression or character, empty batch."""

    exit_code = 4
    code = "domain"


class DivergenceError(SynboostError):
    """Training produced a non-finite loss and was aborted."""

    exit_code = 5
    code = "divergence"
