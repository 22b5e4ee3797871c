"""Exception hierarchy shared by all padbench modules."""


class PadbenchError(Exception):
    """Base class for padbench errors."""


class DomainError(PadbenchError, ValueError):
    """Input violates an operation's precondition."""


class ParseError(DomainError):
    """A filename or record could not be parsed."""


class FormatError(PadbenchError):
    """A persisted artefact is corrupt or has an unsupported schema."""


class ConfigurationError(PadbenchError):
    """Required configuration (e.g. a backbone checkpoint) is missing or invalid."""
