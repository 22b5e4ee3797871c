"""Presentation attack detection toolkit: ISO/IEC 30107-3 metrics, attack-instrument
taxonomy, PADNet transfer-learning models and embedding visualisation."""

from padbench.errors import (
    ConfigurationError,
    DomainError,
    FormatError,
    PadbenchError,
    ParseError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "FormatError",
    "PadbenchError",
    "ParseError",
    "__version__",
]
