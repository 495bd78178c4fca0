"""Exception hierarchy. Every error names the pipeline module that raised it."""

from __future__ import annotations


class AdlError(Exception):
    """Base class for all pipeline errors."""

    module = "adl_llm"

    def __str__(self) -> str:
        return f"[{self.module}] {super().__str__()}"


class ParseError(AdlError):
    module = "ingest"

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(AdlError):
    module = "ingest"


class RecordError(ParseError):
    pass


class ConfigurationError(AdlError):
    module = "config"


class ContractViolation(AdlError):
    module = "segmentation"


class TransportError(AdlError):
    module = "llm_client"


class CacheMissError(AdlError):
    module = "llm_client"


class BuildError(AdlError):
    module = "fewshot"


class SelectionError(AdlError):
    module = "fewshot"


class ExtractionError(AdlError):
    module = "label_extract"


class ScoringError(AdlError):
    module = "evaluation"
