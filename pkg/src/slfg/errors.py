"""Exception hierarchy shared by all pipeline stages."""

from __future__ import annotations


class SLFGError(Exception):
    """Base class for all pipeline errors."""


class InvalidArgumentError(SLFGError, ValueError):
    pass


class InvalidStateError(SLFGError):
    pass


class IngestError(SLFGError):
    """A frame directory is missing frames or has a bad manifest."""


class BackendUnavailableError(SLFGError):
    """A remote model endpoint could not be reached after retries."""


class MalformedResponseError(SLFGError):
    pass


class StorageError(SLFGError):
    pass


class CorruptIndexError(StorageError):
    def __init__(self, path, reason: str) -> None:
        super().__init__(f"corrupt index file {path}: {reason}")
        self.path = path


class SchemaError(SLFGError):
    """Dataset file violates the record schema."""


class ConfigError(SLFGError):
    pass


class StageError(SLFGError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
