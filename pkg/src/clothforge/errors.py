"""Exception types shared across the pipeline.

Every error raised deliberately by this package derives from ClothforgeError,
so callers (in particular the CLI) can distinguish our failures from genuine
bugs and map them onto exit codes.
"""


class ClothforgeError(Exception):
    """Base class for all errors raised by clothforge."""


class ConfigError(ClothforgeError):
    """A configuration file failed validation.

    ``pointer`` is a JSON pointer ("/categories/0/count") locating the
    offending field, empty string for document-level problems.
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer

    def __str__(self) -> str:
        base = super().__str__()
        if self.pointer:
            return f"{base} (at {self.pointer})"
        return base


class GenerationError(ClothforgeError):
    """A sample could not be produced (e.g. template rejection ran out of attempts)."""


class SimulationDiverged(GenerationError):
    """The cloth solver produced non-finite state."""


class StageOrderError(ClothforgeError):
    """A pipeline stage was requested before the stage that feeds it has run."""


class WriteError(ClothforgeError):
    """A dataset file could not be written or read; the message names the path."""
