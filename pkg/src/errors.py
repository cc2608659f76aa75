"""Exception hierarchy for senet-desk."""

from pathlib import Path
from typing import Optional, Union


class SenetError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(SenetError, ValueError):
    """Shapes or extents do not agree."""


class ContractError(SenetError, ValueError):
    """A documented precondition was violated."""


class DegenerateTargetError(SenetError, ValueError):
    """The ground truth holds no foreground, so the quantity is undefined."""


class ImageFormatError(SenetError):
    """An image file could not be decoded."""


class CheckpointError(SenetError):
    """A checkpoint file is malformed or does not match the model."""


class ManifestParseError(SenetError):
    """A manifest line could not be parsed or references missing files."""

    def __init__(
        self,
        message: str,
        path: Optional[Union[str, Path]] = None,
        line_number: Optional[int] = None,
    ):
        self.path = Path(path) if path is not None else None
        self.line_number = line_number
        location = ""
        if self.path is not None:
            location = str(self.path)
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        super().__init__(f"{location}{message}")
