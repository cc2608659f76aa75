"""senet-desk - masked transformer segmentation for camouflaged and salient objects."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("senet-desk")
except PackageNotFoundError:
    # Fallback version for development checkouts
    __version__ = "0.0.0.dev0+unknown"

__all__ = ["__version__"]
