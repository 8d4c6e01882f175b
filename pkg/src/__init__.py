"""Package init for the nullgeo toolkit source code.

Makes 'src' importable so that 'python -m src.main' works consistently.
"""

from .constants import TOOLKIT_VERSION as __version__

__all__ = ["__version__"]
