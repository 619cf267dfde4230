"""Python bindings for the vpdirac particle solver."""

from ._vpdirac import *  # noqa: F401,F403
from ._vpdirac import __version__  # noqa: F401
