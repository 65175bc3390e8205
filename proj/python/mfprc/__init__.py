"""Multifunctional reservoir computing on a six-bar tensegrity robot."""

from ._mfprc import *  # noqa: F401,F403
from ._mfprc import __version__  # noqa: F401
