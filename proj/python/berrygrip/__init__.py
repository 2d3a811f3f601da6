"""Tendon-driven soft gripper simulation core.

Thin re-export of the compiled module; everything lives in C++.
"""

from ._berrygrip import *  # noqa: F401,F403
from ._berrygrip import __doc__  # noqa: F401

__version__ = "0.1.0"
