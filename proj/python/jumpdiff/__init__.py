"""Euler-Maruyama simulation and verification kernels for 1-D jump-diffusions.

Thin re-export of the compiled extension; every operation lives in C++ and is
deterministic for a fixed seed regardless of thread count.
"""

from ._core import *  # noqa: F401,F403
from . import _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
__version__ = "1.0.0"
