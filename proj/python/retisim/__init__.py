"""Laser-powered retinal stimulator link simulator.

Thin wrapper over the C++ core; all operations live in retisim._core.
"""

from retisim._core import *  # noqa: F401,F403
from retisim._core import __doc__  # noqa: F401

__version__ = "1.0.0"
