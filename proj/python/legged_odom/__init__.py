"""Proprioceptive legged odometry (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

VARIANTS = ("ekf", "iekf", "fl-single", "fl-combined", "dr")
