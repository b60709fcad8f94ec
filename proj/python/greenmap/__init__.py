"""Riemann maps onto the unit disk and weak-conformal maps onto the unit ball,
built from Green's function gradient flows."""

from ._greenmap import *  # noqa: F401,F403
from ._greenmap import __version__  # noqa: F401
