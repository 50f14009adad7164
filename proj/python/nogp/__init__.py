"""Infinite-width neural-operator Gaussian processes on the flat torus.

Thin wrapper over the C++ core; configurations are passed as JSON strings
(see ``single_hidden_fno_config`` for the common single-hidden-layer case).
"""

from ._nogp import *  # noqa: F401,F403
from ._nogp import __version__  # noqa: F401
