"""Floquet analysis of a periodically shaken complex-plane potential well."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
