"""Norm audits, generalization bounds and randomised inequality checks for RNN cells."""

from ._rnngen import *  # noqa: F401,F403
from ._rnngen import InvalidInput, ParseError, Model, Dataset  # noqa: F401

__version__ = "0.1.0"
