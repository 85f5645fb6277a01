"""Python bindings for the covjudge coverage-judging harness."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
