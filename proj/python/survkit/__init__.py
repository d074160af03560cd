"""Survival analysis toolkit: Kaplan-Meier estimation, Cox regression,
parametric fits, concordance scoring, and log-odds risk models."""

from ._survkit import *  # noqa: F401,F403
from ._survkit import __version__  # noqa: F401
