"""Driven two-mode model: quantum and mean-field simulations."""

from _dimer import *  # noqa: F401,F403
