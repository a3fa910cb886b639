"""Reflected generalized BSDEs on finite scenario trees."""

from ._core import Experiment, GrbsdeError, format_real

__all__ = ["Experiment", "GrbsdeError", "format_real", "load"]


def load(path):
    """Parse and validate an experiment file."""
    return Experiment.from_file(str(path))
