"""Figure rendering for slicesim run artifacts."""

__version__ = "0.1.0"

from .render import PlotError, PlotSpec, moving_average, render  # noqa: F401
