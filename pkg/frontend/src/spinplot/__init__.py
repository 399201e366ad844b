"""Batch figure renderer for spininterp CLI outputs: domain-colored
partition-function maps, interpolating-curve tube diagrams, zero scatter
overlays, and Curie-Weiss bound curves."""

__version__ = "0.1.0"

from spinplot.jobs import PlotJob, PlotStyle, load_jobs  # noqa: F401
from spinplot.render import domain_color_rgb, render  # noqa: F401
