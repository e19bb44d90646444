"""Static-figure rendering for the hdelm solver's CSV outputs."""

from .render import KINDS, PlotJob, RenderResult, SchemaError, render

__version__ = "0.1.0"
