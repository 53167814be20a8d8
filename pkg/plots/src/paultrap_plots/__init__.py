"""Figure generation for paultrap experiment outputs."""

__version__ = "0.1.0"

from .render import FIGURES, SchemaError, render
