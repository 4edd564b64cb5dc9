"""Information geometry toolkit: surfaces, statistical models, divergences, EM and natural gradients."""

from . import datasets, emcore, infogeo, models, natgrad, surfaces
from .errors import ArgumentError, InfogeomError, NumericalError

__version__ = "0.1.0"

__all__ = [
    "surfaces",
    "models",
    "infogeo",
    "emcore",
    "natgrad",
    "datasets",
    "InfogeomError",
    "ArgumentError",
    "NumericalError",
]
