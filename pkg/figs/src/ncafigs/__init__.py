"""Figure rendering for the dynamical-map simulator's CSV outputs."""

__version__ = "0.1.0"

from .manifest import Manifest, RunEntry, SchemaError, load_csv, read_manifest
from .render import FigureRecipe, render

__all__ = [
    "__version__",
    "Manifest",
    "RunEntry",
    "SchemaError",
    "load_csv",
    "read_manifest",
    "FigureRecipe",
    "render",
]
