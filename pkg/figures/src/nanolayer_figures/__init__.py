"""Figure rendering for nanolayer run directories.

This package is a pure consumer: it reads the CSV/JSON artifacts that
``nanolayer run`` writes and renders the standard six-figure report.
It never recomputes physics and never modifies a run directory.
"""

from .io import FigureDataError, RunDir, discover, load_run
from .recipes import RECIPES, FigureRecipe, render

__all__ = [
    "FigureDataError",
    "FigureRecipe",
    "RECIPES",
    "RunDir",
    "discover",
    "load_run",
    "render",
]
