"""Figure rendering for slpkit experiment CSVs."""

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    PlotError,
    load_spec,
    render,
    spec_from_dict,
)

__version__ = "0.1.0"
