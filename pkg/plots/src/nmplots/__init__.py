"""Figure rendering for result-table CSVs.

The package consumes the delimited tables written by the detection tool and
turns each one into a publication-style figure. It depends only on the CSV
layout, never on the tool's internals, so the two install and evolve
independently.
"""

from .figures import FigureSpec, render, render_auto
from .tables import Table, read_table

__all__ = ["FigureSpec", "Table", "read_table", "render", "render_auto"]
__version__ = "0.1.0"
