from .render import EmptySeries, FigureSpec, RenderResult, SchemaMismatch, render

__all__ = ["EmptySeries", "FigureSpec", "RenderResult", "SchemaMismatch", "render"]

__version__ = "0.1.0"
