"""Figure rendering and qualitative regression checks for subwave CSV output.

Every figure is defined by a FigureSpec: which CSV files it consumes, how
the panels are drawn, and a checklist of qualitative features the data must
exhibit.  Rendering is strictly read-only over the CSVs; no physics is
recomputed here.
"""
from .specs import REGISTRY, FigureSpec

__all__ = ["REGISTRY", "FigureSpec"]
__version__ = "0.1.0"
