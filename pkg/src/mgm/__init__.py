"""Sub-multigraph matching over labeled, attributed multigraphs."""

__version__ = "0.1.0"
