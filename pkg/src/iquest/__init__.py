"""Question-guided knowledge-graph QA with a two-hop relevance scorer."""

__version__ = "0.1.0"
