"""Disjunctive invariants and loop summaries for affine loops."""

__version__ = "0.1.0"
