"""Neuroevolution-based test generation for sprite games with a novelty tiebreaker."""

__version__ = "0.1.0"
