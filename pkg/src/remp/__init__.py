"""Crowdsourced collective entity resolution over relational knowledge bases."""

__version__ = "0.1.0"
