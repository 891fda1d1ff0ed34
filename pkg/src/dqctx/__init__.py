"""Context-based data quality assessment over relational data."""

__version__ = "0.1.0"
