"""Goal-oriented uncertainty bounds for path-space quantities of interest."""
__version__ = "0.1.0"
