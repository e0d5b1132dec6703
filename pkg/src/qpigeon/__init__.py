"""Two-state-vector toolkit for the three-particle, two-box pigeonhole setup."""

__version__ = "0.1.0"
