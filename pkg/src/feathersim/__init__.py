"""Co-design toolkit for asymmetric flapping feathers."""

__version__ = "0.1.0"
