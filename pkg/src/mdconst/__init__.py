"""Joint MED/MPD multi-dimensional constellation design toolkit."""

__version__ = "0.1.0"
