"""Python snippet worker package for the scg runner protocol."""

__version__ = "0.1.0"
