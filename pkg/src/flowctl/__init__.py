"""Microscopic intersection simulator with a policy-gradient signal controller."""

__version__ = "0.1.0"
