"""Bounded model checking for the release/acquire/relaxed fragment of C11."""

__version__ = "0.1.0"
