"""modgate test suite."""
