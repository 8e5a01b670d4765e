"""Integration tests for the modgate CLI."""
