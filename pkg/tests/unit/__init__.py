"""Unit tests for modgate components."""
