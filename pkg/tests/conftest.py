"""Pytest hooks for the core test suite (helpers live in oracles.py)."""
