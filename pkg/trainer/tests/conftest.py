"""Pytest hooks for the trainer test suite (helpers live in datagen.py)."""
