"""Bundled scenario files for the reference experiments."""
