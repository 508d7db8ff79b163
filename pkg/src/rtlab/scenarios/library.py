"""Imports every scenario module so that each registers itself."""

from rtlab.scenarios import classical, features, losses, quantum  # noqa: F401
