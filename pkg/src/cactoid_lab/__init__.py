"""Finite models of generalized cactoids and their surface approximations."""
from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["metric_core", "surfaces", "gluing", "cactoid", "curves", "approximation", "cli"]
