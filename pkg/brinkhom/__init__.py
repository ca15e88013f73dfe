"""Homogenization toolkit for flows through critically perforated domains."""

__version__ = "1.0.0"
