"""Perimeters, variation measures and random sets of finite perimeter."""
__version__ = "0.1.0"
