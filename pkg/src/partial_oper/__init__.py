"""Exact computation of limiting partial oper structures for Fuchsian systems on P^1."""

__version__ = "0.1.0"
