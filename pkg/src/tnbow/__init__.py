"""Numerical checks for bows, Nahm data and abelian instantons on multi-Taub-NUT."""

__version__ = "0.1.0"
