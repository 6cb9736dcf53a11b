"""Desk-scale adiabatic quantum computation workbench."""

__version__ = "0.1.0"
