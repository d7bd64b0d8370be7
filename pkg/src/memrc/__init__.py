"""Volatile-memristor reservoir computing (PDFN) simulator."""

__version__ = "0.1.0"
