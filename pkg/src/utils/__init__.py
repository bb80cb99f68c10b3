"""Utility modules for the DCSMD-SW simulator."""
