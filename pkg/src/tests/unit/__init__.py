"""
Unit tests package
"""

