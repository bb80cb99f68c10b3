"""
Integration tests package
"""

