"""Test suite for the DCSMD-SW simulator."""
