"""Domain models for the DCSMD-SW simulator."""
