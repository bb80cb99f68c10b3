"""
Simulation pipeline: engine, presets, experiment execution and verification.
"""
