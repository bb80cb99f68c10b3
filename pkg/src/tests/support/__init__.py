"""Test support package."""


